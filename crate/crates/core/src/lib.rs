//! Minimization of integral functionals over densities confined to bands.
//!
//! Each unknown density `p_n` lies between a lower and an upper envelope and
//! has unit mass. The objective is `int f(omega, p_1(omega), ..., p_N(omega))`
//! for a convex integrand `f`. Densities are discretized on a uniform hat
//! basis and solved by block coordinate descent ([`bcd`]) or, for integrands
//! that are merely convex, by an outer proximal loop ([`prox`]).

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop, clippy::too_many_arguments)]

pub mod bands;
pub mod bcd;
pub mod cli;
pub mod error;
pub mod grid;
pub mod integrand;
pub mod oracle;
pub mod prox;
pub mod residuals;
pub mod rootfind;

pub use error::{Error, Result};
