//! Convex integrands `f(omega, x_1, ..., x_N)` and their partial subderivatives.
//!
//! An [`Integrand`] supplies `f`, a monotone selection `f_n` from each partial
//! subdifferential, and optionally a closed-form generalized inverse
//! `inf { x_n >= 0 : f_n(x) >= c }`. Integrands without a closed form are
//! inverted numerically by [`crate::rootfind`].
//!
//! Implementations must be pure: the solvers evaluate them concurrently across
//! grid points.

mod kl;
mod lambert;
mod minimax;
mod proximal;
mod quadratic;

pub use kl::{weighted_kl_f, weighted_kl_fn, weighted_kl_inverse, proximal_kl_inverse, WeightedKl};
pub use lambert::{lambert_w0, lambert_w0_exp};
pub use minimax::{minimax_detect_fn, CostProfile, MinimaxDetect, SmoothedMinimaxDetect};
pub use proximal::{proximal_fn, Proximal};
pub use quadratic::Quadratic;

use std::sync::Arc;

use crate::grid::Grid;
use crate::bcd::WeightMatrix;

/// Where an integrand is evaluated: a location `omega` and, when it is a grid
/// node, its index. Grid-sampled data is read directly at nodes and linearly
/// interpolated elsewhere.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Site {
    pub omega: f64,
    pub node: Option<usize>,
}

impl Site {
    pub fn node(grid: &Grid, k: usize) -> Self {
        Self { omega: grid.points()[k], node: Some(k) }
    }

    pub fn at(omega: f64) -> Self {
        Self { omega, node: None }
    }
}

pub trait Integrand: Sync {
    /// Number of densities `N`.
    fn dim(&self) -> usize;

    /// `f(omega, x)`; may be `+inf`.
    fn value(&self, at: Site, x: &[f64]) -> f64;

    /// `f_n(omega, x)`, nondecreasing in `x[n]`.
    fn partial(&self, n: usize, at: Site, x: &[f64]) -> f64;

    /// Closed-form generalized inverse of `f_n` in `x[n]` at `level`; `x[n]`
    /// itself is ignored. `None` requests numeric inversion.
    fn inverse(&self, _n: usize, _at: Site, _x: &[f64], _level: f64) -> Option<f64> {
        None
    }

    /// Closed-form inverse of `f_n + rho * (x_n - anchor)` when one exists.
    fn proximal_inverse(&self, _n: usize, _at: Site, _x: &[f64], _level: f64, _anchor: f64, _rho: f64) -> Option<f64> {
        None
    }

    /// Joint subgradient used by the optimality certificate. Integrands
    /// with kinks may choose, among valid joint subgradients at `x`, the one
    /// that minimizes the residuals for the given levels and bounds. The
    /// default is the fixed selection [`Integrand::partial`].
    fn certificate_subgradient(
        &self,
        at: Site,
        x: &[f64],
        _levels: &[f64],
        _lower: &[f64],
        _upper: &[f64],
        out: &mut [f64],
    ) {
        for (n, o) in out.iter_mut().enumerate() {
            *o = self.partial(n, at, x);
        }
    }

    /// Joint minimizer of `f(x) + rho/2 |x - anchor|^2 - <levels, x>` over
    /// the box `[lower, upper]`, written to `out`. Returns `false` when no
    /// closed form is available.
    #[allow(clippy::too_many_arguments)]
    fn proximal_point(
        &self,
        _at: Site,
        _anchor: &[f64],
        _levels: &[f64],
        _rho: f64,
        _lower: &[f64],
        _upper: &[f64],
        _out: &mut [f64],
    ) -> bool {
        false
    }

    fn name(&self) -> &str {
        "custom"
    }
}

impl<T: Integrand + ?Sized> Integrand for &T {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn value(&self, at: Site, x: &[f64]) -> f64 {
        (**self).value(at, x)
    }
    fn partial(&self, n: usize, at: Site, x: &[f64]) -> f64 {
        (**self).partial(n, at, x)
    }
    fn inverse(&self, n: usize, at: Site, x: &[f64], level: f64) -> Option<f64> {
        (**self).inverse(n, at, x, level)
    }
    fn proximal_inverse(&self, n: usize, at: Site, x: &[f64], level: f64, anchor: f64, rho: f64) -> Option<f64> {
        (**self).proximal_inverse(n, at, x, level, anchor, rho)
    }
    fn certificate_subgradient(&self, at: Site, x: &[f64], levels: &[f64], lower: &[f64], upper: &[f64], out: &mut [f64]) {
        (**self).certificate_subgradient(at, x, levels, lower, upper, out)
    }
    fn proximal_point(
        &self,
        at: Site,
        anchor: &[f64],
        levels: &[f64],
        rho: f64,
        lower: &[f64],
        upper: &[f64],
        out: &mut [f64],
    ) -> bool {
        (**self).proximal_point(at, anchor, levels, rho, lower, upper, out)
    }
    fn name(&self) -> &str {
        (**self).name()
    }
}

/// A function of `omega` known through its samples on a grid.
#[derive(Debug, Clone)]
pub struct Sampled {
    grid: Arc<Grid>,
    values: Arc<[f64]>,
}

impl Sampled {
    pub fn new(grid: Arc<Grid>, values: Vec<f64>) -> crate::Result<Self> {
        if values.len() != grid.len() {
            return Err(crate::Error::Length { what: "sampled profile", expected: grid.len(), got: values.len() });
        }
        Ok(Self { grid, values: values.into() })
    }

    #[inline]
    pub fn at(&self, site: Site) -> f64 {
        match site.node {
            Some(k) => self.values[k],
            None => self.grid.interpolate(&self.values, site.omega),
        }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

/// Discrete objective `sum_k f(omega_k, a_{., k}) mu_k` in index order.
pub fn discrete_objective(integrand: &dyn Integrand, a: &WeightMatrix, grid: &Grid) -> f64 {
    let mut x = vec![0.0; a.rows()];
    let mut total = 0.0;
    for k in 0..grid.len() {
        a.column_into(k, &mut x);
        total += integrand.value(Site::node(grid, k), &x) * grid.masses()[k];
    }
    total
}
