//! Weighted sum of Kullback-Leibler divergences `sum_n alpha_n D(p_N || p_n)`
//! against the last density `p_N`.

use super::lambert::lambert_w0_exp;
use super::{Integrand, Site};
use crate::error::{Error, Result};

const WEIGHT_SUM_TOL: f64 = 1e-12;

/// `f(x) = sum_{n<N} alpha_n log(x_N / x_n) x_N`.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedKl {
    alpha: Vec<f64>,
}

impl WeightedKl {
    /// `alpha` holds the `N - 1` convex weights; the reference density is the last one.
    pub fn new(alpha: Vec<f64>) -> Result<Self> {
        if alpha.is_empty() {
            return Err(Error::Config("weighted_kl needs at least one weight".into()));
        }
        if alpha.iter().any(|&a| !(a >= 0.0) || !a.is_finite()) {
            return Err(Error::Config("weighted_kl weights must be nonnegative".into()));
        }
        let sum: f64 = alpha.iter().sum();
        if (sum - 1.0).abs() > WEIGHT_SUM_TOL {
            return Err(Error::Config(format!("weighted_kl weights must sum to 1, got {sum}")));
        }
        Ok(Self { alpha })
    }

    pub fn alpha(&self) -> &[f64] {
        &self.alpha
    }
}

pub fn weighted_kl_f(alpha: &[f64], x: &[f64]) -> f64 {
    let reference = x[alpha.len()];
    if reference == 0.0 {
        return 0.0;
    }
    let mut total = 0.0;
    for (&a, &xn) in alpha.iter().zip(x) {
        if a == 0.0 {
            continue;
        }
        if xn == 0.0 {
            return f64::INFINITY;
        }
        total += a * (reference / xn).ln() * reference;
    }
    total
}

pub fn weighted_kl_fn(alpha: &[f64], n: usize, x: &[f64]) -> f64 {
    let last = alpha.len();
    let reference = x[last];
    if n < last {
        let a = alpha[n];
        if reference == 0.0 || a == 0.0 {
            return 0.0;
        }
        if x[n] == 0.0 {
            return f64::NEG_INFINITY;
        }
        return -a * reference / x[n];
    }
    if reference == 0.0 {
        return f64::NEG_INFINITY;
    }
    let mut total = 1.0;
    for (&a, &xn) in alpha.iter().zip(x) {
        if a == 0.0 {
            continue;
        }
        if xn == 0.0 {
            return f64::INFINITY;
        }
        total += a * (reference / xn).ln();
    }
    total
}

/// Generalized inverse `inf { x_n >= 0 : f_n(x) >= level }`.
pub fn weighted_kl_inverse(alpha: &[f64], n: usize, x: &[f64], level: f64) -> f64 {
    let last = alpha.len();
    if n < last {
        let a = alpha[n];
        let reference = x[last];
        if a == 0.0 || reference == 0.0 {
            // f_n vanishes identically.
            return if level <= 0.0 { 0.0 } else { f64::INFINITY };
        }
        if level >= 0.0 {
            return f64::INFINITY;
        }
        return -(a / level) * reference;
    }
    match log_geometric_mean(alpha, x) {
        None => 0.0,
        Some(log_g) => (level - 1.0 + log_g).exp(),
    }
}

/// Inverse of `f_n + rho (x_n - anchor)` in `x_n`.
///
/// For `n < N` this is the positive root of `rho x^2 - (c + rho h) x - alpha_n x_N = 0`;
/// for the reference density it is `W(rho exp(c + rho h - 1) prod x_m^alpha_m) / rho`.
pub fn proximal_kl_inverse(alpha: &[f64], n: usize, x: &[f64], level: f64, anchor: f64, rho: f64) -> f64 {
    if rho == 0.0 {
        return weighted_kl_inverse(alpha, n, x, level);
    }
    let last = alpha.len();
    let s = level + rho * anchor;
    if n < last {
        let q = alpha[n] * x[last];
        if q == 0.0 {
            return (s / rho).max(0.0);
        }
        let disc = (s * s + 4.0 * rho * q).sqrt();
        return if s >= 0.0 { (s + disc) / (2.0 * rho) } else { 2.0 * q / (disc - s) };
    }
    match log_geometric_mean(alpha, x) {
        None => 0.0,
        Some(log_g) => lambert_w0_exp(s - 1.0 + log_g + rho.ln()) / rho,
    }
}

/// `ln prod_m x_m^alpha_m`, or `None` when some weighted `x_m` is zero.
fn log_geometric_mean(alpha: &[f64], x: &[f64]) -> Option<f64> {
    let mut acc = 0.0;
    for (&a, &xm) in alpha.iter().zip(x) {
        if a == 0.0 {
            continue;
        }
        if xm == 0.0 {
            return None;
        }
        acc += a * xm.ln();
    }
    Some(acc)
}

impl Integrand for WeightedKl {
    fn dim(&self) -> usize {
        self.alpha.len() + 1
    }

    fn value(&self, _at: Site, x: &[f64]) -> f64 {
        weighted_kl_f(&self.alpha, x)
    }

    fn partial(&self, n: usize, _at: Site, x: &[f64]) -> f64 {
        weighted_kl_fn(&self.alpha, n, x)
    }

    fn inverse(&self, n: usize, _at: Site, x: &[f64], level: f64) -> Option<f64> {
        Some(weighted_kl_inverse(&self.alpha, n, x, level))
    }

    fn proximal_inverse(&self, n: usize, _at: Site, x: &[f64], level: f64, anchor: f64, rho: f64) -> Option<f64> {
        Some(proximal_kl_inverse(&self.alpha, n, x, level, anchor, rho))
    }

    fn name(&self) -> &str {
        "weighted_kl"
    }
}
