use std::sync::Arc;

use super::{Integrand, Sampled, Site};
use crate::error::{Error, Result};
use crate::grid::Grid;

/// `f(omega, x) + rho/2 sum_n (x_n - h_n(omega))^2` for anchors `h_n` given on
/// the grid. Strictly convex whenever the base integrand is convex.
pub struct Proximal<'a> {
    base: &'a dyn Integrand,
    anchors: Vec<Sampled>,
    rho: f64,
}

impl<'a> Proximal<'a> {
    pub fn new(base: &'a dyn Integrand, grid: Arc<Grid>, anchors: Vec<Vec<f64>>, rho: f64) -> Result<Self> {
        if anchors.len() != base.dim() {
            return Err(Error::Length { what: "proximal anchors", expected: base.dim(), got: anchors.len() });
        }
        if !(rho >= 0.0) || !rho.is_finite() {
            return Err(Error::Config(format!("penalty weight must be nonnegative, got {rho}")));
        }
        let anchors = anchors.into_iter().map(|h| Sampled::new(grid.clone(), h)).collect::<Result<_>>()?;
        Ok(Self { base, anchors, rho })
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn anchor(&self, n: usize, at: Site) -> f64 {
        self.anchors[n].at(at)
    }

    pub fn base(&self) -> &dyn Integrand {
        self.base
    }
}

/// `f_n(omega, x) + rho (x_n - anchor)`.
pub fn proximal_fn(base: &dyn Integrand, n: usize, at: Site, x: &[f64], anchor: f64, rho: f64) -> f64 {
    let f = base.partial(n, at, x);
    if rho == 0.0 {
        return f;
    }
    f + rho * (x[n] - anchor)
}

impl Integrand for Proximal<'_> {
    fn dim(&self) -> usize {
        self.base.dim()
    }

    fn value(&self, at: Site, x: &[f64]) -> f64 {
        let penalty: f64 = x.iter().enumerate().map(|(n, &xn)| (xn - self.anchor(n, at)).powi(2)).sum();
        self.base.value(at, x) + 0.5 * self.rho * penalty
    }

    fn partial(&self, n: usize, at: Site, x: &[f64]) -> f64 {
        proximal_fn(self.base, n, at, x, self.anchor(n, at), self.rho)
    }

    fn inverse(&self, n: usize, at: Site, x: &[f64], level: f64) -> Option<f64> {
        if self.rho == 0.0 {
            return self.base.inverse(n, at, x, level);
        }
        self.base.proximal_inverse(n, at, x, level, self.anchor(n, at), self.rho)
    }

    /// The base certificate at levels shifted by the penalty gradient.
    fn certificate_subgradient(&self, at: Site, x: &[f64], levels: &[f64], lower: &[f64], upper: &[f64], out: &mut [f64]) {
        let shift: Vec<f64> = (0..x.len()).map(|n| self.rho * (x[n] - self.anchor(n, at))).collect();
        let shifted: Vec<f64> = levels.iter().zip(&shift).map(|(c, s)| c - s).collect();
        self.base.certificate_subgradient(at, x, &shifted, lower, upper, out);
        for (o, s) in out.iter_mut().zip(&shift) {
            *o += s;
        }
    }

    fn name(&self) -> &str {
        "proximal"
    }
}
