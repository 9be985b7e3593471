//! Sample grids, the linear-interpolation (hat) basis and the discrete inner
//! product `<values, mu>`.
//!
//! Every basis function of the uniform grid is given the mass `mu_k = step`,
//! including the two boundary hats. Exact integration of a truncated boundary
//! hat would give `step / 2`; the full-step convention is kept so that results
//! line up with the published reference numbers.

use crate::error::{Error, Result};

/// Relative slack accepted when checking that the step divides the interval.
const DIVISIBILITY_RTOL: f64 = 1e-9;

/// Ordered sample points together with the masses of their basis functions.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    points: Vec<f64>,
    masses: Vec<f64>,
    step: Option<f64>,
}

impl Grid {
    /// Regular grid `lo, lo + step, ..., hi` with `mu_k = step` everywhere.
    pub fn uniform(lo: f64, hi: f64, step: f64) -> Result<Self> {
        if !(step > 0.0) || !step.is_finite() {
            return Err(Error::Config(format!("grid step must be positive, got {step}")));
        }
        if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
            return Err(Error::Config(format!("grid needs lo < hi, got [{lo}, {hi}]")));
        }
        let cells = (hi - lo) / step;
        let rounded = cells.round();
        if rounded < 1.0 || (cells - rounded).abs() > DIVISIBILITY_RTOL * cells.max(1.0) {
            return Err(Error::Config(format!(
                "grid step {step} does not divide [{lo}, {hi}] ({cells} cells)"
            )));
        }
        let cells = rounded as usize;
        let mut points: Vec<f64> = (0..=cells).map(|k| lo + k as f64 * step).collect();
        points[cells] = hi;
        let masses = vec![step; cells + 1];
        Ok(Self { points, masses, step: Some(step) })
    }

    /// Grid from explicit points and masses.
    pub fn from_parts(points: Vec<f64>, masses: Vec<f64>) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::Config("a grid needs at least two points".into()));
        }
        if masses.len() != points.len() {
            return Err(Error::Length { what: "grid masses", expected: points.len(), got: masses.len() });
        }
        if points.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::Config("grid points must be strictly increasing".into()));
        }
        if masses.iter().any(|&m| !(m > 0.0) || !m.is_finite()) {
            return Err(Error::Config("grid masses must be positive and finite".into()));
        }
        Ok(Self { points, masses, step: None })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn masses(&self) -> &[f64] {
        &self.masses
    }

    /// Spacing of a uniform grid; `None` for grids built from explicit parts.
    pub fn step(&self) -> Option<f64> {
        self.step
    }

    pub fn lo(&self) -> f64 {
        self.points[0]
    }

    pub fn hi(&self) -> f64 {
        self.points[self.points.len() - 1]
    }

    pub fn max_mass(&self) -> f64 {
        self.masses.iter().copied().fold(0.0, f64::max)
    }

    /// Piecewise-linear interpolant through `(omega_k, weights_k)`, zero
    /// outside `[omega_1, omega_K]`.
    pub fn interpolate(&self, weights: &[f64], omega: f64) -> f64 {
        debug_assert_eq!(weights.len(), self.len());
        match self.locate(omega) {
            None => 0.0,
            Some((k, t)) => {
                if t == 0.0 {
                    weights[k]
                } else {
                    (1.0 - t) * weights[k] + t * weights[k + 1]
                }
            }
        }
    }

    /// Cell containing `omega` and the fractional position inside it.
    /// Grid nodes report `t = 0` exactly.
    pub fn locate(&self, omega: f64) -> Option<(usize, f64)> {
        let last = self.len() - 1;
        if !(omega >= self.points[0] && omega <= self.points[last]) {
            return None;
        }
        let k = match self.points.binary_search_by(|p| p.partial_cmp(&omega).unwrap()) {
            Ok(k) => return Some((k, 0.0)),
            Err(idx) => idx - 1,
        };
        let (a, b) = (self.points[k], self.points[k + 1]);
        Some((k, (omega - a) / (b - a)))
    }

    /// `sum_k values_k * mu_k`, accumulated in index order.
    pub fn integrate(&self, values: &[f64]) -> f64 {
        debug_assert_eq!(values.len(), self.len());
        values.iter().zip(&self.masses).fold(0.0, |acc, (v, m)| acc + v * m)
    }
}

/// Free-standing form of [`Grid::uniform`].
pub fn make_uniform_grid(lo: f64, hi: f64, step: f64) -> Result<Grid> {
    Grid::uniform(lo, hi, step)
}

pub fn interpolate(weights: &[f64], grid: &Grid, omega: f64) -> f64 {
    grid.interpolate(weights, omega)
}

pub fn discrete_integral(values: &[f64], grid: &Grid) -> f64 {
    grid.integrate(values)
}
