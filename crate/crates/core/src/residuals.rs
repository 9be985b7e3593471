//! Complementary-slackness residuals and the optimality-gap bound.
//!
//! For a feasible candidate `A` and normalization constants `c`:
//!
//! ```text
//! e''_n = < (a_n - upper_n) (f_n(A) - c_n)^-, mu >
//! e'_n  = < (a_n - lower_n) (f_n(A) - c_n)^+, mu >
//! ```
//!
//! with `(t)^- = min(t, 0)` and `(t)^+ = max(t, 0)`. Both are nonnegative for
//! band-feasible rows and `sum_n e''_n + e'_n` bounds the suboptimality of `A`
//! in the discrete problem.

use rayon::prelude::*;

use crate::bands::{BandFunction, DensityBand};
use crate::bcd::WeightMatrix;
use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::integrand::{Integrand, Site};

#[derive(Debug, Clone, PartialEq)]
pub struct ResidualReport {
    pub e_upper: Vec<f64>,
    pub e_lower: Vec<f64>,
    pub e_total: Vec<f64>,
    pub gap: f64,
    /// `u_n = -(f_n - c_n)^-` per grid point.
    pub u: Vec<Vec<f64>>,
    /// `v_n = (f_n - c_n)^+` per grid point.
    pub v: Vec<Vec<f64>>,
}

impl ResidualReport {
    /// Index of the largest residual; ties go to the smallest index.
    pub fn argmax(&self) -> usize {
        let mut best = 0;
        for (n, &e) in self.e_total.iter().enumerate() {
            if e > self.e_total[best] {
                best = n;
            }
        }
        best
    }
}

#[derive(Clone, Copy)]
struct Term {
    upper: f64,
    lower: f64,
    u: f64,
    v: f64,
}

/// `distance * part`, where a vanishing factor kills an infinite distance to
/// an open bound. An open bound with a nonzero part gives `+inf`.
#[inline]
fn product(distance: f64, part: f64) -> f64 {
    if part == 0.0 || distance == 0.0 {
        return 0.0;
    }
    distance * part
}

fn point_term(n: usize, k: usize, a: f64, f: f64, c: f64, lower: f64, upper: f64) -> Result<Term> {
    if f.is_nan() {
        return Err(Error::Numerical { n, k, detail: "f_n is NaN".into() });
    }
    let shifted = f - c;
    let neg = shifted.min(0.0);
    let pos = shifted.max(0.0);
    let upper_term = product(a - upper, neg);
    let lower_term = product(a - lower, pos);
    if !f.is_finite() && (upper_term != 0.0 || lower_term != 0.0) {
        return Err(Error::Numerical { n, k, detail: format!("f_n = {f} at a = {a} contributes to the residual") });
    }
    Ok(Term { upper: upper_term, lower: lower_term, u: -neg, v: pos })
}

struct Scratch {
    x: Vec<f64>,
    g: Vec<f64>,
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl Scratch {
    fn new(rows: usize) -> Self {
        Self { x: vec![0.0; rows], g: vec![0.0; rows], lower: vec![0.0; rows], upper: vec![0.0; rows] }
    }
}

/// Discrete residuals of `A` for the given `c`, with point-wise terms
/// evaluated in parallel and summed in index order.
pub fn discrete_residuals(
    integrand: &dyn Integrand,
    a: &WeightMatrix,
    c: &[f64],
    bands: &[DensityBand],
    grid: &Grid,
) -> Result<ResidualReport> {
    let rows = a.rows();
    if c.len() != rows {
        return Err(Error::Length { what: "normalization constants", expected: rows, got: c.len() });
    }
    if bands.len() != rows {
        return Err(Error::Length { what: "bands", expected: rows, got: bands.len() });
    }
    let columns: Vec<Result<Vec<Term>>> = (0..grid.len())
        .into_par_iter()
        .with_min_len(128)
        .map_init(
            || Scratch::new(rows),
            |s, k| {
                a.column_into(k, &mut s.x);
                for n in 0..rows {
                    s.lower[n] = bands[n].lower[k];
                    s.upper[n] = bands[n].upper[k];
                }
                let site = Site::node(grid, k);
                integrand.certificate_subgradient(site, &s.x, c, &s.lower, &s.upper, &mut s.g);
                (0..rows).map(|n| point_term(n, k, s.x[n], s.g[n], c[n], s.lower[n], s.upper[n])).collect()
            },
        )
        .collect();

    let mut report = ResidualReport {
        e_upper: vec![0.0; rows],
        e_lower: vec![0.0; rows],
        e_total: vec![0.0; rows],
        gap: 0.0,
        u: vec![Vec::with_capacity(grid.len()); rows],
        v: vec![Vec::with_capacity(grid.len()); rows],
    };
    for (k, col) in columns.into_iter().enumerate() {
        let col = col?;
        let mu = grid.masses()[k];
        for (n, t) in col.into_iter().enumerate() {
            report.e_upper[n] += t.upper * mu;
            report.e_lower[n] += t.lower * mu;
            report.u[n].push(t.u);
            report.v[n].push(t.v);
        }
    }
    for n in 0..rows {
        report.e_total[n] = report.e_upper[n] + report.e_lower[n];
    }
    report.gap = report.e_total.iter().sum();
    Ok(report)
}

/// Gap estimate for the continuous problem: the residual integrands are
/// evaluated on a grid with every cell split into `refinement` parts, using
/// linearly interpolated densities and the exact band functions, and
/// integrated with the composite trapezoid rule.
pub fn refined_gap_estimate(
    integrand: &dyn Integrand,
    a: &WeightMatrix,
    c: &[f64],
    bands: &[BandFunction],
    grid: &Grid,
    refinement: usize,
) -> Result<f64> {
    if refinement == 0 {
        return Err(Error::Config("refinement must be at least 1".into()));
    }
    let rows = a.rows();
    if c.len() != rows || bands.len() != rows {
        return Err(Error::Length { what: "refined gap inputs", expected: rows, got: c.len().min(bands.len()) });
    }
    let pts = grid.points();
    let mut sample_points = Vec::with_capacity((pts.len() - 1) * refinement + 1);
    for w in pts.windows(2) {
        for j in 0..refinement {
            sample_points.push(w[0] + (w[1] - w[0]) * j as f64 / refinement as f64);
        }
    }
    sample_points.push(grid.hi());

    let values: Vec<f64> = sample_points
        .par_iter()
        .enumerate()
        .with_min_len(256)
        .map_init(
            || Scratch::new(rows),
            |s, (i, &omega)| {
                let site = if i % refinement == 0 { Site::node(grid, i / refinement) } else { Site::at(omega) };
                for n in 0..rows {
                    s.x[n] = match site.node {
                        Some(k) => a.get(n, k),
                        None => grid.interpolate(a.row(n), omega),
                    };
                    s.lower[n] = bands[n].lower(omega);
                    s.upper[n] = bands[n].upper(omega);
                }
                integrand.certificate_subgradient(site, &s.x, c, &s.lower, &s.upper, &mut s.g);
                let k = i / refinement;
                let mut total = 0.0;
                for n in 0..rows {
                    let t = point_term(n, k, s.x[n], s.g[n], c[n], s.lower[n], s.upper[n])?;
                    total += t.upper + t.lower;
                }
                Ok(total)
            },
        )
        .collect::<Result<_>>()?;

    let mut integral = 0.0;
    let last = sample_points.len() - 1;
    for i in 0..last {
        let h = sample_points[i + 1] - sample_points[i];
        integral += 0.5 * h * (values[i] + values[i + 1]);
    }
    Ok(integral)
}
