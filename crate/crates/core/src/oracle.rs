//! Independent checks: a projected-gradient reference solver, the
//! generalized Bhattacharyya bound and Gaussian band helpers.
//!
//! The reference solver shares no code with the coordinate-descent path
//! beyond the integrand itself. It is slow and carries no certificate.

use std::f64::consts::PI;

use crate::bands::{BandFunction, DensityBand};
use crate::bcd::{initial_weights, WeightMatrix};
use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::integrand::{discrete_objective, Integrand, MinimaxDetect, Site};

/// Consecutive rejected steps after which the reference solver gives up.
const DIVERGENCE_WINDOW: usize = 50;
/// Accepted steps between progress checks.
const PROGRESS_WINDOW: usize = 200;

#[derive(Debug, Clone)]
pub struct OracleOptions {
    pub steps: usize,
    /// Initial step; halved whenever the sufficient-decrease test fails.
    pub step_size: f64,
    /// Stop once the objective improves by less than this (relative) over a
    /// progress window.
    pub rel_tol: f64,
    pub init: Option<WeightMatrix>,
}

impl Default for OracleOptions {
    fn default() -> Self {
        Self { steps: 200_000, step_size: 1e-2, rel_tol: 1e-14, init: None }
    }
}

#[derive(Debug, Clone)]
pub struct OracleReport {
    pub a: WeightMatrix,
    pub objective: f64,
    pub steps: usize,
}

/// Projected gradient with default options; returns the final iterate.
pub fn projected_gradient_reference(
    integrand: &dyn Integrand,
    bands: &[DensityBand],
    grid: &Grid,
    steps: usize,
    step_size: f64,
) -> Result<WeightMatrix> {
    let options = OracleOptions { steps, step_size, ..OracleOptions::default() };
    Ok(projected_gradient(integrand, bands, grid, &options)?.a)
}

/// Weighted projection of `w` onto `{lower <= a <= upper, <a, mu> = 1}` in
/// the metric `sum mu (a - w)^2 / d`: `a = clamp(w - tau d)` for the `tau`
/// that restores unit mass.
fn project_row(w: &[f64], d: &[f64], band: &DensityBand, grid: &Grid, out: &mut [f64]) -> Result<()> {
    let mu = grid.masses();
    let fill = |tau: f64, out: &mut [f64]| {
        let mut mass = 0.0;
        for k in 0..w.len() {
            out[k] = (w[k] - tau * d[k]).max(band.lower[k]).min(band.upper[k]);
            mass += out[k] * mu[k];
        }
        mass
    };
    let mut lo = -1.0;
    let mut hi = 1.0;
    let mut expansions = 0;
    while fill(lo, out) < 1.0 {
        lo *= 2.0;
        expansions += 1;
        if expansions > 2000 {
            return Err(Error::Oracle("projection bracket (lower side) not found".into()));
        }
    }
    while fill(hi, out) > 1.0 {
        hi *= 2.0;
        expansions += 1;
        if expansions > 2000 {
            return Err(Error::Oracle("projection bracket (upper side) not found".into()));
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if fill(mid, out) > 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    // Mass is affine in tau on the final active set; solve it exactly.
    let tau = 0.5 * (lo + hi);
    fill(tau, out);
    let (mut fixed, mut free_w, mut free_d) = (0.0, 0.0, 0.0);
    for k in 0..w.len() {
        let v = w[k] - tau * d[k];
        if v <= band.lower[k] || v >= band.upper[k] {
            fixed += out[k] * mu[k];
        } else {
            free_w += w[k] * mu[k];
            free_d += d[k] * mu[k];
        }
    }
    if free_d > 0.0 {
        let exact = (fixed + free_w - 1.0) / free_d;
        if exact >= lo && exact <= hi {
            fill(exact, out);
        }
    }
    Ok(())
}

fn project(w: &WeightMatrix, d: &WeightMatrix, bands: &[DensityBand], grid: &Grid) -> Result<WeightMatrix> {
    let mut out = WeightMatrix::zeros(w.rows(), w.cols());
    let mut row = vec![0.0; w.cols()];
    for (n, band) in bands.iter().enumerate() {
        project_row(w.row(n), d.row(n), band, grid, &mut row)?;
        out.set_row(n, &row);
    }
    Ok(out)
}

fn gradient(integrand: &dyn Integrand, a: &WeightMatrix, grid: &Grid) -> WeightMatrix {
    let mut g = WeightMatrix::zeros(a.rows(), a.cols());
    let mut x = vec![0.0; a.rows()];
    for k in 0..grid.len() {
        a.column_into(k, &mut x);
        let site = Site::node(grid, k);
        for n in 0..a.rows() {
            g.set(n, k, integrand.partial(n, site, &x));
        }
    }
    g
}

/// Diagonal metric: band midpoints, or the starting value for open bands.
fn metric(bands: &[DensityBand], start: &WeightMatrix) -> WeightMatrix {
    let mut d = WeightMatrix::zeros(start.rows(), start.cols());
    for (n, b) in bands.iter().enumerate() {
        for k in 0..start.cols() {
            let m = if b.upper[k].is_finite() { 0.5 * (b.lower[k] + b.upper[k]) } else { b.lower[k].max(start.get(n, k)) };
            d.set(n, k, m.max(1e-300));
        }
    }
    d
}

/// Largest `beta' <= beta` keeping `x + beta' (x - prev)` inside the bands.
fn feasible_momentum(x: &WeightMatrix, prev: &WeightMatrix, bands: &[DensityBand], beta: f64) -> f64 {
    let mut b = beta;
    for (n, band) in bands.iter().enumerate() {
        for k in 0..x.cols() {
            let dir = x.get(n, k) - prev.get(n, k);
            if dir > 0.0 {
                b = b.min((band.upper[k] - x.get(n, k)) / dir);
            } else if dir < 0.0 {
                b = b.min((band.lower[k] - x.get(n, k)) / dir);
            }
        }
    }
    b.max(0.0)
}

/// Accelerated projected gradient with backtracking and monotone restarts
/// on the discrete objective `sum f mu`.
pub fn projected_gradient(
    integrand: &dyn Integrand,
    bands: &[DensityBand],
    grid: &Grid,
    options: &OracleOptions,
) -> Result<OracleReport> {
    if bands.len() != integrand.dim() {
        return Err(Error::Length { what: "bands", expected: integrand.dim(), got: bands.len() });
    }
    let mu = grid.masses();
    let mut x = match &options.init {
        Some(a) => a.clone(),
        None => initial_weights(bands, grid, crate::bands::DEFAULT_UPPER_CAP)?,
    };
    let d = metric(bands, &x);
    x = project(&x, &d, bands, grid)?;
    let mut fx = discrete_objective(integrand, &x, grid);
    if !fx.is_finite() {
        return Err(Error::Oracle(format!("objective at the starting point is {fx}")));
    }
    let mut y = x.clone();
    let mut momentum: f64 = 1.0;
    let mut step = options.step_size;
    let mut rejected = 0;
    let mut checkpoint = fx;
    let mut accepted = 0;
    let mut steps = 0;

    while steps < options.steps {
        steps += 1;
        let g = gradient(integrand, &y, grid);
        let fy = discrete_objective(integrand, &y, grid);
        let (z, fz) = loop {
            let mut w = y.clone();
            for n in 0..w.rows() {
                for k in 0..w.cols() {
                    w.set(n, k, y.get(n, k) - step * d.get(n, k) * g.get(n, k));
                }
            }
            let z = project(&w, &d, bands, grid)?;
            let fz = discrete_objective(integrand, &z, grid);
            let mut model = fy;
            for n in 0..z.rows() {
                for k in 0..z.cols() {
                    let dz = z.get(n, k) - y.get(n, k);
                    model += mu[k] * (g.get(n, k) * dz + dz * dz / (2.0 * step * d.get(n, k)));
                }
            }
            if fz <= model + 1e-15 * fy.abs() || step < 1e-300 {
                break (z, fz);
            }
            step *= 0.5;
        };

        if !(fz <= fx) {
            if fz.is_nan() {
                return Err(Error::Oracle(format!("objective is NaN after {steps} steps")));
            }
            // A plain step from the current iterate that fails only by
            // rounding means the iterate is stationary.
            if y == x && fz - fx <= 1e-12 * fx.abs().max(1e-300) {
                break;
            }
            rejected += 1;
            if rejected >= DIVERGENCE_WINDOW {
                return Err(Error::Oracle(format!("objective increased for {rejected} consecutive steps")));
            }
            y = x.clone();
            momentum = 1.0;
            continue;
        }
        rejected = 0;
        let next_momentum = 0.5 * (1.0 + (1.0 + 4.0 * momentum * momentum).sqrt());
        let beta = feasible_momentum(&z, &x, bands, (momentum - 1.0) / next_momentum);
        let mut ny = z.clone();
        for n in 0..z.rows() {
            for k in 0..z.cols() {
                ny.set(n, k, z.get(n, k) + beta * (z.get(n, k) - x.get(n, k)));
            }
        }
        momentum = next_momentum;
        x = z;
        fx = fz;
        y = ny;
        step *= 1.25;
        accepted += 1;
        if accepted % PROGRESS_WINDOW == 0 {
            if checkpoint - fx <= options.rel_tol * fx.abs() {
                break;
            }
            checkpoint = fx;
        }
    }
    Ok(OracleReport { a: x, objective: fx, steps })
}

/// Reference for the nonsmooth minimax integrand: projected gradient on
/// Huber-smoothed surrogates with `delta` shrinking geometrically down to
/// `final_delta`, each stage warm-started. The reported objective is that
/// of the original integrand.
pub fn minimax_reference(
    integrand: &MinimaxDetect,
    bands: &[DensityBand],
    grid: &Grid,
    final_delta: f64,
    options: &OracleOptions,
) -> Result<OracleReport> {
    let mut delta = 1e-1;
    let mut current = options.init.clone();
    let mut steps = 0;
    loop {
        let smooth = integrand.smoothed(delta);
        let stage = OracleOptions { init: current.take(), ..options.clone() };
        let r = projected_gradient(&smooth, bands, grid, &stage)?;
        steps += r.steps;
        current = Some(r.a);
        if delta <= final_delta {
            break;
        }
        delta = (delta * 0.1).max(final_delta);
    }
    let a = current.expect("at least one stage ran");
    let objective = discrete_objective(integrand, &a, grid);
    Ok(OracleReport { a, objective, steps })
}

/// `-log <prod_n p_n^alpha_n, mu>`, the generalized Bhattacharyya bound;
/// `+inf` when the coefficient vanishes.
pub fn bhattacharyya_bound(densities: &[Vec<f64>], alpha: &[f64], grid: &Grid) -> Result<f64> {
    if densities.len() != alpha.len() {
        return Err(Error::Length { what: "bound weights", expected: densities.len(), got: alpha.len() });
    }
    if let Some(d) = densities.iter().find(|d| d.len() != grid.len()) {
        return Err(Error::Length { what: "bound density", expected: grid.len(), got: d.len() });
    }
    let mut coefficient = 0.0;
    for k in 0..grid.len() {
        let mut term = 1.0;
        for (p, &a) in densities.iter().zip(alpha) {
            if a != 0.0 {
                term *= p[k].powf(a);
            }
        }
        coefficient += term * grid.masses()[k];
    }
    Ok(if coefficient > 0.0 { -coefficient.ln() } else { f64::INFINITY })
}

pub fn gaussian_density(omega: f64, mean: f64, variance: f64) -> f64 {
    (-(omega - mean).powi(2) / (2.0 * variance)).exp() / (2.0 * PI * variance).sqrt()
}

pub fn gaussian_samples(grid: &Grid, mean: f64, variance: f64) -> Vec<f64> {
    grid.points().iter().map(|&w| gaussian_density(w, mean, variance)).collect()
}

/// Band `[lo_scale phi, hi_scale phi]` for the Gaussian density `phi`,
/// sampled on the grid and validated.
pub fn gaussian_band(mean: f64, variance: f64, lo_scale: f64, hi_scale: f64, grid: &Grid) -> Result<DensityBand> {
    if !(variance > 0.0) {
        return Err(Error::Config(format!("variance must be positive, got {variance}")));
    }
    if !(0.0 <= lo_scale && lo_scale <= hi_scale) {
        return Err(Error::Config(format!("scales must satisfy 0 <= {lo_scale} <= {hi_scale}")));
    }
    let phi = gaussian_samples(grid, mean, variance);
    let band = DensityBand::new(phi.iter().map(|v| lo_scale * v).collect(), phi.iter().map(|v| hi_scale * v).collect())?;
    band.validate(grid)?;
    Ok(band)
}

/// The same band as continuous functions of `omega`.
pub fn gaussian_band_function(mean: f64, variance: f64, lo_scale: f64, hi_scale: f64) -> BandFunction {
    BandFunction::new(
        move |w| lo_scale * gaussian_density(w, mean, variance),
        move |w| hi_scale * gaussian_density(w, mean, variance),
    )
}
