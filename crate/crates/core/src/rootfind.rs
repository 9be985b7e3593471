//! Monotone root finding for generalized inverses
//! `g^{-1}(target) = inf { x : g(x) >= target }`, and the per-grid-point
//! inversion of a partial subderivative.
//!
//! Bisection only: subderivatives may jump or be flat, and bracketing is the
//! one method that honours the infimum semantics on such functions.

use rayon::prelude::*;

use crate::bands::DensityBand;
use crate::bcd::WeightMatrix;
use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::integrand::{Integrand, Site};

/// Largest value tried when an upper bound is infinite.
pub const EXPANSION_CAP: f64 = 1e12;

/// A bracket `[lo, hi]` with `g(lo) < target <= g(hi)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bracket {
    pub lo: f64,
    pub hi: f64,
    pub g_lo: f64,
    pub g_hi: f64,
}

impl Bracket {
    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    /// Halves the bracket until it is no wider than `tol`; returns the midpoint
    /// and the number of evaluations spent.
    fn bisect<G: FnMut(f64) -> f64>(mut self, g: &mut G, target: f64, tol: f64) -> Result<(f64, usize)> {
        let mut evals = 0;
        while self.width() > tol {
            let mid = 0.5 * (self.lo + self.hi);
            if mid <= self.lo || mid >= self.hi {
                break;
            }
            let gm = g(mid);
            evals += 1;
            if gm.is_nan() {
                return Err(Error::NanEvaluation { x: mid });
            }
            if gm >= target {
                self.hi = mid;
                self.g_hi = gm;
            } else {
                self.lo = mid;
                self.g_lo = gm;
            }
        }
        Ok((0.5 * (self.lo + self.hi), evals))
    }
}

/// `inf { x in [lo, hi] : g(x) >= target }` to within `tol`, for
/// nondecreasing `g`. Returns `lo` when `g(lo) >= target` and `hi` when
/// `g(hi) < target`.
pub fn solve_monotone<G: FnMut(f64) -> f64>(g: G, target: f64, lo: f64, hi: f64, tol: f64) -> Result<f64> {
    solve_monotone_counted(g, target, lo, hi, tol).map(|(x, _)| x)
}

/// [`solve_monotone`] that also reports the number of evaluations of `g`.
pub fn solve_monotone_counted<G: FnMut(f64) -> f64>(
    mut g: G,
    target: f64,
    lo: f64,
    hi: f64,
    tol: f64,
) -> Result<(f64, usize)> {
    if !(lo <= hi) {
        return Err(Error::Bracket { lo, hi });
    }
    if !(tol > 0.0) {
        return Err(Error::Config(format!("root tolerance must be positive, got {tol}")));
    }
    let g_lo = g(lo);
    if g_lo.is_nan() {
        return Err(Error::NanEvaluation { x: lo });
    }
    if g_lo >= target {
        return Ok((lo, 1));
    }
    let g_hi = g(hi);
    if g_hi.is_nan() {
        return Err(Error::NanEvaluation { x: hi });
    }
    if g_hi < target {
        return Ok((hi, 2));
    }
    let (x, evals) = Bracket { lo, hi, g_lo, g_hi }.bisect(&mut g, target, tol)?;
    Ok((x, evals + 2))
}

/// Whether [`invert_fn_on_grid`] may use an integrand's closed-form inverse.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum InversionMode {
    #[default]
    Auto,
    Numeric,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct InversionStats {
    /// Points that needed bisection.
    pub root_solves: usize,
    /// Points where an infinite upper bound was hit at [`EXPANSION_CAP`].
    pub capped: usize,
    pub evaluations: usize,
}

#[derive(Debug, Clone)]
pub struct Inversion {
    pub values: Vec<f64>,
    pub stats: InversionStats,
}

#[derive(Clone, Copy)]
struct PointResult {
    value: f64,
    evals: u32,
    solved: bool,
    capped: bool,
}

/// Band-clamped generalized inverse of `f_n` at `level`, solved independently
/// at every grid point with the other rows of `a` held fixed.
pub fn invert_fn_on_grid(
    integrand: &dyn Integrand,
    a: &WeightMatrix,
    n: usize,
    level: f64,
    band: &DensityBand,
    grid: &Grid,
    tol: f64,
    mode: InversionMode,
) -> Result<Inversion> {
    let rows = a.rows();
    let results: Vec<Result<PointResult>> = (0..grid.len())
        .into_par_iter()
        .with_min_len(128)
        .map_init(
            || vec![0.0; rows],
            |x, k| {
                a.column_into(k, x);
                invert_point(integrand, x, n, k, level, band, grid, tol, mode)
            },
        )
        .collect();

    let mut values = Vec::with_capacity(grid.len());
    let mut stats = InversionStats::default();
    for r in results {
        let p = r?;
        values.push(p.value);
        stats.evaluations += p.evals as usize;
        stats.root_solves += p.solved as usize;
        stats.capped += p.capped as usize;
    }
    Ok(Inversion { values, stats })
}

#[allow(clippy::too_many_arguments)]
fn invert_point(
    integrand: &dyn Integrand,
    x: &mut [f64],
    n: usize,
    k: usize,
    level: f64,
    band: &DensityBand,
    grid: &Grid,
    tol: f64,
    mode: InversionMode,
) -> Result<PointResult> {
    let (lower, upper) = (band.lower[k], band.upper[k]);
    let done = |value, evals| Ok(PointResult { value, evals, solved: false, capped: false });
    if lower == upper {
        return done(lower, 0);
    }
    let site = Site::node(grid, k);
    let numerical = |detail: String| Error::Numerical { n, k, detail };

    if mode == InversionMode::Auto {
        if let Some(v) = integrand.inverse(n, site, x, level) {
            if v.is_nan() {
                return Err(numerical(format!("closed-form inverse is NaN at level {level}")));
            }
            return done(band.clamp_at(k, v), 0);
        }
    }

    let mut eval = |t: f64| {
        x[n] = t;
        integrand.partial(n, site, x)
    };
    let g_lower = eval(lower);
    if g_lower.is_nan() {
        return Err(numerical(format!("f_n is NaN at lower bound {lower}")));
    }
    if g_lower >= level {
        return done(lower, 1);
    }

    let (bracket, mut evals) = if upper.is_finite() {
        let g_upper = eval(upper);
        if g_upper.is_nan() {
            return Err(numerical(format!("f_n is NaN at upper bound {upper}")));
        }
        if g_upper <= level {
            return done(upper, 2);
        }
        (Bracket { lo: lower, hi: upper, g_lo: g_lower, g_hi: g_upper }, 2u32)
    } else {
        let mut lo = lower;
        let mut g_lo = g_lower;
        let mut hi = lower.max(1.0);
        let mut evals = 1u32;
        loop {
            let g_hi = eval(hi);
            evals += 1;
            if g_hi.is_nan() {
                return Err(numerical(format!("f_n is NaN at {hi}")));
            }
            if g_hi >= level {
                break (Bracket { lo, hi, g_lo, g_hi }, evals);
            }
            if hi >= EXPANSION_CAP {
                return Ok(PointResult { value: EXPANSION_CAP, evals, solved: false, capped: true });
            }
            lo = hi;
            g_lo = g_hi;
            hi = (2.0 * hi).min(EXPANSION_CAP);
        }
    };
    let (root, more) = bracket
        .bisect(&mut eval, level, tol)
        .map_err(|e| numerical(e.to_string()))?;
    evals += more as u32;
    Ok(PointResult { value: band.clamp_at(k, root), evals, solved: true, capped: false })
}

/// Default per-point tolerance `epsilon / (10 K max mu)`.
pub fn default_inversion_tol(epsilon: f64, grid: &Grid) -> f64 {
    epsilon / (10.0 * grid.len() as f64 * grid.max_mass())
}
