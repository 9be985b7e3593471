//! Block coordinate descent over densities.
//!
//! Each step picks one density `n`, searches the scalar `c_n` for which the
//! band-clamped inverse `clamp(f_n^{-1}(A_{-n}, c_n))` has unit mass, and
//! replaces row `n` with it. That row is then an exact block minimizer, so
//! its residual drops to zero. Iteration stops once the residual sum (the
//! optimality gap) is at most `epsilon`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::bands::{validate_all, DensityBand, DEFAULT_UPPER_CAP, MASS_SLACK};
use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::integrand::Integrand;
use crate::residuals::{discrete_residuals, ResidualReport};
use crate::rootfind::{default_inversion_tol, invert_fn_on_grid, InversionMode, InversionStats};

/// Bracket doublings allowed on each side of the normalization search.
const MAX_EXPANSIONS: usize = 60;
/// Smallest gap decrease that counts as progress for stall detection.
const STALL_PROGRESS: f64 = 1e-15;
/// Upper limit on the normalization mass tolerance.
const MASS_TOL_CAP: f64 = 1e-10;

/// `N x K` basis weights, row-major; row `n` is density `n` on the grid.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl WeightMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().find(|r| r.len() != cols) {
            return Err(Error::Length { what: "weight matrix row", expected: cols, got: bad.len() });
        }
        let n = rows.len();
        Ok(Self { rows: n, cols, data: rows.into_iter().flatten().collect() })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, n: usize, k: usize) -> f64 {
        self.data[n * self.cols + k]
    }

    #[inline]
    pub fn set(&mut self, n: usize, k: usize, v: f64) {
        self.data[n * self.cols + k] = v;
    }

    pub fn row(&self, n: usize) -> &[f64] {
        &self.data[n * self.cols..(n + 1) * self.cols]
    }

    pub fn set_row(&mut self, n: usize, values: &[f64]) {
        self.data[n * self.cols..(n + 1) * self.cols].copy_from_slice(values);
    }

    /// Copies column `k` (the density values at grid point `k`) into `out`.
    #[inline]
    pub fn column_into(&self, k: usize, out: &mut [f64]) {
        for (n, o) in out.iter_mut().enumerate() {
            *o = self.data[n * self.cols + k];
        }
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.rows).map(|n| self.row(n).to_vec()).collect()
    }

    /// Largest absolute entry-wise difference.
    pub fn sup_distance(&self, other: &WeightMatrix) -> f64 {
        self.data.iter().zip(&other.data).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    }

    /// Checks band bounds exactly and row masses to within [`MASS_SLACK`].
    pub fn check_feasible(&self, bands: &[DensityBand], grid: &Grid) -> Result<()> {
        if self.rows != bands.len() || self.cols != grid.len() {
            return Err(Error::Length { what: "weight matrix shape", expected: bands.len() * grid.len(), got: self.data.len() });
        }
        for (n, band) in bands.iter().enumerate() {
            let row = self.row(n);
            if let Some(k) = (0..row.len()).find(|&k| !(band.lower[k] <= row[k] && row[k] <= band.upper[k])) {
                return Err(Error::Config(format!("initial density {n} leaves its band at grid point {k}")));
            }
            let mass = grid.integrate(row);
            if (mass - 1.0).abs() > MASS_SLACK {
                return Err(Error::Config(format!("initial density {n} has mass {mass}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SelectionRule {
    LargestResidual,
    Cyclic,
    /// Uniform over all indices except the previously updated one.
    Random(u64),
}

impl SelectionRule {
    pub fn label(&self) -> &'static str {
        match self {
            SelectionRule::LargestResidual => "largest_residual",
            SelectionRule::Cyclic => "cyclic",
            SelectionRule::Random(_) => "random",
        }
    }
}

/// Stateful coordinate picker for one solver run.
pub struct Selector {
    rule: SelectionRule,
    rng: Option<ChaCha8Rng>,
    previous: Option<usize>,
    dim: usize,
}

impl Selector {
    pub fn new(rule: SelectionRule, dim: usize) -> Self {
        let rng = match rule {
            SelectionRule::Random(seed) => Some(ChaCha8Rng::seed_from_u64(seed)),
            _ => None,
        };
        Self { rule, rng, previous: None, dim }
    }

    pub fn next(&mut self, residuals: &[f64]) -> usize {
        let n = match self.rule {
            SelectionRule::LargestResidual => {
                let mut best = 0;
                for (n, &e) in residuals.iter().enumerate() {
                    if e > residuals[best] {
                        best = n;
                    }
                }
                best
            }
            SelectionRule::Cyclic => self.previous.map_or(0, |p| (p + 1) % self.dim),
            SelectionRule::Random(_) => {
                let rng = self.rng.as_mut().expect("random selector has an rng");
                match self.previous {
                    Some(p) if self.dim > 1 => {
                        let draw = rng.gen_range(0..self.dim - 1);
                        if draw >= p {
                            draw + 1
                        } else {
                            draw
                        }
                    }
                    _ => rng.gen_range(0..self.dim),
                }
            }
        };
        self.previous = Some(n);
        n
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Status {
    Converged,
    MaxIterations,
    Stalled,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceEntry {
    pub iteration: usize,
    /// Density updated after this residual evaluation; `None` on the last row.
    pub selected: Option<usize>,
    pub c: Vec<f64>,
    pub residuals: Vec<f64>,
    pub gap: f64,
}

#[derive(Debug, Clone)]
pub struct SolverReport {
    pub a: WeightMatrix,
    pub c: Vec<f64>,
    pub residuals: ResidualReport,
    pub trace: Vec<TraceEntry>,
    /// Coordinate steps (for the proximal solver: outer iterations).
    pub iterations: usize,
    /// Total coordinate steps across all inner solves.
    pub inner_steps: usize,
    pub status: Status,
    pub note: Option<String>,
    pub inversion: InversionStats,
}

impl SolverReport {
    pub fn gap(&self) -> f64 {
        self.residuals.gap
    }

    pub fn gap_trace(&self) -> Vec<(usize, f64)> {
        self.trace.iter().map(|t| (t.iteration, t.gap)).collect()
    }
}

#[derive(Debug, Clone)]
pub struct BcdOptions {
    pub epsilon: f64,
    pub rule: SelectionRule,
    /// Defaults to `10000 N`.
    pub max_iter: Option<usize>,
    /// Residuals are recomputed every `residual_every` steps.
    pub residual_every: usize,
    /// Per-point root tolerance; defaults to `epsilon / (10 K max mu)`.
    pub inversion_tol: Option<f64>,
    /// Normalization tolerance; defaults to `min(epsilon / (10 N), 1e-10)`.
    pub mass_tol: Option<f64>,
    pub mode: InversionMode,
    pub upper_cap: f64,
}

impl BcdOptions {
    pub fn new(epsilon: f64) -> Self {
        Self {
            epsilon,
            rule: SelectionRule::LargestResidual,
            max_iter: None,
            residual_every: 1,
            inversion_tol: None,
            mass_tol: None,
            mode: InversionMode::Auto,
            upper_cap: DEFAULT_UPPER_CAP,
        }
    }

    pub fn with_rule(mut self, rule: SelectionRule) -> Self {
        self.rule = rule;
        self
    }

    pub fn with_max_iter(mut self, max_iter: usize) -> Self {
        self.max_iter = Some(max_iter);
        self
    }

    pub fn with_mode(mut self, mode: InversionMode) -> Self {
        self.mode = mode;
        self
    }

    pub(crate) fn tolerances(&self, dim: usize, grid: &Grid) -> Tolerances {
        Tolerances {
            inversion: self.inversion_tol.unwrap_or_else(|| default_inversion_tol(self.epsilon, grid)),
            mass: self.mass_tol.unwrap_or_else(|| (self.epsilon / (10.0 * dim as f64)).min(MASS_TOL_CAP)),
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct Tolerances {
    pub inversion: f64,
    pub mass: f64,
}

/// Mass of the band-clamped inverse of `f_n` at level `c`.
pub fn normalization_mass(
    integrand: &dyn Integrand,
    a: &WeightMatrix,
    n: usize,
    c: f64,
    band: &DensityBand,
    grid: &Grid,
    tol: f64,
) -> Result<f64> {
    let inv = invert_fn_on_grid(integrand, a, n, c, band, grid, tol, InversionMode::Auto)?;
    Ok(grid.integrate(&inv.values))
}

/// Outcome of the normalization search.
#[derive(Debug, Clone)]
pub enum Normalization {
    Found { c: f64, row: Vec<f64>, mass: f64, stats: InversionStats },
    /// No level reaches unit mass within tolerance, typically because `f_n`
    /// jumps and the mass function skips over one.
    Unreachable { c: f64, mass: f64, reason: String },
}

/// Outcome of a scalar level search carrying the data computed at the
/// accepted level.
#[derive(Debug, Clone)]
pub enum LevelSearch<T> {
    Found { c: f64, mass: f64, payload: T },
    Unreachable { c: f64, mass: f64, reason: String },
}

/// Finds `c` with `|mass(c) - 1| <= tol` for a nondecreasing `mass`,
/// expanding a bracket around `start` (width 1, doubling) and bisecting.
pub fn search_level<T>(
    mut eval: impl FnMut(f64) -> Result<(f64, T)>,
    start: f64,
    tol: f64,
) -> Result<LevelSearch<T>> {
    let accept = |mass: f64| (mass - 1.0).abs() <= tol;
    let found = |c, mass, payload| Ok(LevelSearch::Found { c, mass, payload });

    let mut width = 1.0;
    let mut lo = start - width;
    let mut hi: Option<f64> = None;
    let (mut m_lo, mut p_lo) = eval(lo)?;
    let mut expansions = 0;
    while m_lo > 1.0 && !accept(m_lo) {
        if expansions == MAX_EXPANSIONS {
            return Ok(LevelSearch::Unreachable { c: lo, mass: m_lo, reason: "lower bracket expansion exhausted".into() });
        }
        hi = Some(lo);
        width *= 2.0;
        lo = start - width;
        (m_lo, p_lo) = eval(lo)?;
        expansions += 1;
    }
    if accept(m_lo) {
        return found(lo, m_lo, p_lo);
    }

    let mut hi = match hi {
        Some(h) => h,
        None => {
            let mut width = 1.0;
            let mut hi = start + width;
            let (mut m_hi, mut p_hi) = eval(hi)?;
            let mut expansions = 0;
            while m_hi < 1.0 && !accept(m_hi) {
                if expansions == MAX_EXPANSIONS {
                    return Ok(LevelSearch::Unreachable {
                        c: hi,
                        mass: m_hi,
                        reason: "upper bracket expansion exhausted".into(),
                    });
                }
                lo = hi;
                width *= 2.0;
                hi = start + width;
                (m_hi, p_hi) = eval(hi)?;
                expansions += 1;
            }
            if accept(m_hi) {
                return found(hi, m_hi, p_hi);
            }
            hi
        }
    };

    // Invariant: mass(lo) < 1 < mass(hi).
    let mut last_mass = m_lo;
    loop {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            return Ok(LevelSearch::Unreachable {
                c: hi,
                mass: last_mass,
                reason: format!("mass jumps across 1 at c = {hi}"),
            });
        }
        let (m, payload) = eval(mid)?;
        if m.is_nan() {
            return Err(Error::Numerical { n: 0, k: 0, detail: format!("normalization mass is NaN at c = {mid}") });
        }
        if accept(m) {
            return found(mid, m, payload);
        }
        last_mass = m;
        if m > 1.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
}

/// Finds `c_n` with `|mass(c_n) - 1| <= mass_tol` for density `n`, starting
/// the bracket at `c_start`.
#[allow(clippy::too_many_arguments)]
pub fn solve_c(
    integrand: &dyn Integrand,
    a: &WeightMatrix,
    n: usize,
    band: &DensityBand,
    grid: &Grid,
    c_start: f64,
    mass_tol: f64,
    inversion_tol: f64,
    mode: InversionMode,
) -> Result<Normalization> {
    let mut stats = InversionStats::default();
    let search = search_level(
        |c| {
            let inv = invert_fn_on_grid(integrand, a, n, c, band, grid, inversion_tol, mode)?;
            stats.root_solves += inv.stats.root_solves;
            stats.capped += inv.stats.capped;
            stats.evaluations += inv.stats.evaluations;
            Ok((grid.integrate(&inv.values), inv.values))
        },
        c_start,
        mass_tol,
    )?;
    Ok(match search {
        LevelSearch::Found { c, mass, payload } => Normalization::Found { c, row: payload, mass, stats },
        LevelSearch::Unreachable { c, mass, reason } => Normalization::Unreachable { c, mass, reason },
    })
}

/// Minimizes the discrete functional by block coordinate descent.
///
/// `a0` defaults to a blend of each band's bounds and `c0` to zeros.
pub fn bcd_minimize(
    integrand: &dyn Integrand,
    bands: &[DensityBand],
    grid: &Grid,
    options: &BcdOptions,
    a0: Option<WeightMatrix>,
    c0: Option<Vec<f64>>,
) -> Result<SolverReport> {
    let dim = integrand.dim();
    if bands.len() != dim {
        return Err(Error::Length { what: "bands", expected: dim, got: bands.len() });
    }
    if !(options.epsilon > 0.0) {
        return Err(Error::Config(format!("epsilon must be positive, got {}", options.epsilon)));
    }
    validate_all(bands, grid)?;
    let mut a = match a0 {
        Some(a) => {
            a.check_feasible(bands, grid)?;
            a
        }
        None => initial_weights(bands, grid, options.upper_cap)?,
    };
    let mut c = c0.unwrap_or_else(|| vec![0.0; dim]);
    if c.len() != dim {
        return Err(Error::Length { what: "initial constants", expected: dim, got: c.len() });
    }

    let tol = options.tolerances(dim, grid);
    let max_iter = options.max_iter.unwrap_or(10_000 * dim);
    let every = options.residual_every.max(1);
    let stall_window = 10 * dim;

    let mut selector = Selector::new(options.rule, dim);
    let mut residuals = discrete_residuals(integrand, &a, &c, bands, grid)?;
    let mut stale = residuals.e_total.clone();
    let mut trace = Vec::new();
    let mut inversion = InversionStats::default();
    let mut best = f64::INFINITY;
    let mut since_best = 0;
    let mut iteration = 0;
    let mut fresh = true;
    let mut note = None;

    let status = loop {
        if fresh {
            trace.push(TraceEntry {
                iteration,
                selected: None,
                c: c.clone(),
                residuals: residuals.e_total.clone(),
                gap: residuals.gap,
            });
            if residuals.gap <= options.epsilon {
                break Status::Converged;
            }
            if residuals.gap < best - STALL_PROGRESS {
                best = residuals.gap;
                since_best = 0;
            } else {
                since_best += 1;
                if since_best >= stall_window {
                    note = Some(format!("gap stuck at {} for {} iterations", residuals.gap, since_best));
                    break Status::Stalled;
                }
            }
        }
        if iteration >= max_iter {
            break Status::MaxIterations;
        }

        let n = selector.next(&stale);
        if fresh {
            trace.last_mut().expect("trace entry").selected = Some(n);
        }
        match solve_c(integrand, &a, n, &bands[n], grid, c[n], tol.mass, tol.inversion, options.mode)? {
            Normalization::Found { c: cn, row, stats, .. } => {
                a.set_row(n, &row);
                c[n] = cn;
                inversion.root_solves += stats.root_solves;
                inversion.capped += stats.capped;
                inversion.evaluations += stats.evaluations;
            }
            Normalization::Unreachable { c: cn, mass, reason } => {
                note = Some(format!("normalization of density {n} failed near c = {cn} (mass {mass}): {reason}"));
                break Status::Stalled;
            }
        }
        iteration += 1;
        fresh = iteration % every == 0;
        if fresh {
            residuals = discrete_residuals(integrand, &a, &c, bands, grid)?;
            stale.copy_from_slice(&residuals.e_total);
        } else {
            stale[n] = 0.0;
        }
    };

    if !fresh {
        residuals = discrete_residuals(integrand, &a, &c, bands, grid)?;
    }
    Ok(SolverReport {
        a,
        c,
        residuals,
        trace,
        iterations: iteration,
        inner_steps: iteration,
        status,
        note,
        inversion,
    })
}

/// Starting weights: each band's bound blend with unit mass.
pub fn initial_weights(bands: &[DensityBand], grid: &Grid, cap: f64) -> Result<WeightMatrix> {
    let rows = bands
        .iter()
        .enumerate()
        .map(|(n, b)| {
            b.feasible_init(grid, cap).map_err(|e| match e {
                Error::InfeasibleBand { violation, .. } => Error::InfeasibleBand { density: n, violation },
                other => other,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    WeightMatrix::from_rows(rows)
}
