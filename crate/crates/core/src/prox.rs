//! Proximal outer loop for integrands that are convex but not strictly so.
//!
//! Every outer iteration anchors the penalty at the current densities and
//! solves the augmented problem `f + rho/2 |x - h|^2` by coordinate descent.
//! Optimality is always measured with the original partial derivatives.

use std::sync::Arc;

use rayon::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::bands::{validate_all, DensityBand, DEFAULT_UPPER_CAP};
use crate::bcd::{
    bcd_minimize, initial_weights, search_level, BcdOptions, LevelSearch, SelectionRule, SolverReport, Status,
    TraceEntry, WeightMatrix,
};
use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::integrand::{Integrand, Proximal, Site};
use crate::residuals::discrete_residuals;
use crate::rootfind::{InversionMode, InversionStats};

const SPOT_CHECKS: usize = 16;
/// Level updates allowed per inner solve of the dual method, per density.
const DUAL_STEPS_PER_DENSITY: usize = 100_000;

/// How each proximal subproblem is solved.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InnerSolver {
    /// [`InnerSolver::Dual`] when the integrand has a closed-form joint
    /// proximal point, [`InnerSolver::Coordinate`] otherwise.
    Auto,
    /// Block coordinate descent on the augmented integrand.
    Coordinate,
    /// Coordinate ascent over the levels `c`, with all densities at a grid
    /// point moved jointly by [`Integrand::proximal_point`]. Needed when a
    /// nonsmooth coupling traps coordinate descent.
    Dual,
}

/// Inner tolerance per outer iteration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InnerTolerance {
    /// Same tolerance as the outer loop.
    Constant,
    /// `max(epsilon, start * factor^outer)`.
    Geometric { start: f64, factor: f64 },
}

#[derive(Debug, Clone)]
pub struct ProxOptions {
    pub epsilon: f64,
    pub rule: SelectionRule,
    pub rho: f64,
    pub max_outer: usize,
    pub inner: InnerTolerance,
    pub inner_max_iter: Option<usize>,
    pub solver: InnerSolver,
    pub mode: InversionMode,
    pub spot_check: bool,
    pub upper_cap: f64,
}

impl ProxOptions {
    pub fn new(epsilon: f64) -> Self {
        Self {
            epsilon,
            rule: SelectionRule::LargestResidual,
            rho: 1.0,
            max_outer: 10_000,
            inner: InnerTolerance::Constant,
            inner_max_iter: None,
            solver: InnerSolver::Auto,
            mode: InversionMode::Auto,
            spot_check: true,
            upper_cap: DEFAULT_UPPER_CAP,
        }
    }

    pub fn with_rho(mut self, rho: f64) -> Self {
        self.rho = rho;
        self
    }

    pub fn with_rule(mut self, rule: SelectionRule) -> Self {
        self.rule = rule;
        self
    }

    pub fn with_solver(mut self, solver: InnerSolver) -> Self {
        self.solver = solver;
        self
    }

    pub fn with_max_outer(mut self, max_outer: usize) -> Self {
        self.max_outer = max_outer;
        self
    }

    fn inner_epsilon(&self, outer: usize) -> f64 {
        match self.inner {
            InnerTolerance::Constant => self.epsilon,
            InnerTolerance::Geometric { start, factor } => {
                (start * factor.powi(outer.min(i32::MAX as usize) as i32)).max(self.epsilon)
            }
        }
    }
}

/// Checks that the augmented partials are strictly increasing in their own
/// argument at a few random feasible points.
fn spot_check(
    prox: &Proximal<'_>,
    a: &WeightMatrix,
    bands: &[DensityBand],
    grid: &Grid,
    rng: &mut ChaCha8Rng,
) -> Result<()> {
    let dim = a.rows();
    let mut x = vec![0.0; dim];
    for _ in 0..SPOT_CHECKS {
        let n = rng.gen_range(0..dim);
        let k = rng.gen_range(0..grid.len());
        let lo = bands[n].lower[k];
        let hi = bands[n].upper[k].min(lo.max(a.get(n, k)) + 1.0);
        if !(hi > lo) {
            continue;
        }
        a.column_into(k, &mut x);
        let s = rng.gen_range(lo..hi);
        let t = rng.gen_range(s..=hi);
        if t <= s {
            continue;
        }
        let site = Site::node(grid, k);
        x[n] = s;
        let fs = prox.partial(n, site, &x);
        x[n] = t;
        let ft = prox.partial(n, site, &x);
        if !(ft > fs) {
            return Err(Error::Numerical {
                n,
                k,
                detail: format!("augmented partial not strictly increasing: f({s}) = {fs}, f({t}) = {ft}"),
            });
        }
    }
    Ok(())
}

fn has_proximal_point(integrand: &dyn Integrand, a: &WeightMatrix, bands: &[DensityBand], grid: &Grid) -> bool {
    let dim = a.rows();
    let mut x = vec![0.0; dim];
    a.column_into(0, &mut x);
    let lower: Vec<f64> = bands.iter().map(|b| b.lower[0]).collect();
    let upper: Vec<f64> = bands.iter().map(|b| b.upper[0]).collect();
    let mut out = vec![0.0; dim];
    integrand.proximal_point(Site::node(grid, 0), &x, &vec![0.0; dim], 1.0, &lower, &upper, &mut out)
}

/// Joint pointwise minimizers for the levels `c`.
fn joint_points(
    integrand: &dyn Integrand,
    anchors: &WeightMatrix,
    c: &[f64],
    rho: f64,
    bands: &[DensityBand],
    grid: &Grid,
) -> Result<WeightMatrix> {
    let dim = anchors.rows();
    let columns: Vec<Result<Vec<f64>>> = (0..grid.len())
        .into_par_iter()
        .with_min_len(128)
        .map_init(
            || (vec![0.0; dim], vec![0.0; dim], vec![0.0; dim]),
            |(h, lower, upper), k| {
                anchors.column_into(k, h);
                for n in 0..dim {
                    lower[n] = bands[n].lower[k];
                    upper[n] = bands[n].upper[k];
                }
                let mut out = vec![0.0; dim];
                if !integrand.proximal_point(Site::node(grid, k), h, c, rho, lower, upper, &mut out) {
                    return Err(Error::Config(format!("integrand {} has no joint proximal point", integrand.name())));
                }
                if let Some(n) = (0..dim).find(|&n| out[n].is_nan()) {
                    return Err(Error::Numerical { n, k, detail: "joint proximal point is NaN".into() });
                }
                Ok(out)
            },
        )
        .collect();
    let mut a = WeightMatrix::zeros(dim, grid.len());
    for (k, col) in columns.into_iter().enumerate() {
        for (n, v) in col?.into_iter().enumerate() {
            a.set(n, k, v);
        }
    }
    Ok(a)
}

/// Solves one proximal subproblem by exact coordinate ascent on its dual:
/// each step moves the level of the density with the largest mass error
/// until that mass is one, with all other levels fixed.
#[allow(clippy::too_many_arguments)]
fn dual_inner(
    integrand: &dyn Integrand,
    anchors: &WeightMatrix,
    c: &mut [f64],
    rho: f64,
    bands: &[DensityBand],
    grid: &Grid,
    mass_tol: f64,
    outer: usize,
) -> Result<(WeightMatrix, usize)> {
    let dim = anchors.rows();
    let mut a = joint_points(integrand, anchors, c, rho, bands, grid)?;
    let max_steps = DUAL_STEPS_PER_DENSITY * dim;
    for step in 0..=max_steps {
        let errors: Vec<f64> = (0..dim).map(|n| (grid.integrate(a.row(n)) - 1.0).abs()).collect();
        let mut n = 0;
        for (m, &e) in errors.iter().enumerate() {
            if e > errors[n] {
                n = m;
            }
        }
        if errors[n] <= mass_tol {
            return Ok((a, step));
        }
        if step == max_steps {
            break;
        }
        let mut levels = c.to_vec();
        let search = search_level(
            |level| {
                levels[n] = level;
                let trial = joint_points(integrand, anchors, &levels, rho, bands, grid)?;
                Ok((grid.integrate(trial.row(n)), trial))
            },
            c[n],
            mass_tol,
        )?;
        match search {
            LevelSearch::Found { c: level, payload, .. } => {
                c[n] = level;
                a = payload;
            }
            LevelSearch::Unreachable { c: level, mass, reason } => {
                return Err(Error::InnerStalled {
                    outer,
                    detail: format!("level search for density {n} failed near {level} (mass {mass}): {reason}"),
                });
            }
        }
    }
    Err(Error::InnerStalled { outer, detail: format!("dual ascent did not reach mass tolerance {mass_tol}") })
}

/// Minimizes the discrete functional with the proximal outer loop.
///
/// The returned trace has one row per outer iteration; `iterations` counts
/// outer iterations and `inner_steps` the coordinate steps summed over them.
pub fn prox_minimize(
    integrand: &dyn Integrand,
    bands: &[DensityBand],
    grid: &Grid,
    options: &ProxOptions,
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
    if !(options.rho > 0.0) || !options.rho.is_finite() {
        return Err(Error::Config(format!("rho must be positive, got {}", options.rho)));
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

    let dual = match options.solver {
        InnerSolver::Dual => true,
        InnerSolver::Coordinate => false,
        InnerSolver::Auto => has_proximal_point(integrand, &a, bands, grid),
    };
    let mass_tol = BcdOptions::new(options.epsilon).tolerances(dim, grid).mass;
    let shared = Arc::new(grid.clone());
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut trace = Vec::new();
    let mut inner_steps = 0;
    let mut inversion = InversionStats::default();

    for outer in 1..=options.max_outer {
        let prox = Proximal::new(integrand, shared.clone(), a.to_rows(), options.rho)?;
        if options.spot_check {
            spot_check(&prox, &a, bands, grid, &mut rng)?;
        }
        if dual {
            let (next, steps) = dual_inner(integrand, &a, &mut c, options.rho, bands, grid, mass_tol, outer)?;
            inner_steps += steps;
            a = next;
        } else {
            let rule = match options.rule {
                SelectionRule::Random(seed) => SelectionRule::Random(seed.wrapping_add(outer as u64)),
                other => other,
            };
            let inner_options = BcdOptions {
                rule,
                max_iter: options.inner_max_iter,
                mode: options.mode,
                upper_cap: options.upper_cap,
                ..BcdOptions::new(options.inner_epsilon(outer))
            };
            let inner = bcd_minimize(&prox, bands, grid, &inner_options, Some(a), Some(c))?;
            if inner.status == Status::Stalled {
                return Err(Error::InnerStalled {
                    outer,
                    detail: inner.note.unwrap_or_else(|| format!("inner gap {}", inner.residuals.gap)),
                });
            }
            inner_steps += inner.iterations;
            inversion.root_solves += inner.inversion.root_solves;
            inversion.capped += inner.inversion.capped;
            inversion.evaluations += inner.inversion.evaluations;
            a = inner.a;
            c = inner.c;
        }

        let residuals = discrete_residuals(integrand, &a, &c, bands, grid)?;
        trace.push(TraceEntry {
            iteration: outer,
            selected: None,
            c: c.clone(),
            residuals: residuals.e_total.clone(),
            gap: residuals.gap,
        });
        if residuals.gap < options.epsilon {
            return Ok(SolverReport {
                a,
                c,
                residuals,
                trace,
                iterations: outer,
                inner_steps,
                status: Status::Converged,
                note: None,
                inversion,
            });
        }
        if outer == options.max_outer {
            return Ok(SolverReport {
                a,
                c,
                residuals,
                trace,
                iterations: outer,
                inner_steps,
                status: Status::MaxIterations,
                note: None,
                inversion,
            });
        }
    }
    Err(Error::Config("max_outer must be at least 1".into()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::integrand::{MinimaxDetect, WeightedKl};

    fn gaussian(grid: &Grid, mean: f64, scale: f64) -> Vec<f64> {
        grid.points()
            .iter()
            .map(|w| scale * (-0.5 * (w - mean).powi(2)).exp() / (2.0 * std::f64::consts::PI).sqrt())
            .collect()
    }

    fn bands(grid: &Grid, means: &[f64]) -> Vec<DensityBand> {
        means
            .iter()
            .map(|&m| DensityBand::new(gaussian(grid, m, 0.8), gaussian(grid, m, 1.2)).unwrap())
            .collect()
    }

    #[test]
    fn agrees_with_plain_descent_on_strictly_convex_problem() {
        let grid = Grid::uniform(-5.0, 5.0, 0.1).unwrap();
        let bands = bands(&grid, &[-0.5, 0.5, 0.0]);
        let kl = WeightedKl::new(vec![0.7, 0.3]).unwrap();
        let plain = bcd_minimize(&kl, &bands, &grid, &BcdOptions::new(1e-10), None, None).unwrap();
        let prox = prox_minimize(&kl, &bands, &grid, &ProxOptions::new(1e-10), None, None).unwrap();
        assert_eq!(prox.status, Status::Converged);
        assert!(plain.a.sup_distance(&prox.a) < 1e-6, "{}", plain.a.sup_distance(&prox.a));
    }

    #[test]
    fn optimal_start_needs_one_outer_iteration() {
        let grid = Grid::uniform(-5.0, 5.0, 0.1).unwrap();
        let bands = bands(&grid, &[-0.5, 0.5, 0.0]);
        let kl = WeightedKl::new(vec![0.5, 0.5]).unwrap();
        let plain = bcd_minimize(&kl, &bands, &grid, &BcdOptions::new(1e-9), None, None).unwrap();
        let prox =
            prox_minimize(&kl, &bands, &grid, &ProxOptions::new(1e-8), Some(plain.a.clone()), Some(plain.c)).unwrap();
        assert_eq!(prox.iterations, 1);
        assert_eq!(prox.inner_steps, 0);
        assert_eq!(prox.a, plain.a);
    }

    #[test]
    fn zero_gap_is_kept_for_every_penalty() {
        let grid = Grid::uniform(0.0, 1.0, 0.25).unwrap();
        let bands = vec![DensityBand::degenerate(vec![0.8; 5]), DensityBand::degenerate(vec![0.8; 5])];
        let kl = WeightedKl::new(vec![1.0]).unwrap();
        for rho in [1e-3, 1.0, 1e3] {
            let r = prox_minimize(&kl, &bands, &grid, &ProxOptions::new(1e-9).with_rho(rho), None, None).unwrap();
            assert_eq!(r.status, Status::Converged);
            assert_eq!(r.gap(), 0.0);
        }
    }

    #[test]
    fn minimax_detection_converges_on_coarse_grid() {
        let grid = Grid::uniform(-5.0, 5.0, 0.1).unwrap();
        let bands = bands(&grid, &[-0.5, 0.5]);
        let r = prox_minimize(&MinimaxDetect::standard_costs(), &bands, &grid, &ProxOptions::new(1e-7), None, None).unwrap();
        assert_eq!(r.status, Status::Converged, "gap {}", r.gap());
        assert!(r.iterations <= 500);
        r.a.check_feasible(&bands, &grid).unwrap();
    }

    #[test]
    fn coordinate_inner_solver_gets_trapped_on_minimax() {
        let grid = Grid::uniform(-5.0, 5.0, 0.1).unwrap();
        let bands = bands(&grid, &[-0.5, 0.5]);
        let opts = ProxOptions::new(1e-7).with_solver(InnerSolver::Coordinate).with_max_outer(200);
        match prox_minimize(&MinimaxDetect::standard_costs(), &bands, &grid, &opts, None, None) {
            Err(Error::InnerStalled { .. }) => {}
            Ok(r) => assert_ne!(r.status, Status::Converged, "gap {}", r.gap()),
            Err(e) => panic!("unexpected error {e}"),
        }
    }

    #[test]
    fn rejects_nonpositive_penalty() {
        let grid = Grid::uniform(0.0, 1.0, 0.25).unwrap();
        let bands = vec![DensityBand::degenerate(vec![0.8; 5]), DensityBand::degenerate(vec![0.8; 5])];
        let kl = WeightedKl::new(vec![1.0]).unwrap();
        assert!(prox_minimize(&kl, &bands, &grid, &ProxOptions::new(1e-9).with_rho(0.0), None, None).is_err());
    }

    #[test]
    fn geometric_schedule_reaches_the_same_point() {
        let grid = Grid::uniform(-5.0, 5.0, 0.1).unwrap();
        let bands = bands(&grid, &[-0.5, 0.5, 0.0]);
        let kl = WeightedKl::new(vec![0.1, 0.9]).unwrap();
        let constant = prox_minimize(&kl, &bands, &grid, &ProxOptions::new(1e-9), None, None).unwrap();
        let mut opts = ProxOptions::new(1e-9);
        opts.inner = InnerTolerance::Geometric { start: 1e-3, factor: 0.5 };
        let geometric = prox_minimize(&kl, &bands, &grid, &opts, None, None).unwrap();
        assert_eq!(geometric.status, Status::Converged);
        assert!(constant.a.sup_distance(&geometric.a) < 1e-5);
    }
}
