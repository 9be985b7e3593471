//! Command-line front end: `solve`, `compare-rules` and `verify`.
//!
//! Exit codes: 0 converged, 1 configuration or runtime error, 2 iteration
//! limit reached, 3 stalled, 4 verification mismatch.

pub mod config;
pub mod output;

use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Parser, Subcommand};
use rayon::prelude::*;
use serde_json::json;

use crate::bcd::{bcd_minimize, BcdOptions, SelectionRule, SolverReport, Status};
use crate::integrand::discrete_objective;
use crate::oracle::{minimax_reference, projected_gradient, OracleOptions};
use crate::prox::{prox_minimize, ProxOptions};
use crate::{Error, Result};

pub use config::{Algorithm, Objective, Problem, SolveConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_MAX_ITER: i32 = 2;
pub const EXIT_STALLED: i32 = 3;
pub const EXIT_MISMATCH: i32 = 4;

/// Default cross-check tolerance (relative objective difference).
pub const VERIFY_TOLERANCE: f64 = 1e-5;
/// Final smoothing width of the minimax reference.
pub const VERIFY_SMOOTHING: f64 = 1e-8;

#[derive(Debug, Parser)]
#[command(name = "bandmin", version, about = "Convex functionals of densities under band constraints")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// Output directory; overrides the config's `output_dir`.
    #[arg(long, global = true)]
    pub output_dir: Option<PathBuf>,

    /// Worker threads; 0 picks automatically.
    #[arg(long, global = true, env = "BANDMIN_THREADS", default_value_t = 0)]
    pub threads: usize,

    #[arg(long, global = true)]
    pub quiet: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve one problem and write densities, log-likelihood ratios and trace.
    Solve { config: PathBuf },
    /// Iteration counts for every selection rule.
    CompareRules { config: PathBuf },
    /// Cross-check the solver objective against the projected-gradient oracle.
    Verify { config: PathBuf },
}

pub fn status_code(status: Status) -> i32 {
    match status {
        Status::Converged => EXIT_OK,
        Status::MaxIterations => EXIT_MAX_ITER,
        Status::Stalled => EXIT_STALLED,
    }
}

/// Parses `args` and runs the command; returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    match Cli::try_parse_from(args) {
        Ok(cli) => run(&cli),
        Err(e) => {
            let code = if e.use_stderr() { EXIT_ERROR } else { EXIT_OK };
            let _ = e.print();
            code
        }
    }
}

pub fn run(cli: &Cli) -> i32 {
    let pool = match rayon::ThreadPoolBuilder::new().num_threads(cli.threads).build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: cannot start thread pool: {e}");
            return EXIT_ERROR;
        }
    };
    let result = pool.install(|| match &cli.command {
        Command::Solve { config } => run_solve(config, cli),
        Command::CompareRules { config } => run_compare_rules(config, cli),
        Command::Verify { config } => run_verify(config, cli),
    });
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_ERROR
        }
    }
}

fn output_dir(config_path: &Path, config: &SolveConfig, cli: &Cli) -> Result<PathBuf> {
    let dir = match (&cli.output_dir, &config.output_dir) {
        (Some(d), _) => d.clone(),
        (None, Some(d)) if d.is_relative() => config_path.parent().unwrap_or(Path::new(".")).join(d),
        (None, Some(d)) => d.clone(),
        (None, None) => PathBuf::from("bandmin-out"),
    };
    std::fs::create_dir_all(&dir)?;
    Ok(dir)
}

/// Runs the configured algorithm on `problem` with `rule`.
pub fn solve(problem: &Problem, config: &SolveConfig, rule: SelectionRule) -> Result<SolverReport> {
    let f = problem.objective.integrand();
    let init = Some(problem.init.clone());
    match config.algorithm {
        Algorithm::Bcd => {
            let mut options = BcdOptions::new(config.epsilon).with_rule(rule);
            options.max_iter = config.max_iter;
            bcd_minimize(f, &problem.bands, &problem.grid, &options, init, None)
        }
        Algorithm::Prox => {
            let mut options = ProxOptions::new(config.epsilon).with_rule(rule);
            if let Some(rho) = config.rho {
                options = options.with_rho(rho);
            }
            if let Some(m) = config.max_outer {
                options = options.with_max_outer(m);
            }
            options.inner_max_iter = config.max_iter;
            prox_minimize(f, &problem.bands, &problem.grid, &options, init, None)
        }
    }
}

pub fn run_solve(config_path: &Path, cli: &Cli) -> Result<i32> {
    let config = SolveConfig::load(config_path)?;
    let problem = config.build()?;
    let dir = output_dir(config_path, &config, cli)?;
    let start = Instant::now();
    let report = solve(&problem, &config, config.selection_rule())?;
    let elapsed = start.elapsed().as_secs_f64();
    let objective = discrete_objective(problem.objective.integrand(), &report.a, &problem.grid);

    std::fs::write(dir.join("densities.csv"), output::densities_csv(&report.a, &problem.bands, &problem.grid))?;
    std::fs::write(dir.join("llr.csv"), output::llr_csv(&report.a, &problem.grid))?;
    std::fs::write(dir.join("trace.csv"), output::trace_csv(&report))?;
    let summary = json!({
        "status": format!("{:?}", report.status),
        "algorithm": config.algorithm.label(),
        "rule": config.selection_rule().label(),
        "iterations": report.iterations,
        "inner_steps": report.inner_steps,
        "gap": report.gap(),
        "objective": objective,
        "c": report.c,
        "residuals": report.residuals.e_total,
        "note": report.note,
        "wall_time_s": elapsed,
    });
    std::fs::write(dir.join("report.json"), serde_json::to_string_pretty(&summary)? + "\n")?;

    if !cli.quiet {
        println!(
            "{:?} after {} iterations, gap {:.3e}, objective {:.12}, {:.3}s -> {}",
            report.status,
            report.iterations,
            report.gap(),
            objective,
            elapsed,
            dir.display()
        );
    }
    if let (false, Some(note)) = (report.status == Status::Converged, &report.note) {
        eprintln!("note: {note}");
    }
    if report.status == Status::Stalled && config.algorithm == Algorithm::Bcd {
        eprintln!("hint: coordinate descent stalled; set \"algorithm\": \"prox\" for integrands that are not strictly convex");
    }
    Ok(status_code(report.status))
}

#[derive(Debug, Clone)]
struct Run {
    status: Status,
    iterations: usize,
    outer: usize,
    seconds: f64,
}

fn timed_run(problem: &Problem, config: &SolveConfig, rule: SelectionRule) -> Result<Run> {
    let start = Instant::now();
    let r = solve(problem, config, rule)?;
    let seconds = start.elapsed().as_secs_f64();
    let (iterations, outer) = match config.algorithm {
        Algorithm::Bcd => (r.iterations, 1),
        Algorithm::Prox => (r.inner_steps, r.iterations),
    };
    Ok(Run { status: r.status, iterations, outer, seconds })
}

pub fn run_compare_rules(config_path: &Path, cli: &Cli) -> Result<i32> {
    let config = SolveConfig::load(config_path)?;
    let base = config.build()?;
    let dir = output_dir(config_path, &config, cli)?;
    let settings: Vec<Option<Vec<f64>>> = match (&config.objective, &config.alphas) {
        (_, Some(list)) => list.iter().cloned().map(Some).collect(),
        (config::ObjectiveSpec::WeightedKl { alpha }, None) => vec![Some(alpha.clone())],
        _ => vec![None],
    };
    let seed = config.seed.unwrap_or(0);
    let mut csv = String::from(
        "rule,alpha,runs,converged,iterations_mean,iterations_min,iterations_max,outer_mean,wall_time_s\n",
    );
    let mut code = EXIT_OK;
    for alpha in &settings {
        let problem = match alpha {
            Some(a) => base.with_alpha(a).map_err(|e| Error::Config(format!("alphas: {e}")))?,
            None => base.clone(),
        };
        let label = alpha.as_ref().map(|a| a.iter().map(|x| x.to_string()).collect::<Vec<_>>().join("/")).unwrap_or_default();
        let cases: [(&str, Vec<SelectionRule>); 3] = [
            ("largest_residual", vec![SelectionRule::LargestResidual]),
            ("cyclic", vec![SelectionRule::Cyclic]),
            ("random", (0..config.random_runs as u64).map(|i| SelectionRule::Random(seed + i)).collect()),
        ];
        for (name, rules) in cases {
            let runs: Vec<Run> =
                rules.par_iter().map(|&rule| timed_run(&problem, &config, rule)).collect::<Result<_>>()?;
            if runs.is_empty() {
                continue;
            }
            let converged = runs.iter().filter(|r| r.status == Status::Converged).count();
            for r in &runs {
                code = code.max(status_code(r.status));
            }
            let count = runs.len() as f64;
            let mean = runs.iter().map(|r| r.iterations as f64).sum::<f64>() / count;
            let min = runs.iter().map(|r| r.iterations).min().unwrap_or(0);
            let max = runs.iter().map(|r| r.iterations).max().unwrap_or(0);
            let outer = runs.iter().map(|r| r.outer as f64).sum::<f64>() / count;
            let secs = runs.iter().map(|r| r.seconds).sum::<f64>() / count;
            csv.push_str(&format!(
                "{name},{label},{},{converged},{mean},{min},{max},{outer},{secs:.6}\n",
                runs.len()
            ));
            if !cli.quiet {
                println!("{name:>16} alpha {label:<10} converged {converged}/{} iterations mean {mean:.1} [{min}, {max}]", runs.len());
            }
        }
    }
    std::fs::write(dir.join("rules.csv"), csv)?;
    Ok(code)
}

pub fn run_verify(config_path: &Path, cli: &Cli) -> Result<i32> {
    let config = SolveConfig::load(config_path)?;
    let problem = match config.verify.step {
        Some(step) => {
            let grid = crate::grid::Grid::uniform(config.grid.lo, config.grid.hi, step)
                .map_err(|e| Error::Config(format!("verify.step: {e}")))?;
            config.build_on(grid)?
        }
        None => config.build()?,
    };
    let dir = output_dir(config_path, &config, cli)?;
    let tolerance = config.verify.tolerance.unwrap_or(VERIFY_TOLERANCE);
    let report = solve(&problem, &config, config.selection_rule())?;
    let f = problem.objective.integrand();
    let solver_objective = discrete_objective(f, &report.a, &problem.grid);
    let options = OracleOptions { init: Some(problem.init.clone()), ..OracleOptions::default() };
    let oracle = match &problem.objective {
        Objective::WeightedKl(kl) => projected_gradient(kl, &problem.bands, &problem.grid, &options)?,
        Objective::Minimax(m) => minimax_reference(
            m,
            &problem.bands,
            &problem.grid,
            config.verify.smoothing.unwrap_or(VERIFY_SMOOTHING),
            &options,
        )?,
        Objective::Quadratic(q) => projected_gradient(q, &problem.bands, &problem.grid, &options)?,
    };
    let rel = (solver_objective - oracle.objective).abs() / oracle.objective.abs().max(f64::MIN_POSITIVE);
    let agree = rel <= tolerance;
    let summary = json!({
        "status": format!("{:?}", report.status),
        "grid_points": problem.grid.len(),
        "solver_objective": solver_objective,
        "oracle_objective": oracle.objective,
        "oracle_steps": oracle.steps,
        "relative_difference": rel,
        "tolerance": tolerance,
        "agree": agree,
        "gap": report.gap(),
    });
    std::fs::write(dir.join("verify.json"), serde_json::to_string_pretty(&summary)? + "\n")?;
    if !cli.quiet {
        println!(
            "solver {:.12} oracle {:.12} relative difference {rel:.3e} ({})",
            solver_objective,
            oracle.objective,
            if agree { "agree" } else { "MISMATCH" }
        );
    }
    Ok(match status_code(report.status) {
        EXIT_OK if !agree => EXIT_MISMATCH,
        c => c,
    })
}
