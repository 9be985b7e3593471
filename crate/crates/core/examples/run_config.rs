//! Loads a JSON run configuration and solves it without the command line.
//!
//! `cargo run --release --example run_config -- configs/minimax.json`

use bandmin::cli::{solve, SolveConfig};
use bandmin::integrand::discrete_objective;

fn main() -> bandmin::Result<()> {
    let path = std::env::args().nth(1).unwrap_or_else(|| "configs/weighted_kl.json".into());
    let config = SolveConfig::load(path.as_ref())?;
    let problem = config.build()?;
    println!("{} densities on {} grid points, algorithm {}", problem.bands.len(), problem.grid.len(), config.algorithm.label());
    let r = solve(&problem, &config, config.selection_rule())?;
    println!(
        "{:?} after {} iterations, gap {:.3e}, objective {:.10}",
        r.status,
        r.iterations,
        r.gap(),
        discrete_objective(problem.objective.integrand(), &r.a, &problem.grid)
    );
    Ok(())
}
