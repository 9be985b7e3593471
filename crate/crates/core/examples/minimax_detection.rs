//! Least favorable densities of a minimax detection problem.
//!
//! The integrand is a pointwise minimum of two linear costs, so it is convex
//! but not strictly convex. Plain coordinate descent stalls; the proximal
//! iteration converges.
//!
//! `cargo run --release --example minimax_detection`

use bandmin::bcd::{bcd_minimize, BcdOptions, WeightMatrix};
use bandmin::grid::Grid;
use bandmin::integrand::{discrete_objective, MinimaxDetect};
use bandmin::oracle::{gaussian_band, gaussian_samples};
use bandmin::prox::{prox_minimize, ProxOptions};

fn main() -> bandmin::Result<()> {
    let grid = Grid::uniform(-5.0, 5.0, 0.01)?;
    let means = [-0.5, 0.5];
    let bands = means.iter().map(|&m| gaussian_band(m, 1.0, 0.8, 1.2, &grid)).collect::<Result<Vec<_>, _>>()?;
    let start = means
        .iter()
        .zip(&bands)
        .map(|(&m, b)| b.fit(&gaussian_samples(&grid, m, 1.0), &grid))
        .collect::<Result<Vec<_>, _>>()?;
    let start = WeightMatrix::from_rows(start)?;
    let detect = MinimaxDetect::standard_costs();

    let plain = bcd_minimize(&detect, &bands, &grid, &BcdOptions::new(1e-7), Some(start.clone()), None)?;
    println!("coordinate descent: {:?}, gap {:.3e}", plain.status, plain.gap());
    if let Some(note) = &plain.note {
        println!("  {note}");
    }

    let prox = prox_minimize(&detect, &bands, &grid, &ProxOptions::new(1e-7), Some(start), None)?;
    println!(
        "proximal iteration: {:?} after {} outer iterations, gap {:.3e}, minimax risk {:.10}",
        prox.status,
        prox.iterations,
        prox.gap(),
        -discrete_objective(&detect, &prox.a, &grid)
    );
    for (iteration, gap) in prox.gap_trace() {
        println!("  outer {iteration:>3}: gap {gap:.3e}");
    }
    Ok(())
}
