//! Compares both solvers against an independent projected-gradient method.
//!
//! `cargo run --release --example oracle_crosscheck`

use bandmin::bcd::{bcd_minimize, BcdOptions};
use bandmin::grid::Grid;
use bandmin::integrand::{discrete_objective, MinimaxDetect, WeightedKl};
use bandmin::oracle::{gaussian_band, minimax_reference, projected_gradient, OracleOptions};
use bandmin::prox::{prox_minimize, ProxOptions};

fn main() -> bandmin::Result<()> {
    let grid = Grid::uniform(-5.0, 5.0, 0.1)?;
    let bands = [-0.5, 0.5, 0.0]
        .iter()
        .map(|&m| gaussian_band(m, 1.0, 0.8, 1.2, &grid))
        .collect::<Result<Vec<_>, _>>()?;

    let kl = WeightedKl::new(vec![0.7, 0.3])?;
    let bcd = bcd_minimize(&kl, &bands, &grid, &BcdOptions::new(1e-10), None, None)?;
    let oracle = projected_gradient(&kl, &bands, &grid, &OracleOptions::default())?;
    println!(
        "weighted KL: descent {:.12}, projected gradient {:.12} ({} steps)",
        discrete_objective(&kl, &bcd.a, &grid),
        oracle.objective,
        oracle.steps
    );

    let detect = MinimaxDetect::standard_costs();
    let pair = &bands[..2];
    let prox = prox_minimize(&detect, pair, &grid, &ProxOptions::new(1e-9), None, None)?;
    let oracle = minimax_reference(&detect, pair, &grid, 1e-8, &OracleOptions::default())?;
    println!(
        "minimax: proximal {:.12}, smoothed projected gradient {:.12} ({} steps)",
        discrete_objective(&detect, &prox.a, &grid),
        oracle.objective,
        oracle.steps
    );
    Ok(())
}
