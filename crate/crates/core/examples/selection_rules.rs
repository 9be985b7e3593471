//! Iteration counts of the three coordinate selection rules.
//!
//! `cargo run --release --example selection_rules`

use bandmin::bcd::{bcd_minimize, BcdOptions, SelectionRule};
use bandmin::grid::Grid;
use bandmin::integrand::WeightedKl;
use bandmin::oracle::gaussian_band;

fn main() -> bandmin::Result<()> {
    let grid = Grid::uniform(-5.0, 5.0, 0.02)?;
    let bands = [-0.5, 0.5, 0.0]
        .iter()
        .map(|&m| gaussian_band(m, 1.0, 0.8, 1.2, &grid))
        .collect::<Result<Vec<_>, _>>()?;
    println!("{:>10} {:>16} {:>8} {:>14}", "alpha", "largest_residual", "cyclic", "random (mean)");
    for alpha in [[0.5, 0.5], [0.7, 0.3], [0.1, 0.9]] {
        let kl = WeightedKl::new(alpha.to_vec())?;
        let steps = |rule| -> bandmin::Result<usize> {
            Ok(bcd_minimize(&kl, &bands, &grid, &BcdOptions::new(1e-7).with_rule(rule), None, None)?.iterations)
        };
        let mut random = 0;
        for seed in 0..20 {
            random += steps(SelectionRule::Random(seed))?;
        }
        println!(
            "{:>10} {:>16} {:>8} {:>14.1}",
            format!("{}/{}", alpha[0], alpha[1]),
            steps(SelectionRule::LargestResidual)?,
            steps(SelectionRule::Cyclic)?,
            random as f64 / 20.0
        );
    }
    Ok(())
}
