//! Least favorable densities for a weighted sum of two KL divergences.
//!
//! Three densities live in bands of 0.8 to 1.2 times shifted unit Gaussians.
//! The third one is pulled towards the weighted geometric mean of the other
//! two, so its shape depends on the weights.
//!
//! `cargo run --release --example weighted_kl`

use bandmin::bcd::{bcd_minimize, BcdOptions, WeightMatrix};
use bandmin::grid::Grid;
use bandmin::integrand::{discrete_objective, WeightedKl};
use bandmin::oracle::{gaussian_band, gaussian_samples};

fn main() -> bandmin::Result<()> {
    let grid = Grid::uniform(-5.0, 5.0, 0.01)?;
    let means = [-0.5, 0.5, 0.0];
    let bands = means.iter().map(|&m| gaussian_band(m, 1.0, 0.8, 1.2, &grid)).collect::<Result<Vec<_>, _>>()?;
    let start = means
        .iter()
        .zip(&bands)
        .map(|(&m, b)| b.fit(&gaussian_samples(&grid, m, 1.0), &grid))
        .collect::<Result<Vec<_>, _>>()?;
    let start = WeightMatrix::from_rows(start)?;

    for alpha in [[0.5, 0.5], [0.7, 0.3], [0.1, 0.9]] {
        let kl = WeightedKl::new(alpha.to_vec())?;
        let r = bcd_minimize(&kl, &bands, &grid, &BcdOptions::new(1e-7), Some(start.clone()), None)?;
        let center = grid.len() / 2;
        println!(
            "alpha {alpha:?}: {:?} after {} iterations, gap {:.2e}, objective {:.8}, q(0) = {:.5} {:.5} {:.5}",
            r.status,
            r.iterations,
            r.gap(),
            discrete_objective(&kl, &r.a, &grid),
            r.a.get(0, center),
            r.a.get(1, center),
            r.a.get(2, center),
        );
    }
    Ok(())
}
