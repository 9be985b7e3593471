//! With all but the last density fixed, the weighted KL sum is bounded below
//! by minus the log of a generalized Bhattacharyya coefficient. A band wide
//! enough never to bind makes the bound tight.
//!
//! `cargo run --release --example bhattacharyya_bound`

use bandmin::bands::DensityBand;
use bandmin::bcd::{bcd_minimize, BcdOptions};
use bandmin::grid::Grid;
use bandmin::integrand::{discrete_objective, WeightedKl};
use bandmin::oracle::{bhattacharyya_bound, gaussian_band, gaussian_samples};

fn main() -> bandmin::Result<()> {
    let grid = Grid::uniform(-10.0, 10.0, 0.01)?;
    let p1 = gaussian_samples(&grid, -0.5, 1.0);
    let p2 = gaussian_samples(&grid, 0.5, 1.0);
    for (name, upper_scale) in [("wide band", 12.0), ("tight band", 1.2)] {
        let bands = vec![
            DensityBand::degenerate(p1.clone()),
            DensityBand::degenerate(p2.clone()),
            gaussian_band(0.0, 1.0, 0.0, upper_scale, &grid)?,
        ];
        for alpha in [[0.5, 0.5], [0.7, 0.3]] {
            let kl = WeightedKl::new(alpha.to_vec())?;
            let r = bcd_minimize(&kl, &bands, &grid, &BcdOptions::new(1e-9), None, None)?;
            let bound = bhattacharyya_bound(&[p1.clone(), p2.clone()], &alpha, &grid)?;
            println!(
                "{name}, alpha {alpha:?}: minimum {:.10}, bound {bound:.10} (closed form {:.10})",
                discrete_objective(&kl, &r.a, &grid),
                alpha[0] * alpha[1] / 2.0
            );
        }
    }
    Ok(())
}
