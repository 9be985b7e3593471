//! Coordinate descent and the proximal iteration on the same strictly convex
//! problem: same minimizer, different amounts of work.
//!
//! `cargo run --release --example proximal_vs_bcd`

use std::time::Instant;

use bandmin::bcd::{bcd_minimize, BcdOptions};
use bandmin::grid::Grid;
use bandmin::integrand::WeightedKl;
use bandmin::oracle::gaussian_band;
use bandmin::prox::{prox_minimize, InnerTolerance, ProxOptions};

fn main() -> bandmin::Result<()> {
    let grid = Grid::uniform(-5.0, 5.0, 0.05)?;
    let bands = [-0.5, 0.5, 0.0]
        .iter()
        .map(|&m| gaussian_band(m, 1.0, 0.8, 1.2, &grid))
        .collect::<Result<Vec<_>, _>>()?;
    let kl = WeightedKl::new(vec![0.7, 0.3])?;

    let t = Instant::now();
    let bcd = bcd_minimize(&kl, &bands, &grid, &BcdOptions::new(1e-9), None, None)?;
    println!("bcd:  {:?}, {} steps, {:.1} ms", bcd.status, bcd.iterations, t.elapsed().as_secs_f64() * 1e3);

    for rho in [0.1, 1.0, 10.0] {
        let t = Instant::now();
        let prox = prox_minimize(&kl, &bands, &grid, &ProxOptions::new(1e-9).with_rho(rho), None, None)?;
        println!(
            "prox rho {rho:>4}: {:?}, {} outer / {} inner steps, {:.1} ms, distance to bcd {:.2e}",
            prox.status,
            prox.iterations,
            prox.inner_steps,
            t.elapsed().as_secs_f64() * 1e3,
            prox.a.sup_distance(&bcd.a)
        );
    }

    let mut options = ProxOptions::new(1e-9);
    options.inner = InnerTolerance::Geometric { start: 1e-3, factor: 0.1 };
    let prox = prox_minimize(&kl, &bands, &grid, &options, None, None)?;
    println!("prox with shrinking inner tolerance: {} outer / {} inner steps", prox.iterations, prox.inner_steps);
    Ok(())
}
