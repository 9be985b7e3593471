use bandmin::bcd::{bcd_minimize, BcdOptions, SelectionRule, Status, WeightMatrix};
use bandmin::cli::output::{fmt_f64, parse_f64};
use bandmin::grid::Grid;
use bandmin::integrand::{discrete_objective, WeightedKl};
use bandmin::oracle::{gaussian_band, gaussian_samples};
use bandmin::prox::{prox_minimize, ProxOptions};
use bandmin::residuals::discrete_residuals;
use proptest::prelude::*;

fn instance(means: [f64; 3], scales: (f64, f64)) -> (Grid, Vec<bandmin::bands::DensityBand>, WeightMatrix) {
    let grid = Grid::uniform(-4.0, 4.0, 0.2).unwrap();
    let bands: Vec<_> = means.iter().map(|&m| gaussian_band(m, 1.0, scales.0, scales.1, &grid).unwrap()).collect();
    let rows = means.iter().zip(&bands).map(|(&m, b)| b.fit(&gaussian_samples(&grid, m, 1.0), &grid).unwrap()).collect();
    (grid, bands, WeightMatrix::from_rows(rows).unwrap())
}

fn rule() -> impl Strategy<Value = SelectionRule> {
    prop_oneof![
        Just(SelectionRule::LargestResidual),
        Just(SelectionRule::Cyclic),
        any::<u64>().prop_map(SelectionRule::Random),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn descent_stays_feasible_and_certifies(
        m1 in -1.0f64..0.0, m2 in 0.0f64..1.0, m3 in -0.5f64..0.5,
        lo in 0.5f64..0.95, hi in 1.05f64..1.5, a1 in 0.05f64..0.95, rule in rule(),
    ) {
        let (grid, bands, init) = instance([m1, m2, m3], (lo, hi));
        let kl = WeightedKl::new(vec![a1, 1.0 - a1]).unwrap();
        let r = bcd_minimize(&kl, &bands, &grid, &BcdOptions::new(1e-8).with_rule(rule), Some(init), None).unwrap();
        prop_assert_eq!(r.status, Status::Converged);
        prop_assert!(r.a.check_feasible(&bands, &grid).is_ok());
        let again = discrete_residuals(&kl, &r.a, &r.c, &bands, &grid).unwrap();
        prop_assert!(again.gap >= 0.0 && again.gap <= 1e-8);
        prop_assert!(r.trace.iter().all(|t| t.gap >= 0.0));
    }

    #[test]
    fn both_solvers_reach_the_same_objective(
        m1 in -1.0f64..-0.2, m2 in 0.2f64..1.0, a1 in 0.1f64..0.9,
    ) {
        let (grid, bands, init) = instance([m1, m2, 0.0], (0.8, 1.2));
        let kl = WeightedKl::new(vec![a1, 1.0 - a1]).unwrap();
        let b = bcd_minimize(&kl, &bands, &grid, &BcdOptions::new(1e-10), Some(init.clone()), None).unwrap();
        let p = prox_minimize(&kl, &bands, &grid, &ProxOptions::new(1e-10), Some(init), None).unwrap();
        let (fb, fp) = (discrete_objective(&kl, &b.a, &grid), discrete_objective(&kl, &p.a, &grid));
        prop_assert!((fb - fp).abs() <= 1e-9 * fb.abs().max(1.0), "{} vs {}", fb, fp);
    }

    #[test]
    fn reports_do_not_depend_on_thread_count(m1 in -1.0f64..0.0, seed in any::<u64>()) {
        let (grid, bands, init) = instance([m1, 0.5, 0.0], (0.8, 1.2));
        let kl = WeightedKl::new(vec![0.6, 0.4]).unwrap();
        let options = BcdOptions::new(1e-9).with_rule(SelectionRule::Random(seed));
        let solve = |threads: usize| {
            let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
            pool.install(|| bcd_minimize(&kl, &bands, &grid, &options, Some(init.clone()), None).unwrap())
        };
        let (one, four) = (solve(1), solve(4));
        prop_assert_eq!(one.a.to_rows(), four.a.to_rows());
        prop_assert_eq!(one.c, four.c);
        prop_assert_eq!(one.iterations, four.iterations);
    }
}

proptest! {
    #[test]
    fn csv_numbers_round_trip(bits in any::<u64>()) {
        let x = f64::from_bits(bits);
        let back = parse_f64(&fmt_f64(x)).unwrap();
        if x.is_nan() {
            prop_assert!(back.is_nan());
        } else {
            prop_assert_eq!(back.to_bits(), x.to_bits());
        }
    }
}
