//! Property checks on the public API.

use proptest::prelude::*;
use wvcf::cli::parse_grid;
use wvcf::linops::weak_value;
use wvcf::pqho::{GroundStateMethod, PqhoModel, PqhoSystem};
use wvcf::shots::{run_grid, ShotConfig};
use wvcf::weakmeas::{prepare_pointer, wvcf_curve_with};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn range_grid_is_half_open(start in -5.0f64..5.0, len in 0.01f64..10.0, step in 0.01f64..1.0) {
        let stop = start + len;
        let grid = parse_grid(&format!("{start}:{stop}:{step}")).unwrap();
        prop_assert!(!grid.is_empty());
        prop_assert!((grid[0] - start).abs() <= 1e-9 * start.abs().max(1.0));
        prop_assert!(grid.iter().all(|&x| x < stop));
        prop_assert!(grid.last().unwrap() + step >= stop - 1e-9 * stop.abs().max(1.0));
    }

    #[test]
    fn stationary_correlator_is_conjugate_under_time_reversal(lambda in 0.0f64..0.5, t in 0.0f64..20.0) {
        let system = PqhoSystem::new(&PqhoModel::natural(lambda, 8).unwrap()).unwrap();
        let ground = system.ground_state(GroundStateMethod::ExactEigensolve).unwrap();
        let frame = system.excitations().unwrap();
        let omega = &ground.state;
        let forward = weak_value(&frame.at(t), omega, omega).unwrap();
        let backward = weak_value(&frame.at(-t), omega, omega).unwrap();
        prop_assert!((forward - backward.conj()).norm() < 1e-10);
    }

    #[test]
    fn readout_error_shrinks_with_coupling(lambda in 0.0f64..0.3, t in 0.0f64..10.0, theta0 in 0.3f64..1.2) {
        let system = PqhoSystem::new(&PqhoModel::natural(lambda, 6).unwrap()).unwrap();
        let ground = system.ground_state(GroundStateMethod::ExactEigensolve).unwrap();
        let pointer = prepare_pointer(theta0, 0.0);
        let err = |g: f64| {
            let p = wvcf_curve_with(&system, &ground, &[t], g, &pointer).unwrap()[0];
            (p.estimate.value - p.truth).norm()
        };
        let (coarse, fine) = (err(1e-2), err(1e-3));
        prop_assert!(fine < coarse, "{fine} vs {coarse}");
        prop_assert!(fine / coarse > 0.05 && fine / coarse < 0.2, "ratio {}", fine / coarse);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn grids_are_reproducible_per_seed(seed in 0u64..1000, g in 0.1f64..1.0) {
        let config = ShotConfig { g_list: vec![g], n_list: vec![5, 50], m: 30, base_seed: seed, ..ShotConfig::default() };
        let a = run_grid(&config).unwrap();
        let b = run_grid(&config).unwrap();
        for (x, y) in a.cells.iter().zip(&b.cells) {
            prop_assert_eq!(&x.samples, &y.samples);
        }
    }
}
