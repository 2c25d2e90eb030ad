// SPDX-License-Identifier: Apache-2.0

use fhn_core::model::{rk4_step, NeuronState};
use fhn_core::sde::{histogram2d, run_ensemble, run_ensemble_with_threads, Ensemble};
use fhn_core::{DensityField, DriveSpec, EnsembleConfig, FhnParams, GridSpec, InitialCondition};

fn config() -> EnsembleConfig {
    EnsembleConfig {
        params: FhnParams::default().with_noise(0.005),
        drive: DriveSpec::Sum {
            terms: vec![
                DriveSpec::Periodic { amplitude: 0.15, frequency: 0.55 },
                DriveSpec::Feedback { gain: 0.5, delay: 0.3 },
            ],
        },
        n_trajectories: 2_000,
        t_end: 5.0,
        master_seed: 42,
        ..EnsembleConfig::default()
    }
}

#[test]
fn bit_identical_across_worker_counts() {
    let cfg = config();
    let reference = run_ensemble_with_threads(&cfg, 1).unwrap();
    for threads in [2, 3, 8] {
        let run = run_ensemble_with_threads(&cfg, threads).unwrap();
        let same = |a: &[f64], b: &[f64]| a.iter().zip(b).all(|(x, y)| x.to_bits() == y.to_bits());
        assert!(same(&run.mean_u, &reference.mean_u), "{threads} threads");
        assert!(same(&run.mean_v, &reference.mean_v), "{threads} threads");
        assert!(same(&run.supra_fraction, &reference.supra_fraction));
        assert!(same(&run.input, &reference.input));
        assert_eq!(run.final_histogram, reference.final_histogram);
    }
}

#[test]
fn different_seeds_differ() {
    let a = run_ensemble(&config()).unwrap();
    let b = run_ensemble(&EnsembleConfig { master_seed: 43, ..config() }).unwrap();
    assert_ne!(a.mean_u.last(), b.mean_u.last());
}

/// Largest |<u> - u_ref| over t < 4 for a noiseless run at step `dt`, with
/// RK4 at step 1e-4 as the reference.
fn noiseless_error(dt: f64) -> f64 {
    let cfg = EnsembleConfig {
        params: FhnParams::default().with_noise(0.0),
        drive: DriveSpec::Constant { amplitude: 0.4 },
        n_trajectories: 4,
        dt,
        t_end: 4.0,
        initial: InitialCondition::Fixed { u: -1.0, v: -0.55 },
        ..EnsembleConfig::default()
    };
    let run = run_ensemble(&cfg).unwrap();
    let fine = (dt / 1e-4).round() as usize;
    let mut s = NeuronState::new(-1.0, -0.55);
    let mut worst: f64 = 0.0;
    for &u in &run.mean_u {
        worst = worst.max((u - s.u).abs());
        for _ in 0..fine {
            s = rk4_step(&cfg.params, s, 0.4, 1e-4);
        }
    }
    worst
}

/// The explicit scheme is first order: halving dt halves the error.
#[test]
fn noiseless_ensemble_converges_to_rk4() {
    let errors: Vec<f64> = [0.01, 0.005, 0.0025].into_iter().map(noiseless_error).collect();
    for w in errors.windows(2) {
        let order = (w[0] / w[1]).log2();
        assert!((0.8..1.5).contains(&order), "observed order {order:.2}, errors {errors:?}");
    }
}

#[test]
fn initial_histogram_matches_gaussian() {
    let grid = GridSpec { du: 0.15, dv: 0.065, ..GridSpec::default() };
    let ensemble = Ensemble::new(
        FhnParams::default(),
        grid,
        InitialCondition::RESTING_POPULATION,
        200_000,
        3,
    );
    let hist = histogram2d(ensemble.surviving_states(), &grid);
    assert_eq!(hist.in_bounds(), 200_000);
    let expected = DensityField::resting_population(grid).unwrap();
    let l1 = expected.l1_distance_normalized(&hist.to_density(&grid)).unwrap();
    // Node sampling of the Gaussian versus cell counts, plus sampling noise.
    assert!(l1 < 0.05, "L1 = {l1}");
}
