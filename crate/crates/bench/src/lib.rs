// SPDX-License-Identifier: Apache-2.0

//! Fixtures shared by the benchmarks.

use fhn_core::{DensityField, FhnParams, FpSolver, FpStepConfig, GridSpec, Result};

/// Solver and resting density on the default grid at noise `d`.
pub fn fp_fixture(d: f64) -> Result<(FpSolver, DensityField)> {
    let grid = GridSpec::default();
    let cfg = FpStepConfig { params: FhnParams::default().with_noise(d), ..FpStepConfig::default() };
    Ok((FpSolver::new(grid, cfg)?, DensityField::resting_population(grid)?))
}

/// A sine at the drive frequency plus a slow ramp, `n` samples at 0.01.
pub fn test_signal(n: usize) -> Vec<f64> {
    (0..n)
        .map(|k| {
            let t = k as f64 * 0.01;
            (std::f64::consts::TAU * 0.55 * t).sin() + 1e-3 * t
        })
        .collect()
}
