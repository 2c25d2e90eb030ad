// SPDX-License-Identifier: Apache-2.0

use criterion::{criterion_group, criterion_main, BatchSize, Criterion};
use fhn_bench::{fp_fixture, test_signal};
use fhn_core::sde::{Ensemble, InitialCondition};
use fhn_core::spectral::{periodogram, snr};
use fhn_core::{FhnParams, GridSpec, TimeSeries};

fn fp_step(c: &mut Criterion) {
    let mut group = c.benchmark_group("fp_step");
    group.sample_size(20);
    for d in [0.001, 0.005] {
        let (mut solver, mut field) = fp_fixture(d).unwrap();
        // Spread the density first so the step works on a realistic support.
        for _ in 0..200 {
            solver.step(&mut field, 0.0).unwrap();
        }
        group.bench_function(format!("D={d}"), |b| {
            b.iter(|| solver.step(&mut field, 0.0).unwrap())
        });
    }
    group.finish();
}

fn em_ensemble_step(c: &mut Criterion) {
    let params = FhnParams::default().with_noise(0.005);
    c.bench_function("em_step_10k", |b| {
        b.iter_batched(
            || Ensemble::new(params, GridSpec::default(), InitialCondition::RESTING_POPULATION, 10_000, 1),
            |mut e| e.step(0.1, 0.01),
            BatchSize::LargeInput,
        )
    });
}

fn spectral(c: &mut Criterion) {
    let series = TimeSeries::new(test_signal(25_001), 0.01, 50.0).unwrap();
    c.bench_function("periodogram_25001", |b| b.iter(|| periodogram(&series).unwrap()));
    c.bench_function("snr_25001", |b| b.iter(|| snr(&series, 0.55).unwrap()));
}

criterion_group!(benches, fp_step, em_ensemble_step, spectral);
criterion_main!(benches);
