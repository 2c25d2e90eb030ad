// SPDX-License-Identifier: Apache-2.0

//! Euler–Maruyama Monte Carlo for the noisy FitzHugh–Nagumo neuron.
//!
//! Every trajectory owns a ChaCha8 stream selected by its index, and
//! trajectories are reduced in fixed-size chunks in index order, so results
//! are bit-identical whatever the number of worker threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::drive::{DelayBuffer, DriveSpec};
use crate::error::{Error, Result};
use crate::fokker_planck::GridSpec;
use crate::model::{step_count, FhnParams, NeuronState};

/// Trajectories per reduction chunk. Part of the reproducibility contract:
/// changing it changes the floating-point summation order.
pub const CHUNK: usize = 256;

pub const DEFAULT_TRAJECTORIES: usize = 10_000;

/// One Euler–Maruyama step. Noise enters only the `u` equation, scaled by `c`.
#[inline]
pub fn em_step(params: &FhnParams, state: NeuronState, input: f64, dt: f64, z: f64) -> NeuronState {
    let NeuronState { u, v } = state;
    let du = params.c * (-v + u - u * u * u / 3.0 + input);
    let dv = u - params.b * v + params.a;
    NeuronState::new(
        u + dt * du + params.c * (2.0 * params.noise * dt).sqrt() * z,
        v + dt * dv,
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialCondition {
    Fixed {
        u: f64,
        v: f64,
    },
    Gaussian {
        mean_u: f64,
        mean_v: f64,
        var_u: f64,
        var_v: f64,
    },
}

impl InitialCondition {
    /// All neurons near rest; matches the density solver's starting field.
    pub const RESTING_POPULATION: Self = InitialCondition::Gaussian {
        mean_u: -1.0,
        mean_v: -0.55,
        var_u: 0.05,
        var_v: 0.013,
    };

    fn validate(&self) -> Result<()> {
        match *self {
            InitialCondition::Fixed { u, v } => {
                if !(u.is_finite() && v.is_finite()) {
                    return Err(Error::Config("initial state must be finite".into()));
                }
            }
            InitialCondition::Gaussian { var_u, var_v, .. } => {
                if !(var_u >= 0.0 && var_v >= 0.0) {
                    return Err(Error::Config("initial variances must be non-negative".into()));
                }
            }
        }
        Ok(())
    }

    fn sample(&self, rng: &mut ChaCha8Rng) -> NeuronState {
        match *self {
            InitialCondition::Fixed { u, v } => NeuronState::new(u, v),
            InitialCondition::Gaussian {
                mean_u,
                mean_v,
                var_u,
                var_v,
            } => {
                let zu: f64 = StandardNormal.sample(rng);
                let zv: f64 = StandardNormal.sample(rng);
                NeuronState::new(mean_u + var_u.sqrt() * zu, mean_v + var_v.sqrt() * zv)
            }
        }
    }
}

impl Default for InitialCondition {
    fn default() -> Self {
        Self::RESTING_POPULATION
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleConfig {
    pub params: FhnParams,
    pub drive: DriveSpec,
    pub n_trajectories: usize,
    pub dt: f64,
    pub t_end: f64,
    pub initial: InitialCondition,
    pub master_seed: u64,
    /// Absorbing box; also the binning of the final histogram.
    pub bounds: GridSpec,
}

impl Default for EnsembleConfig {
    fn default() -> Self {
        Self {
            params: FhnParams::default(),
            drive: DriveSpec::default(),
            n_trajectories: DEFAULT_TRAJECTORIES,
            dt: 0.01,
            t_end: 150.0,
            initial: InitialCondition::default(),
            master_seed: 0,
            bounds: GridSpec::default(),
        }
    }
}

impl EnsembleConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(Error::Config(format!("dt must be positive, got {}", self.dt)));
        }
        if !(self.t_end.is_finite() && self.t_end > self.dt) {
            return Err(Error::Config(format!(
                "t_end ({}) must exceed dt ({})",
                self.t_end, self.dt
            )));
        }
        if self.n_trajectories == 0 {
            return Err(Error::Config("ensemble needs at least one trajectory".into()));
        }
        self.params.validate()?;
        self.drive.validate()?;
        self.initial.validate()?;
        self.bounds.validate()
    }
}

/// Counts on the node-centred cells of a grid.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Histogram2d {
    pub n_u: usize,
    pub n_v: usize,
    /// Row-major in `v`, like [`crate::DensityField`].
    pub counts: Vec<u64>,
    pub out_of_bounds: u64,
}

impl Histogram2d {
    pub fn new(grid: &GridSpec) -> Self {
        Self {
            n_u: grid.n_u(),
            n_v: grid.n_v(),
            counts: vec![0; grid.len()],
            out_of_bounds: 0,
        }
    }

    pub fn add(&mut self, grid: &GridSpec, state: NeuronState) {
        match grid.nearest_node(state.u, state.v) {
            Some((i, j)) => self.counts[j * self.n_u + i] += 1,
            None => self.out_of_bounds += 1,
        }
    }

    pub fn in_bounds(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// Counts scaled to a density on the grid (unit integral over the grid).
    pub fn to_density(&self, grid: &GridSpec) -> Vec<f64> {
        let total = self.in_bounds().max(1) as f64;
        let scale = 1.0 / (total * grid.cell_area());
        self.counts.iter().map(|&c| c as f64 * scale).collect()
    }
}

/// Bin states on the node-centred cells of `grid`; each cell is half-open
/// with its lower edges inclusive.
pub fn histogram2d<'a, I>(states: I, grid: &GridSpec) -> Histogram2d
where
    I: IntoIterator<Item = &'a NeuronState>,
{
    let mut hist = Histogram2d::new(grid);
    for &s in states {
        hist.add(grid, s);
    }
    hist
}

/// Aggregates over the surviving trajectories after a step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnsembleStats {
    pub mean_u: f64,
    pub mean_v: f64,
    pub alive: usize,
    /// Fraction of survivors with `u > 0`.
    pub supra_fraction: f64,
}

#[derive(Debug, Clone, Copy, Default)]
struct Partial {
    sum_u: f64,
    sum_v: f64,
    alive: usize,
    supra: usize,
}

impl Partial {
    fn merge(self, other: Partial) -> Partial {
        Partial {
            sum_u: self.sum_u + other.sum_u,
            sum_v: self.sum_v + other.sum_v,
            alive: self.alive + other.alive,
            supra: self.supra + other.supra,
        }
    }

    fn stats(self) -> EnsembleStats {
        let n = self.alive as f64;
        if self.alive == 0 {
            return EnsembleStats {
                mean_u: f64::NAN,
                mean_v: f64::NAN,
                alive: 0,
                supra_fraction: 0.0,
            };
        }
        EnsembleStats {
            mean_u: self.sum_u / n,
            mean_v: self.sum_v / n,
            alive: self.alive,
            supra_fraction: self.supra as f64 / n,
        }
    }
}

#[derive(Debug, Clone)]
struct Walker {
    state: NeuronState,
    alive: bool,
    rng: ChaCha8Rng,
}

/// Trajectory set advanced in lockstep, so a common input (such as the
/// population feedback) can be applied between steps.
#[derive(Debug, Clone)]
pub struct Ensemble {
    params: FhnParams,
    bounds: GridSpec,
    walkers: Vec<Walker>,
}

fn trajectory_rng(master_seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(index as u64);
    rng
}

impl Ensemble {
    pub fn new(
        params: FhnParams,
        bounds: GridSpec,
        initial: InitialCondition,
        n_trajectories: usize,
        master_seed: u64,
    ) -> Self {
        let walkers = (0..n_trajectories)
            .map(|k| {
                let mut rng = trajectory_rng(master_seed, k);
                let state = initial.sample(&mut rng);
                Walker {
                    alive: bounds.contains(state.u, state.v),
                    state,
                    rng,
                }
            })
            .collect();
        Self {
            params,
            bounds,
            walkers,
        }
    }

    pub fn len(&self) -> usize {
        self.walkers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.walkers.is_empty()
    }

    pub fn absorbed(&self) -> usize {
        self.walkers.iter().filter(|w| !w.alive).count()
    }

    pub fn surviving_states(&self) -> impl Iterator<Item = &NeuronState> {
        self.walkers.iter().filter(|w| w.alive).map(|w| &w.state)
    }

    pub fn stats(&self) -> EnsembleStats {
        self.walkers
            .chunks(CHUNK)
            .map(chunk_partial)
            .fold(Partial::default(), Partial::merge)
            .stats()
    }

    /// Advance every surviving trajectory by `dt` under a common input.
    pub fn step(&mut self, input: f64, dt: f64) -> EnsembleStats {
        let params = self.params;
        let bounds = self.bounds;
        let partials: Vec<Partial> = self
            .walkers
            .par_chunks_mut(CHUNK)
            .map(|chunk| {
                for w in chunk.iter_mut().filter(|w| w.alive) {
                    let z: f64 = StandardNormal.sample(&mut w.rng);
                    w.state = em_step(&params, w.state, input, dt, z);
                    if !bounds.contains(w.state.u, w.state.v) {
                        w.alive = false;
                    }
                }
                chunk_partial(chunk)
            })
            .collect();
        partials
            .into_iter()
            .fold(Partial::default(), Partial::merge)
            .stats()
    }
}

fn chunk_partial(chunk: &[Walker]) -> Partial {
    let mut p = Partial::default();
    for w in chunk.iter().filter(|w| w.alive) {
        p.sum_u += w.state.u;
        p.sum_v += w.state.v;
        p.alive += 1;
        if w.state.u > 0.0 {
            p.supra += 1;
        }
    }
    p
}

#[derive(Debug, Clone)]
pub struct EnsembleRun {
    pub mean_u: Vec<f64>,
    pub mean_v: Vec<f64>,
    /// Supra-threshold fraction of the survivors at every sample.
    pub supra_fraction: Vec<f64>,
    /// Input current applied during the step starting at each sample.
    pub input: Vec<f64>,
    pub final_histogram: Histogram2d,
    pub absorbed: usize,
    pub config: EnsembleConfig,
}

/// Integrate the whole ensemble. Feedback drives read the survivors'
/// supra-threshold fraction through a delay line prefilled with its initial
/// value.
pub fn run_ensemble(config: &EnsembleConfig) -> Result<EnsembleRun> {
    config.validate()?;
    let steps = step_count(config.t_end, config.dt);
    let mut ensemble = Ensemble::new(
        config.params,
        config.bounds,
        config.initial,
        config.n_trajectories,
        config.master_seed,
    );
    let mut stats = ensemble.stats();
    let mut buffer = match config.drive.feedback_delay()? {
        Some(delay) => {
            let mut b = DelayBuffer::new(delay, config.dt, stats.supra_fraction)?;
            b.push(stats.supra_fraction)?;
            Some(b)
        }
        None => None,
    };

    let mut run = EnsembleRun {
        mean_u: Vec::with_capacity(steps + 1),
        mean_v: Vec::with_capacity(steps + 1),
        supra_fraction: Vec::with_capacity(steps + 1),
        input: Vec::with_capacity(steps + 1),
        final_histogram: Histogram2d::new(&config.bounds),
        absorbed: 0,
        config: config.clone(),
    };
    let record = |run: &mut EnsembleRun, s: &EnsembleStats| {
        run.mean_u.push(s.mean_u);
        run.mean_v.push(s.mean_v);
        run.supra_fraction.push(s.supra_fraction);
    };
    record(&mut run, &stats);
    for k in 0..steps {
        let t = k as f64 * config.dt;
        let input = config.drive.current(t, buffer.as_ref())?;
        run.input.push(input);
        stats = ensemble.step(input, config.dt);
        if let Some(b) = buffer.as_mut() {
            b.push(stats.supra_fraction)?;
        }
        record(&mut run, &stats);
    }
    let t_final = steps as f64 * config.dt;
    run.input.push(config.drive.current(t_final, buffer.as_ref())?);
    run.final_histogram = histogram2d(ensemble.surviving_states(), &config.bounds);
    run.absorbed = ensemble.absorbed();
    Ok(run)
}

/// [`run_ensemble`] on a dedicated pool of `threads` workers.
pub fn run_ensemble_with_threads(config: &EnsembleConfig, threads: usize) -> Result<EnsembleRun> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    pool.install(|| run_ensemble(config))
}
