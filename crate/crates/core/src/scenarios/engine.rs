// SPDX-License-Identifier: Apache-2.0

use rayon::prelude::*;
use serde::Serialize;

use crate::drive::{DelayBuffer, DelayLine, DriveSpec};
use crate::error::{Error, Result};
use crate::fokker_planck::{DensityField, FpSolver};
use crate::sde::{histogram2d, Ensemble, EnsembleStats, InitialCondition};
use crate::spectral::{self, SnrResult, TimeSeries};

use super::config::{Method, ScenarioConfig, SweepParameter};

/// Spectral analysis of the mean voltage starts here, past the transient.
pub const SPECTRAL_T_START: f64 = 50.0;

/// Population observables after a step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Observation {
    pub mean_u: f64,
    pub mean_v: f64,
    /// Supra-threshold fraction of the surviving population.
    pub n: f64,
    /// Surviving probability mass (density) or fraction of live
    /// trajectories (ensemble).
    pub total_mass: f64,
}

/// A population that the simulation loop can advance under a common input.
pub trait Population {
    fn observe(&self) -> Result<Observation>;
    fn advance(&mut self, input: f64) -> Result<()>;
}

pub struct FpPopulation {
    pub solver: FpSolver,
    pub field: DensityField,
}

impl Population for FpPopulation {
    fn observe(&self) -> Result<Observation> {
        let m = self.field.moments()?;
        Ok(Observation {
            mean_u: m.mean_u,
            mean_v: m.mean_v,
            n: self.field.supra_fraction()?,
            total_mass: self.field.total_mass(),
        })
    }

    fn advance(&mut self, input: f64) -> Result<()> {
        self.solver.step(&mut self.field, input).map(|_| ())
    }
}

pub struct McPopulation {
    pub ensemble: Ensemble,
    dt: f64,
    stats: EnsembleStats,
}

impl McPopulation {
    pub fn new(ensemble: Ensemble, dt: f64) -> Self {
        let stats = ensemble.stats();
        Self { ensemble, dt, stats }
    }
}

impl Population for McPopulation {
    fn observe(&self) -> Result<Observation> {
        if self.stats.alive == 0 {
            return Err(Error::EmptyDensity(0.0));
        }
        Ok(Observation {
            mean_u: self.stats.mean_u,
            mean_v: self.stats.mean_v,
            n: self.stats.supra_fraction,
            total_mass: self.stats.alive as f64 / self.ensemble.len() as f64,
        })
    }

    fn advance(&mut self, input: f64) -> Result<()> {
        self.stats = self.ensemble.step(input, self.dt);
        Ok(())
    }
}

/// Sampled observables, one row per time step including `t = 0`.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Trace {
    pub t: Vec<f64>,
    pub mean_u: Vec<f64>,
    pub mean_v: Vec<f64>,
    pub n: Vec<f64>,
    /// Input current applied over the step that starts at each row.
    pub input: Vec<f64>,
    pub total_mass: Vec<f64>,
}

impl Trace {
    fn with_capacity(rows: usize) -> Self {
        let v = || Vec::with_capacity(rows);
        Self { t: v(), mean_u: v(), mean_v: v(), n: v(), input: v(), total_mass: v() }
    }

    fn record(&mut self, t: f64, o: &Observation) {
        self.t.push(t);
        self.mean_u.push(o.mean_u);
        self.mean_v.push(o.mean_v);
        self.n.push(o.n);
        self.total_mass.push(o.total_mass);
    }

    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    /// First row with `t >= t0`.
    pub fn first_at(&self, t0: f64) -> usize {
        self.t.partition_point(|&t| t < t0 - 1e-9)
    }
}

/// The time loop shared by both methods.
///
/// Per step `k`: read the delayed activity, evaluate `I(t_k)`, advance the
/// population by `dt`, observe it, and push the new activity into the delay
/// line. The line must already hold `n(t_0)`. `hook` sees the population
/// after each step with the new step index.
pub fn simulate<P, L, H>(
    population: &mut P,
    drive: &DriveSpec,
    dt: f64,
    steps: usize,
    mut line: Option<&mut L>,
    mut hook: H,
) -> Result<Trace>
where
    P: Population,
    L: DelayLine + ?Sized,
    H: FnMut(usize, &P) -> Result<()>,
{
    if drive.has_feedback() && line.is_none() {
        return Err(Error::MissingBuffer);
    }
    let mut trace = Trace::with_capacity(steps + 1);
    trace.record(0.0, &population.observe()?);
    hook(0, population)?;
    for k in 0..steps {
        let t = k as f64 * dt;
        let delayed = line.as_deref().map(DelayLine::read);
        let input = drive.current_with(t, delayed)?;
        trace.input.push(input);
        population.advance(input)?;
        let obs = population.observe()?;
        if let Some(l) = line.as_deref_mut() {
            l.push(obs.n)?;
        }
        trace.record((k + 1) as f64 * dt, &obs);
        hook(k + 1, population)?;
    }
    let delayed = line.as_deref().map(DelayLine::read);
    trace.input.push(drive.current_with(steps as f64 * dt, delayed)?);
    Ok(trace)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RunSummary {
    /// Largest `n` over the second half of the run.
    pub n_max: f64,
    /// Peak frequency of `n(t)` over the second half; 0 if that is too short
    /// to analyse.
    pub dominant_frequency: f64,
    /// Of `<u>` from `SPECTRAL_T_START` on, when the drive has a frequency
    /// that this window resolves.
    pub snr: Option<SnrResult>,
    pub leaked_mass: f64,
}

#[derive(Debug, Clone)]
pub struct RunReport {
    pub method: Method,
    pub trace: Trace,
    pub summary: RunSummary,
    /// Densities at the requested snapshot times; histograms for the
    /// ensemble, normalized over the surviving trajectories.
    pub snapshots: Vec<DensityField>,
}

#[derive(Debug, Clone)]
pub struct ScenarioReport {
    pub config: ScenarioConfig,
    pub fp: Option<RunReport>,
    pub mc: Option<RunReport>,
}

impl ScenarioReport {
    /// The density run if there is one, else the ensemble run.
    pub fn primary(&self) -> &RunReport {
        self.fp.as_ref().or(self.mc.as_ref()).expect("at least one method ran")
    }

    pub fn runs(&self) -> impl Iterator<Item = &RunReport> {
        self.fp.iter().chain(self.mc.iter())
    }
}

pub fn summarize(trace: &Trace, config: &ScenarioConfig, leaked_mass: f64) -> Result<RunSummary> {
    let half = trace.first_at(0.5 * config.t_end);
    let n_max = trace.n[half..].iter().copied().fold(0.0, f64::max);
    let dominant_frequency = match TimeSeries::new(trace.n[half..].to_vec(), config.dt, trace.t[half]) {
        Ok(series) => spectral::dominant_frequency(&series)?,
        Err(Error::TooShort { .. }) => 0.0,
        Err(e) => return Err(e),
    };
    let snr = match config.drive.signal_frequency() {
        None => None,
        Some(f) => {
            let start = trace.first_at(SPECTRAL_T_START);
            let tail = trace.mean_u.get(start..).unwrap_or_default().to_vec();
            match TimeSeries::new(tail, config.dt, SPECTRAL_T_START).and_then(|s| spectral::snr(&s, f)) {
                Ok(r) => Some(r),
                Err(Error::TooShort { .. } | Error::OutOfBand { .. }) => None,
                Err(e) => return Err(e),
            }
        }
    };
    Ok(RunSummary { n_max, dominant_frequency, snr, leaked_mass })
}

fn snapshot_steps(config: &ScenarioConfig) -> Vec<usize> {
    let mut steps: Vec<usize> = config
        .snapshot_times
        .iter()
        .map(|t| ((t / config.dt).round() as usize).min(config.steps()))
        .collect();
    steps.sort_unstable();
    steps.dedup();
    steps
}

fn delay_line(config: &ScenarioConfig, n0: f64) -> Result<Option<DelayBuffer>> {
    config
        .drive
        .feedback_delay()?
        .map(|delay| {
            let mut line = DelayBuffer::new(delay, config.dt, n0)?;
            line.push(n0)?;
            Ok(line)
        })
        .transpose()
}

fn run_fp(config: &ScenarioConfig) -> Result<RunReport> {
    let solver = FpSolver::new(config.grid, config.fp_config())?;
    let field = DensityField::resting_population(config.grid)?;
    let mut population = FpPopulation { solver, field };
    let mut line = delay_line(config, population.observe()?.n)?;
    let wanted = snapshot_steps(config);
    let mut snapshots = Vec::with_capacity(wanted.len());
    let trace = simulate(&mut population, &config.drive, config.dt, config.steps(), line.as_mut(), |k, p| {
        if wanted.binary_search(&k).is_ok() {
            let mut snap = p.field.clone();
            snap.time = k as f64 * config.dt;
            snapshots.push(snap);
        }
        Ok(())
    })?;
    let summary = summarize(&trace, config, population.field.leaked_mass)?;
    Ok(RunReport { method: Method::FokkerPlanck, trace, summary, snapshots })
}

fn run_mc(config: &ScenarioConfig) -> Result<RunReport> {
    let ensemble = Ensemble::new(
        config.params,
        config.grid,
        InitialCondition::RESTING_POPULATION,
        config.trajectories,
        config.seed,
    );
    let mut population = McPopulation::new(ensemble, config.dt);
    let mut line = delay_line(config, population.observe()?.n)?;
    let wanted = snapshot_steps(config);
    let mut snapshots = Vec::with_capacity(wanted.len());
    let trace = simulate(&mut population, &config.drive, config.dt, config.steps(), line.as_mut(), |k, p| {
        if wanted.binary_search(&k).is_ok() {
            let hist = histogram2d(p.ensemble.surviving_states(), &config.grid);
            let values = hist.to_density(&config.grid);
            snapshots.push(DensityField::from_values(config.grid, values, k as f64 * config.dt)?);
        }
        Ok(())
    })?;
    let leaked = population.ensemble.absorbed() as f64 / population.ensemble.len() as f64;
    let summary = summarize(&trace, config, leaked)?;
    Ok(RunReport { method: Method::MonteCarlo, trace, summary, snapshots })
}

/// Run one scenario with the configured method(s); any sweep section is
/// ignored. With both methods the two runs proceed concurrently.
pub fn run_scenario(config: &ScenarioConfig) -> Result<ScenarioReport> {
    config.validate()?;
    let (fp, mc) = match config.method {
        Method::FokkerPlanck => (Some(run_fp(config)?), None),
        Method::MonteCarlo => (None, Some(run_mc(config)?)),
        Method::Both => {
            let (fp, mc) = rayon::join(|| run_fp(config), || run_mc(config));
            (Some(fp?), Some(mc?))
        }
    };
    Ok(ScenarioReport { config: config.clone(), fp, mc })
}

#[derive(Debug, Clone)]
pub struct SweepRow {
    pub value: f64,
    pub report: ScenarioReport,
}

#[derive(Debug, Clone)]
pub struct SweepReport {
    pub config: ScenarioConfig,
    pub parameter: SweepParameter,
    /// Ordered by swept value.
    pub rows: Vec<SweepRow>,
}

fn sweep_members(config: &ScenarioConfig) -> Result<(SweepParameter, Vec<(f64, ScenarioConfig)>)> {
    config.validate()?;
    let sweep = config
        .sweep
        .as_ref()
        .ok_or_else(|| Error::Config("config has no sweep section".into()))?;
    let mut values = sweep.values.clone();
    values.sort_by(f64::total_cmp);
    let members = values
        .into_iter()
        .map(|x| Ok((x, config.with_value(sweep.parameter, x)?)))
        .collect::<Result<Vec<_>>>()?;
    Ok((sweep.parameter, members))
}

/// One independent run per swept value, executed in parallel.
pub fn run_sweep(config: &ScenarioConfig) -> Result<SweepReport> {
    let (parameter, members) = sweep_members(config)?;
    let rows = members
        .into_par_iter()
        .map(|(value, member)| Ok(SweepRow { value, report: run_scenario(&member)? }))
        .collect::<Result<Vec<_>>>()?;
    Ok(SweepReport { config: config.clone(), parameter, rows })
}

/// [`run_sweep`] one member at a time.
pub fn run_sweep_serial(config: &ScenarioConfig) -> Result<SweepReport> {
    let (parameter, members) = sweep_members(config)?;
    let rows = members
        .into_iter()
        .map(|(value, member)| Ok(SweepRow { value, report: run_scenario(&member)? }))
        .collect::<Result<Vec<_>>>()?;
    Ok(SweepReport { config: config.clone(), parameter, rows })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::cell::RefCell;

    use crate::fokker_planck::GridSpec;
    use crate::model::FhnParams;

    fn coarse() -> GridSpec {
        GridSpec { du: 0.09, dv: 0.078, ..GridSpec::default() }
    }

    fn small(drive: DriveSpec, method: Method) -> ScenarioConfig {
        ScenarioConfig {
            method,
            t_end: 2.0,
            grid: coarse(),
            trajectories: 500,
            params: FhnParams::default().with_noise(0.005),
            drive,
            ..ScenarioConfig::default()
        }
    }

    /// Delay line that logs, for every read, the step whose activity it
    /// returned (`None` for the prefill).
    struct Instrumented {
        inner: DelayBuffer,
        pushed: usize,
        reads: RefCell<Vec<Option<usize>>>,
    }

    impl DelayLine for Instrumented {
        fn read(&self) -> f64 {
            let cap = self.inner.capacity();
            self.reads.borrow_mut().push((self.pushed > cap).then(|| self.pushed - 1 - cap));
            self.inner.read()
        }

        fn push(&mut self, n: f64) -> Result<()> {
            self.pushed += 1;
            self.inner.push(n)
        }
    }

    #[test]
    fn feedback_reads_only_delayed_activity() {
        let cfg = small(DriveSpec::Feedback { gain: 0.9, delay: 0.05 }, Method::FokkerPlanck);
        let solver = FpSolver::new(cfg.grid, cfg.fp_config()).unwrap();
        let field = DensityField::resting_population(cfg.grid).unwrap();
        let mut pop = FpPopulation { solver, field };
        let n0 = pop.observe().unwrap().n;
        let mut line = Instrumented {
            inner: DelayBuffer::new(0.05, cfg.dt, n0).unwrap(),
            pushed: 0,
            reads: RefCell::new(Vec::new()),
        };
        line.push(n0).unwrap();
        let cap = line.inner.capacity();
        assert_eq!(cap, 5);

        let steps = cfg.steps();
        let trace = simulate(&mut pop, &cfg.drive, cfg.dt, steps, Some(&mut line), |_, _| Ok(())).unwrap();
        let reads = line.reads.into_inner();
        assert_eq!(reads.len(), steps + 1);
        for (k, source) in reads.into_iter().enumerate() {
            match source {
                Some(src) => {
                    assert!(src + cap <= k, "step {k} read step {src}");
                    assert_eq!(src, k - cap);
                    assert_eq!(trace.input[k], 0.9 * trace.n[src]);
                }
                None => {
                    assert!(k < cap);
                    assert_eq!(trace.input[k], 0.9 * n0);
                }
            }
        }
    }

    #[test]
    fn trace_rows_and_summary() {
        let cfg = small(DriveSpec::Periodic { amplitude: 0.15, frequency: 0.55 }, Method::FokkerPlanck);
        let report = run_scenario(&cfg).unwrap();
        let run = report.fp.as_ref().unwrap();
        assert_eq!(run.trace.len(), cfg.steps() + 1);
        assert_eq!(run.trace.input.len(), run.trace.len());
        assert!(run.summary.snr.is_none());
        assert!((0.0..=1.0).contains(&run.summary.n_max));
        assert!(run.summary.dominant_frequency >= 0.0);
        assert!(report.mc.is_none());
    }

    #[test]
    fn both_methods_run() {
        let mut cfg = small(DriveSpec::Feedback { gain: 0.5, delay: 0.2 }, Method::Both);
        cfg.snapshot_times = vec![0.0, 1.0];
        let report = run_scenario(&cfg).unwrap();
        for run in report.runs() {
            assert_eq!(run.snapshots.len(), 2);
            assert_eq!(run.trace.len(), cfg.steps() + 1);
        }
        let (fp, mc) = (report.fp.unwrap(), report.mc.unwrap());
        assert!((fp.trace.mean_u[100] - mc.trace.mean_u[100]).abs() < 0.1);
    }

    #[test]
    fn sweep_of_one_matches_single_run() {
        let mut cfg = small(DriveSpec::Feedback { gain: 0.9, delay: 0.2 }, Method::FokkerPlanck);
        cfg.sweep = Some(super::super::config::SweepSpec { parameter: SweepParameter::Noise, values: vec![0.005] });
        let sweep = run_sweep(&cfg).unwrap();
        let single = run_scenario(&cfg).unwrap();
        assert_eq!(sweep.rows.len(), 1);
        assert_eq!(sweep.rows[0].report.primary().trace, single.primary().trace);
        assert_eq!(sweep.rows[0].report.primary().summary, single.primary().summary);
    }

    #[test]
    fn parallel_sweep_equals_serial() {
        let mut cfg = small(DriveSpec::Feedback { gain: 0.9, delay: 0.2 }, Method::Both);
        cfg.t_end = 1.0;
        cfg.sweep = Some(super::super::config::SweepSpec {
            parameter: SweepParameter::Delay,
            values: vec![0.3, 0.1, 0.2],
        });
        let par = run_sweep(&cfg).unwrap();
        let ser = run_sweep_serial(&cfg).unwrap();
        let values: Vec<f64> = par.rows.iter().map(|r| r.value).collect();
        assert_eq!(values, vec![0.1, 0.2, 0.3]);
        for (a, b) in par.rows.iter().zip(&ser.rows) {
            assert_eq!(a.value, b.value);
            for (x, y) in a.report.runs().zip(b.report.runs()) {
                assert_eq!(x.trace, y.trace);
                assert_eq!(x.summary, y.summary);
            }
        }
    }

    #[test]
    fn sweep_requires_sweep_section() {
        let cfg = small(DriveSpec::default(), Method::FokkerPlanck);
        assert!(matches!(run_sweep(&cfg), Err(Error::Config(_))));
    }
}
