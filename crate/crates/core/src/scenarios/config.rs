// SPDX-License-Identifier: Apache-2.0

use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::drive::{DelayBuffer, DriveSpec};
use crate::error::{Error, Result};
use crate::fokker_planck::{FluxScheme, FpStepConfig, GridSpec};
use crate::model::{step_count, FhnParams};
use crate::sde::{EnsembleConfig, InitialCondition, DEFAULT_TRAJECTORIES};

/// Default run length of single runs.
pub const DEFAULT_T_END: f64 = 150.0;
/// Default run length of runs analysed for their spectrum.
pub const SPECTRAL_T_END: f64 = 300.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    #[default]
    #[serde(alias = "fp")]
    FokkerPlanck,
    #[serde(alias = "mc")]
    MonteCarlo,
    Both,
}

impl Method {
    pub fn runs_fp(self) -> bool {
        matches!(self, Method::FokkerPlanck | Method::Both)
    }

    pub fn runs_mc(self) -> bool {
        matches!(self, Method::MonteCarlo | Method::Both)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Method::FokkerPlanck => "fokker_planck",
            Method::MonteCarlo => "monte_carlo",
            Method::Both => "both",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fp" | "fokker_planck" => Ok(Method::FokkerPlanck),
            "mc" | "monte_carlo" => Ok(Method::MonteCarlo),
            "both" => Ok(Method::Both),
            other => Err(Error::Config(format!("unknown method {other:?} (fp, mc or both)"))),
        }
    }
}

/// Scalar a sweep can vary.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SweepParameter {
    /// Noise intensity.
    #[serde(rename = "D", alias = "noise")]
    Noise,
    #[serde(rename = "a")]
    A,
    #[serde(rename = "b")]
    B,
    #[serde(rename = "c")]
    C,
    /// Delay of every feedback term.
    #[serde(rename = "delay")]
    Delay,
    /// Gain of every feedback term.
    #[serde(rename = "gain")]
    Gain,
    /// Amplitude of every periodic term.
    #[serde(rename = "amplitude")]
    Amplitude,
    /// Frequency of every periodic term.
    #[serde(rename = "frequency")]
    Frequency,
}

impl SweepParameter {
    pub fn as_str(self) -> &'static str {
        match self {
            SweepParameter::Noise => "D",
            SweepParameter::A => "a",
            SweepParameter::B => "b",
            SweepParameter::C => "c",
            SweepParameter::Delay => "delay",
            SweepParameter::Gain => "gain",
            SweepParameter::Amplitude => "amplitude",
            SweepParameter::Frequency => "frequency",
        }
    }
}

impl fmt::Display for SweepParameter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub parameter: SweepParameter,
    pub values: Vec<f64>,
}

/// Numerical options of the density solver.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverOptions {
    pub scheme: FluxScheme,
    pub antidiffusion: bool,
    pub substeps: u32,
}

impl Default for SolverOptions {
    fn default() -> Self {
        let d = FpStepConfig::default();
        Self {
            scheme: d.scheme,
            antidiffusion: d.antidiffusion,
            substeps: d.substeps,
        }
    }
}

/// One experiment: model, numerics, drive, and what to record.
///
/// Every field has a default, so a config file only lists what differs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub name: String,
    pub method: Method,
    pub t_end: f64,
    pub dt: f64,
    /// Master seed of the Monte Carlo ensemble.
    pub seed: u64,
    pub output_dir: PathBuf,
    pub snapshot_times: Vec<f64>,
    /// Monte Carlo ensemble size.
    pub trajectories: usize,
    pub params: FhnParams,
    pub grid: GridSpec,
    pub solver: SolverOptions,
    pub drive: DriveSpec,
    pub sweep: Option<SweepSpec>,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            name: String::new(),
            method: Method::default(),
            t_end: DEFAULT_T_END,
            dt: 0.01,
            seed: 0,
            output_dir: PathBuf::from("out"),
            snapshot_times: Vec::new(),
            trajectories: DEFAULT_TRAJECTORIES,
            params: FhnParams::default(),
            grid: GridSpec::default(),
            solver: SolverOptions::default(),
            drive: DriveSpec::default(),
            sweep: None,
        }
    }
}

impl ScenarioConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let config: Self = toml::from_str(text).map_err(|e| Error::Parse(e.message().to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(Error::Config(format!("dt must be positive, got {}", self.dt)));
        }
        if !(self.t_end.is_finite() && self.t_end > 0.0) {
            return Err(Error::Config(format!("t_end must be positive, got {}", self.t_end)));
        }
        if let Some(t) = self
            .snapshot_times
            .iter()
            .find(|t| !(**t >= 0.0 && **t <= self.t_end + 1e-9))
        {
            return Err(Error::Config(format!(
                "snapshot time {t} outside [0, {}]",
                self.t_end
            )));
        }
        if self.method.runs_mc() && self.trajectories == 0 {
            return Err(Error::Config("trajectories must be positive".into()));
        }
        self.params.validate()?;
        self.grid.validate()?;
        self.fp_config().validate()?;
        self.drive.validate()?;
        if let Some(delay) = self.drive.feedback_delay()? {
            DelayBuffer::new(delay, self.dt, 0.0)?;
        }
        if let Some(sweep) = &self.sweep {
            if sweep.values.is_empty() {
                return Err(Error::Config("sweep needs at least one value".into()));
            }
            for &x in &sweep.values {
                self.with_value(sweep.parameter, x)?;
            }
        }
        Ok(())
    }

    pub fn steps(&self) -> usize {
        step_count(self.t_end, self.dt)
    }

    pub fn fp_config(&self) -> FpStepConfig {
        FpStepConfig {
            dt: self.dt,
            params: self.params,
            scheme: self.solver.scheme,
            antidiffusion: self.solver.antidiffusion,
            substeps: self.solver.substeps,
        }
    }

    pub fn ensemble_config(&self) -> EnsembleConfig {
        EnsembleConfig {
            params: self.params,
            drive: self.drive.clone(),
            n_trajectories: self.trajectories,
            dt: self.dt,
            t_end: self.t_end,
            initial: InitialCondition::RESTING_POPULATION,
            master_seed: self.seed,
            bounds: self.grid,
        }
    }

    /// Snapshots every `every` time units from 0 to `t_end`.
    pub fn set_snapshot_every(&mut self, every: f64) -> Result<()> {
        if !(every.is_finite() && every > 0.0) {
            return Err(Error::Config(format!("snapshot interval must be positive, got {every}")));
        }
        let count = (self.t_end / every + 1e-9).floor() as usize;
        self.snapshot_times = (0..=count).map(|k| k as f64 * every).collect();
        Ok(())
    }

    /// The same scenario with one parameter replaced and no sweep.
    pub fn with_value(&self, parameter: SweepParameter, x: f64) -> Result<Self> {
        if !x.is_finite() {
            return Err(Error::Config(format!("sweep value {x} is not finite")));
        }
        let mut next = self.clone();
        next.sweep = None;
        let mut touched = 0;
        match parameter {
            SweepParameter::Noise => next.params.noise = x,
            SweepParameter::A => next.params.a = x,
            SweepParameter::B => next.params.b = x,
            SweepParameter::C => next.params.c = x,
            SweepParameter::Delay | SweepParameter::Gain => {
                next.drive.for_each_term_mut(&mut |term| {
                    if let DriveSpec::Feedback { gain, delay } = term {
                        *(if parameter == SweepParameter::Gain { gain } else { delay }) = x;
                        touched += 1;
                    }
                });
            }
            SweepParameter::Amplitude | SweepParameter::Frequency => {
                next.drive.for_each_term_mut(&mut |term| {
                    if let DriveSpec::Periodic { amplitude, frequency } = term {
                        *(if parameter == SweepParameter::Amplitude { amplitude } else { frequency }) = x;
                        touched += 1;
                    }
                });
            }
        }
        let drive_param = !matches!(
            parameter,
            SweepParameter::Noise | SweepParameter::A | SweepParameter::B | SweepParameter::C
        );
        if drive_param && touched == 0 {
            return Err(Error::Config(format!("drive has no term with a {parameter}")));
        }
        next.params.validate()?;
        next.drive.validate()?;
        if let Some(delay) = next.drive.feedback_delay()? {
            DelayBuffer::new(delay, next.dt, 0.0)?;
        }
        Ok(next)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_file_uses_defaults() {
        let c = ScenarioConfig::from_toml_str("t_end = 10.0\n[params]\nD = 0.005\n").unwrap();
        assert_eq!(c.params.noise, 0.005);
        assert_eq!(c.params.a, 0.7);
        assert_eq!(c.grid, GridSpec::default());
        assert_eq!(c.steps(), 1000);
        assert_eq!(c.method, Method::FokkerPlanck);
    }

    #[test]
    fn nested_drive_and_sweep() {
        let text = r#"
            method = "both"
            [drive]
            kind = "sum"
            [[drive.terms]]
            kind = "periodic"
            amplitude = 0.15
            frequency = 0.55
            [[drive.terms]]
            kind = "feedback"
            gain = 0.5
            delay = 0.2
            [sweep]
            parameter = "delay"
            values = [0.2, 0.4]
        "#;
        let c = ScenarioConfig::from_toml_str(text).unwrap();
        assert_eq!(c.method, Method::Both);
        assert_eq!(c.drive.feedback_delay().unwrap(), Some(0.2));
        let moved = c.with_value(SweepParameter::Delay, 0.4).unwrap();
        assert_eq!(moved.drive.feedback_delay().unwrap(), Some(0.4));
        assert!(moved.sweep.is_none());
        let again = ScenarioConfig::from_toml_str(&c.to_toml_string().unwrap()).unwrap();
        assert_eq!(again, c);
    }

    #[test]
    fn rejects_bad_configs() {
        let bad = [
            "dt = 0.0",
            "t_end = -1.0",
            "snapshot_times = [200.0]",
            "unknown = 1",
            "[params]\nD = -0.1",
            "[drive]\nkind = \"feedback\"\ngain = 0.9\ndelay = 0.015",
            "[sweep]\nparameter = \"delay\"\nvalues = [0.2]",
            "[sweep]\nparameter = \"D\"\nvalues = []",
            "t_end = [",
        ];
        for text in bad {
            let err = ScenarioConfig::from_toml_str(text).unwrap_err();
            assert!(matches!(err, Error::Config(_) | Error::Parse(_) | Error::Grid(_)), "{text}: {err}");
        }
    }

    #[test]
    fn snapshot_every_covers_run() {
        let mut c = ScenarioConfig { t_end: 1.0, ..Default::default() };
        c.set_snapshot_every(0.25).unwrap();
        assert_eq!(c.snapshot_times, vec![0.0, 0.25, 0.5, 0.75, 1.0]);
        assert!(c.set_snapshot_every(0.0).is_err());
    }

    #[test]
    fn method_names() {
        assert_eq!("fp".parse::<Method>().unwrap(), Method::FokkerPlanck);
        assert_eq!("mc".parse::<Method>().unwrap(), Method::MonteCarlo);
        assert_eq!("both".parse::<Method>().unwrap(), Method::Both);
        assert!("x".parse::<Method>().is_err());
    }
}
