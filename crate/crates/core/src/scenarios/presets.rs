// SPDX-License-Identifier: Apache-2.0

use std::fmt;
use std::path::PathBuf;

use crate::drive::DriveSpec;
use crate::error::{Error, Result};
use crate::model::FhnParams;

use super::config::{Method, ScenarioConfig, SweepParameter, SweepSpec, SPECTRAL_T_END};

/// Drive frequency of the periodic scenarios.
pub const SIGNAL_FREQUENCY: f64 = 0.55;
/// Noise levels of the stochastic resonance sweep.
pub const SR_NOISE_LEVELS: [f64; 5] = [0.001, 0.0025, 0.005, 0.01, 0.02];
/// Delays of the delay sweep: from 0.2 up to a fifth of the cycle measured
/// with the shortest delay (period about 4.56).
pub const DELAY_SWEEP: [f64; 5] = [0.2, 0.4, 0.6, 0.8, 0.91];
/// Feedback delay of `S5`: three quarters of the neuron's own cycle.
pub const S5_DELAY: f64 = 3.0;
/// Periodic amplitude of `S5`; the feedback gain is also 0.5.
pub const S5_AMPLITUDE: f64 = 0.5;
/// Delay of the `S5-A0.15-dT1.36` variant: three quarters of the drive
/// period (1.3636...), on the 0.01 step grid.
pub const S5_ALT_DELAY: f64 = 1.36;
/// Periodic amplitude of the variant, as in `S2`.
pub const S5_ALT_AMPLITUDE: f64 = 0.15;

/// The shipped scenarios.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Preset {
    /// Noise only, `D = 0.001`.
    S1a,
    /// Noise only, `D = 0.005`.
    S1b,
    /// Periodic drive plus noise, swept over `D`.
    S2,
    /// As `S2` with the larger amplitude 0.17.
    S2Strong,
    /// Delayed feedback `A = 0.9`, `delay = 0.2`, `D = 0.005`.
    S3,
    /// `S3` swept over the delay.
    S4,
    /// Periodic drive `A = 0.5` plus feedback `A = 0.5` delayed by 3.00.
    S5,
    /// `S5` with the weaker drive `A = 0.15` and the delay set to three
    /// quarters of the drive period.
    S5Alt,
}

impl Preset {
    pub const ALL: [Preset; 8] = [
        Preset::S1a,
        Preset::S1b,
        Preset::S2,
        Preset::S2Strong,
        Preset::S3,
        Preset::S4,
        Preset::S5,
        Preset::S5Alt,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Preset::S1a => "S1a",
            Preset::S1b => "S1b",
            Preset::S2 => "S2",
            Preset::S2Strong => "S2-A0.17",
            Preset::S3 => "S3",
            Preset::S4 => "S4",
            Preset::S5 => "S5",
            Preset::S5Alt => "S5-A0.15-dT1.36",
        }
    }

    pub fn config(self) -> ScenarioConfig {
        let base = ScenarioConfig {
            name: self.name().to_string(),
            method: Method::FokkerPlanck,
            output_dir: PathBuf::from("out").join(self.name()),
            ..ScenarioConfig::default()
        };
        let noise = |d: f64| FhnParams::default().with_noise(d);
        let periodic = |amplitude: f64| DriveSpec::Periodic { amplitude, frequency: SIGNAL_FREQUENCY };
        let feedback = |gain: f64, delay: f64| DriveSpec::Feedback { gain, delay };
        match self {
            Preset::S1a | Preset::S1b => ScenarioConfig {
                params: noise(if self == Preset::S1a { 0.001 } else { 0.005 }),
                t_end: 100.0,
                snapshot_times: vec![0.0, 50.0, 100.0],
                ..base
            },
            Preset::S2 | Preset::S2Strong => ScenarioConfig {
                params: noise(0.005),
                t_end: SPECTRAL_T_END,
                drive: periodic(if self == Preset::S2 { 0.15 } else { 0.17 }),
                snapshot_times: vec![0.0, SPECTRAL_T_END],
                sweep: Some(SweepSpec {
                    parameter: SweepParameter::Noise,
                    values: SR_NOISE_LEVELS.to_vec(),
                }),
                ..base
            },
            Preset::S3 | Preset::S4 => ScenarioConfig {
                params: noise(0.005),
                drive: feedback(0.9, 0.2),
                snapshot_times: vec![0.0, base.t_end],
                sweep: (self == Preset::S4).then(|| SweepSpec {
                    parameter: SweepParameter::Delay,
                    values: DELAY_SWEEP.to_vec(),
                }),
                ..base
            },
            Preset::S5 | Preset::S5Alt => ScenarioConfig {
                params: noise(0.005),
                drive: DriveSpec::Sum {
                    terms: if self == Preset::S5 {
                        vec![periodic(S5_AMPLITUDE), feedback(0.5, S5_DELAY)]
                    } else {
                        vec![periodic(S5_ALT_AMPLITUDE), feedback(0.5, S5_ALT_DELAY)]
                    },
                },
                snapshot_times: vec![0.0, base.t_end],
                ..base
            },
        }
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Preset::ALL
            .into_iter()
            .find(|p| p.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| {
                let names: Vec<_> = Preset::ALL.iter().map(|p| p.name()).collect();
                Error::Config(format!("unknown preset {s:?} (one of {})", names.join(", ")))
            })
    }
}
