// SPDX-License-Identifier: Apache-2.0

//! Noise-induced synchronization in FitzHugh–Nagumo ensembles, computed two
//! ways: Euler–Maruyama Monte Carlo over many neurons, and direct integration
//! of the ensemble's Fokker–Planck equation. Drives include periodic forcing
//! and delayed mean-field feedback.

pub mod drive;
pub mod error;
pub mod fokker_planck;
pub mod model;
pub mod scenarios;
pub mod sde;
pub mod spectral;

pub use drive::{DelayBuffer, DelayLine, DriveSpec};
pub use error::{Error, Result};
pub use fokker_planck::{DensityField, FpSolver, FpStepConfig, GridSpec, Moments};
pub use model::{FhnParams, NeuronState, Response};
pub use scenarios::{Method, Preset, ScenarioConfig, ScenarioReport, SweepReport};
pub use sde::{EnsembleConfig, InitialCondition};
pub use spectral::{SnrResult, TimeSeries};
