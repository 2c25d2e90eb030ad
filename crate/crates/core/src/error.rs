// SPDX-License-Identifier: Apache-2.0

use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("config: {0}")]
    Config(String),

    #[error("grid: {0}")]
    Grid(String),

    #[error("no convergence: {0}")]
    NoConvergence(String),

    #[error("stability: {0}")]
    Stability(String),

    #[error("empty density: total mass {0:e} below threshold")]
    EmptyDensity(f64),

    #[error("feedback drive evaluated without a delay buffer")]
    MissingBuffer,

    #[error("range: {0}")]
    Range(String),

    #[error("series too short: {len} samples, need at least {min}")]
    TooShort { len: usize, min: usize },

    #[error("frequency {f} outside resolvable band ({lo}, {hi})")]
    OutOfBand { f: f64, lo: f64, hi: f64 },

    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("parse: {0}")]
    Parse(String),
}

impl Error {
    /// Stable one-word category, used by the CLI for machine-parsable failures.
    pub fn category(&self) -> &'static str {
        match self {
            Error::Config(_) => "config",
            Error::Grid(_) => "grid",
            Error::NoConvergence(_) => "no_convergence",
            Error::Stability(_) => "stability",
            Error::EmptyDensity(_) => "empty_density",
            Error::MissingBuffer => "missing_buffer",
            Error::Range(_) => "range",
            Error::TooShort { .. } => "too_short",
            Error::OutOfBand { .. } => "out_of_band",
            Error::Io { .. } => "io",
            Error::Parse(_) => "parse",
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
