// SPDX-License-Identifier: Apache-2.0

//! Finite-difference Fokker–Planck solver for the noisy FitzHugh–Nagumo
//! density on a rectangular `(u, v)` grid with absorbing edges.

mod density;
mod grid;
mod snapshot;
mod solver;
pub mod tridiag;

pub use density::{DensityField, Moments, MIN_MASS};
pub use grid::GridSpec;
pub use snapshot::{parse_snapshot, read_snapshot, render_snapshot, write_snapshot, SNAPSHOT_MAGIC};
pub use solver::{fp_step, FluxScheme, FpSolver, FpStepConfig, NEGATIVE_TOLERANCE, UNDERFLOW};

pub(crate) use snapshot::sci;
