// SPDX-License-Identifier: Apache-2.0

//! Scenario engine: configs, presets, the drive/solver time loop, sweeps and
//! file outputs.
//!
//! A config is a TOML file. Every key is optional:
//!
//! ```toml
//! name = "feedback"
//! method = "fokker_planck"   # or "monte_carlo", "both" (also "fp", "mc")
//! t_end = 150.0
//! dt = 0.01
//! seed = 0                   # Monte Carlo master seed
//! output_dir = "out/feedback"
//! snapshot_times = [0.0, 150.0]
//! trajectories = 10000
//!
//! [params]
//! a = 0.7
//! b = 0.8
//! c = 10.0
//! D = 0.005
//!
//! [grid]
//! u_min = -4.5
//! u_max = 4.5
//! v_min = -2.34
//! v_max = 2.34
//! du = 0.03
//! dv = 0.013
//!
//! [solver]
//! scheme = "upwind"          # or "exponential_fitting"
//! antidiffusion = true
//! substeps = 2
//!
//! [drive]
//! kind = "sum"
//! [[drive.terms]]
//! kind = "periodic"
//! amplitude = 0.5
//! frequency = 0.55
//! [[drive.terms]]
//! kind = "feedback"
//! gain = 0.5
//! delay = 3.0
//!
//! [sweep]
//! parameter = "D"            # a, b, c, D, delay, gain, amplitude, frequency
//! values = [0.001, 0.005, 0.02]
//! ```
//!
//! Other drive kinds are `constant` (`amplitude`) and the single terms used
//! above. Feedback delays must be whole multiples of `dt`.

mod config;
mod engine;
mod output;
mod presets;

pub use config::{
    Method, ScenarioConfig, SolverOptions, SweepParameter, SweepSpec, DEFAULT_T_END, SPECTRAL_T_END,
};
pub use engine::{
    run_scenario, run_sweep, run_sweep_serial, simulate, summarize, FpPopulation, McPopulation,
    Observation, Population, RunReport, RunSummary, ScenarioReport, SweepReport, SweepRow, Trace,
    SPECTRAL_T_START,
};
pub use output::{
    emit_outputs, emit_sweep_outputs, render_report, render_sweep, render_timeseries,
    snapshot_file_name, CONFIG_FILE, REPORT_FILE, SWEEP_FILE, TIMESERIES_FILE,
};
pub use presets::{
    Preset, DELAY_SWEEP, S5_ALT_AMPLITUDE, S5_ALT_DELAY, S5_AMPLITUDE, S5_DELAY, SIGNAL_FREQUENCY,
    SR_NOISE_LEVELS,
};
