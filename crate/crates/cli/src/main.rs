// SPDX-License-Identifier: Apache-2.0

//! `fhn`: run scenario configs, sweeps and the shipped presets.
//!
//! On failure prints one line `error: <category>: <message>` to stderr and
//! exits with status 1 (2 for command-line usage errors).

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use fhn_core::scenarios::{
    emit_outputs, emit_sweep_outputs, render_report, render_sweep, run_scenario, run_sweep, Method,
    Preset, ScenarioConfig,
};
use fhn_core::Error;

#[derive(Parser)]
#[command(name = "fhn", version, about = "Noise-driven FitzHugh-Nagumo ensembles")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a single scenario.
    Run {
        config: PathBuf,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Run every member of the config's sweep.
    Sweep {
        config: PathBuf,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Run a shipped preset (S1a, S1b, S2, S2-A0.17, S3, S4, S5, S5-A0.15-dT1.36).
    Preset {
        name: String,
        /// Print the preset's config instead of running it.
        #[arg(long)]
        print_config: bool,
        #[command(flatten)]
        overrides: Overrides,
    },
}

#[derive(Args)]
struct Overrides {
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Monte Carlo master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Write a density snapshot every this many time units.
    #[arg(long, value_name = "DT")]
    snapshot_every: Option<f64>,
    /// fp, mc or both.
    #[arg(long)]
    method: Option<String>,
}

impl Overrides {
    fn apply(&self, config: &mut ScenarioConfig) -> Result<(), Error> {
        if let Some(out) = &self.out {
            config.output_dir = out.clone();
        }
        if let Some(seed) = self.seed {
            config.seed = seed;
        }
        if let Some(m) = &self.method {
            config.method = m.parse::<Method>()?;
        }
        if let Some(every) = self.snapshot_every {
            config.set_snapshot_every(every)?;
        }
        config.validate()
    }
}

fn run_single(config: &ScenarioConfig) -> Result<(), Error> {
    let report = run_scenario(config)?;
    emit_outputs(&report, &config.output_dir)?;
    for run in report.runs() {
        print!("{}", render_report(&config.name, run));
    }
    Ok(())
}

fn run_many(config: &ScenarioConfig) -> Result<(), Error> {
    let sweep = run_sweep(config)?;
    emit_sweep_outputs(&sweep, &config.output_dir)?;
    print!("{}", render_sweep(&sweep));
    Ok(())
}

fn load(path: &Path, overrides: &Overrides) -> Result<ScenarioConfig, Error> {
    let mut config = ScenarioConfig::load(path)?;
    if config.name.is_empty() {
        config.name = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    }
    overrides.apply(&mut config)?;
    Ok(config)
}

fn execute(command: Command) -> Result<(), Error> {
    match command {
        Command::Run { config, overrides } => {
            let config = load(&config, &overrides)?;
            if config.sweep.is_some() {
                return Err(Error::Config("config has a sweep section; use `fhn sweep`".into()));
            }
            run_single(&config)
        }
        Command::Sweep { config, overrides } => run_many(&load(&config, &overrides)?),
        Command::Preset { name, print_config, overrides } => {
            let mut config = name.parse::<Preset>()?.config();
            overrides.apply(&mut config)?;
            if print_config {
                print!("{}", config.to_toml_string()?);
                return Ok(());
            }
            if config.sweep.is_some() {
                run_many(&config)
            } else {
                run_single(&config)
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            // --help and --version
            print!("{e}");
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let first = e.to_string();
            let first = first.lines().next().unwrap_or("").trim_start_matches("error: ");
            eprintln!("error: usage: {first}");
            return ExitCode::from(2);
        }
    };
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let category = e.category();
            let message = e.to_string().replace('\n', " ");
            let message = message.strip_prefix(&format!("{category}: ")).unwrap_or(&message);
            eprintln!("error: {category}: {message}");
            ExitCode::FAILURE
        }
    }
}
