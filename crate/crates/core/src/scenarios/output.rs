// SPDX-License-Identifier: Apache-2.0

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::fokker_planck::{sci, write_snapshot};

use super::config::Method;
use super::engine::{RunReport, ScenarioReport, SweepReport};

pub const TIMESERIES_FILE: &str = "timeseries.csv";
pub const REPORT_FILE: &str = "report.txt";
pub const SWEEP_FILE: &str = "sweep.csv";
pub const CONFIG_FILE: &str = "config.toml";

pub fn render_timeseries(run: &RunReport) -> String {
    let tr = &run.trace;
    let mut out = String::with_capacity(96 * tr.len());
    out.push_str("t,mean_u,mean_v,n,I1,total_mass\n");
    for k in 0..tr.len() {
        let row = [tr.t[k], tr.mean_u[k], tr.mean_v[k], tr.n[k], tr.input[k], tr.total_mass[k]];
        let cells: Vec<String> = row.iter().map(|&x| sci(x)).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

fn snr_cell(run: &RunReport) -> String {
    run.summary.snr.map_or_else(|| "none".to_string(), |s| sci(s.snr_db))
}

pub fn render_report(name: &str, run: &RunReport) -> String {
    let s = &run.summary;
    let mut out = String::new();
    let _ = writeln!(out, "scenario = {name}");
    let _ = writeln!(out, "method = {}", run.method);
    let _ = writeln!(out, "n_max = {}", sci(s.n_max));
    let _ = writeln!(out, "dominant_frequency = {}", sci(s.dominant_frequency));
    let _ = writeln!(out, "snr_db = {}", snr_cell(run));
    if let Some(snr) = s.snr {
        let _ = writeln!(out, "f_signal = {}", sci(snr.f_signal));
        let _ = writeln!(out, "peak_power = {}", sci(snr.peak_power));
        let _ = writeln!(out, "background_power = {}", sci(snr.background_power));
    }
    let _ = writeln!(out, "leaked_mass = {}", sci(s.leaked_mass));
    if let Some(m) = run.trace.total_mass.last() {
        let _ = writeln!(out, "final_total_mass = {}", sci(*m));
    }
    out
}

pub fn snapshot_file_name(t: f64) -> String {
    format!("density_t{t:09.3}.txt")
}

fn write(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn emit_run(run: &RunReport, name: &str, dir: &Path, written: &mut Vec<PathBuf>) -> Result<()> {
    create_dir(dir)?;
    let series = dir.join(TIMESERIES_FILE);
    write(&series, &render_timeseries(run))?;
    written.push(series);
    let report = dir.join(REPORT_FILE);
    write(&report, &render_report(name, run))?;
    written.push(report);
    for snap in &run.snapshots {
        let path = dir.join(snapshot_file_name(snap.time));
        write_snapshot(&path, snap)?;
        written.push(path);
    }
    Ok(())
}

/// Write the time series, report, snapshots and the resolved config into
/// `dir`. With both methods, each gets a subdirectory named after it.
pub fn emit_outputs(report: &ScenarioReport, dir: &Path) -> Result<Vec<PathBuf>> {
    create_dir(dir)?;
    let mut written = Vec::new();
    let config = dir.join(CONFIG_FILE);
    write(&config, &report.config.to_toml_string()?)?;
    written.push(config);
    let name = report.config.name.as_str();
    if report.config.method == Method::Both {
        for run in report.runs() {
            emit_run(run, name, &dir.join(run.method.as_str()), &mut written)?;
        }
    } else {
        emit_run(report.primary(), name, dir, &mut written)?;
    }
    Ok(written)
}

pub fn render_sweep(sweep: &SweepReport) -> String {
    let mut out = format!("{},method,n_max,dominant_frequency,snr_db,leaked_mass\n", sweep.parameter);
    for row in &sweep.rows {
        for run in row.report.runs() {
            let s = &run.summary;
            let _ = writeln!(
                out,
                "{},{},{},{},{},{}",
                sci(row.value),
                run.method,
                sci(s.n_max),
                sci(s.dominant_frequency),
                snr_cell(run),
                sci(s.leaked_mass)
            );
        }
    }
    out
}

/// `sweep.csv` in `dir`, plus each member's outputs in a subdirectory named
/// `<parameter>_<value>`.
pub fn emit_sweep_outputs(sweep: &SweepReport, dir: &Path) -> Result<Vec<PathBuf>> {
    create_dir(dir)?;
    let mut written = Vec::new();
    let table = dir.join(SWEEP_FILE);
    write(&table, &render_sweep(sweep))?;
    written.push(table);
    let config = dir.join(CONFIG_FILE);
    write(&config, &sweep.config.to_toml_string()?)?;
    written.push(config);
    for row in &sweep.rows {
        let sub = dir.join(format!("{}_{}", sweep.parameter, row.value));
        written.extend(emit_outputs(&row.report, &sub)?);
    }
    Ok(written)
}
