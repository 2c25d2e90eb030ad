// SPDX-License-Identifier: Apache-2.0

//! Plain-text density snapshots.
//!
//! ```text
//! # fhn density snapshot
//! u_min -4.50000000e0
//! ...            (u_max v_min v_max du dv n_u n_v time total_mass leaked_mass)
//! data
//! <n_v lines of n_u space-separated values, first line is v = v_min>
//! ```

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

use super::density::DensityField;
use super::grid::GridSpec;

pub const SNAPSHOT_MAGIC: &str = "# fhn density snapshot";

/// Nine significant digits.
pub(crate) fn sci(x: f64) -> String {
    format!("{x:.8e}")
}

pub fn render_snapshot(field: &DensityField) -> String {
    let g = field.grid();
    let mut out = String::with_capacity(g.len() * 16 + 512);
    out.push_str(SNAPSHOT_MAGIC);
    out.push('\n');
    for (key, value) in [
        ("u_min", g.u_min),
        ("u_max", g.u_max),
        ("v_min", g.v_min),
        ("v_max", g.v_max),
        ("du", g.du),
        ("dv", g.dv),
    ] {
        let _ = writeln!(out, "{key} {}", sci(value));
    }
    let _ = writeln!(out, "n_u {}", g.n_u());
    let _ = writeln!(out, "n_v {}", g.n_v());
    let _ = writeln!(out, "time {}", sci(field.time));
    let _ = writeln!(out, "total_mass {}", sci(field.total_mass()));
    let _ = writeln!(out, "leaked_mass {}", sci(field.leaked_mass));
    out.push_str("data\n");
    for row in field.values().chunks_exact(g.n_u()) {
        let mut first = true;
        for &x in row {
            if !first {
                out.push(' ');
            }
            first = false;
            out.push_str(&sci(x));
        }
        out.push('\n');
    }
    out
}

pub fn write_snapshot(path: &Path, field: &DensityField) -> Result<()> {
    fs::write(path, render_snapshot(field)).map_err(|e| Error::io(path, e))
}

pub fn parse_snapshot(text: &str) -> Result<DensityField> {
    let mut lines = text.lines();
    if lines.next().map(str::trim) != Some(SNAPSHOT_MAGIC) {
        return Err(Error::Parse("missing snapshot header".into()));
    }
    let mut header = std::collections::HashMap::new();
    for line in lines.by_ref() {
        let line = line.trim();
        if line == "data" {
            break;
        }
        let (key, value) = line
            .split_once(' ')
            .ok_or_else(|| Error::Parse(format!("bad header line `{line}`")))?;
        let value: f64 = value
            .trim()
            .parse()
            .map_err(|_| Error::Parse(format!("bad number in `{line}`")))?;
        header.insert(key.to_string(), value);
    }
    let get = |key: &str| {
        header
            .get(key)
            .copied()
            .ok_or_else(|| Error::Parse(format!("missing header key `{key}`")))
    };
    let grid = GridSpec {
        u_min: get("u_min")?,
        u_max: get("u_max")?,
        v_min: get("v_min")?,
        v_max: get("v_max")?,
        du: get("du")?,
        dv: get("dv")?,
    };
    grid.validate()?;
    if get("n_u")? as usize != grid.n_u() || get("n_v")? as usize != grid.n_v() {
        return Err(Error::Parse("node counts disagree with grid bounds".into()));
    }
    let mut values = Vec::with_capacity(grid.len());
    for (row, line) in lines.enumerate() {
        let before = values.len();
        for tok in line.split_ascii_whitespace() {
            values.push(
                tok.parse::<f64>()
                    .map_err(|_| Error::Parse(format!("bad value `{tok}` in data row {row}")))?,
            );
        }
        if values.len() - before != grid.n_u() {
            return Err(Error::Parse(format!(
                "data row {row} has {} values, expected {}",
                values.len() - before,
                grid.n_u()
            )));
        }
    }
    let mut field = DensityField::from_values(grid, values, get("time")?)?;
    field.leaked_mass = get("leaked_mass")?;
    Ok(field)
}

pub fn read_snapshot(path: &Path) -> Result<DensityField> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_snapshot(&text)
}
