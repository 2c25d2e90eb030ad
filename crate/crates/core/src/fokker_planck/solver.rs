// SPDX-License-Identifier: Apache-2.0

//! Direction-split implicit upwind stepper.
//!
//! Each step applies two backward-Euler half-steps, one per direction, in an
//! order that alternates from step to step:
//!
//! * along `u`: advection by `c(-v + u - u^3/3 + I)` plus diffusion `D c^2`,
//!   one tridiagonal solve per `v` row;
//! * along `v`: advection by `u - b v + a`, one tridiagonal solve per `u`
//!   column.
//!
//! Fluxes are first-order upwind in conservative form, so every half-step
//! matrix is a column-diagonally-dominant M-matrix: the update is positive and
//! conserves mass up to the outflow through the two boundary faces, which is
//! accumulated into `leaked_mass`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::FhnParams;

use super::density::DensityField;
use super::grid::GridSpec;

/// Values in `[-NEGATIVE_TOLERANCE, 0)` are roundoff and clipped.
pub const NEGATIVE_TOLERANCE: f64 = 1e-12;

/// Positive values below this are set to zero (and counted as leaked). Far
/// tails then stay exactly zero, and all-zero rows and columns are skipped.
pub const UNDERFLOW: f64 = 1e-30;

/// Rows eliminated together by the `u` sweep.
const LANES: usize = 8;

/// Inclusive index ranges of the rows and columns holding nonzero values.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Support {
    i_lo: usize,
    i_hi: usize,
    j_lo: usize,
    j_hi: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FluxScheme {
    #[default]
    Upwind,
    /// Scharfetter-Gummel fitting of advection and diffusion.
    ExponentialFitting,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FpStepConfig {
    pub dt: f64,
    pub params: FhnParams,
    /// Low-order face flux of the `u` sweep.
    pub scheme: FluxScheme,
    /// Limited antidiffusive correction after each implicit sweep.
    pub antidiffusion: bool,
    /// Internal steps per `dt`; the input current is held over all of them.
    pub substeps: u32,
}

impl Default for FpStepConfig {
    fn default() -> Self {
        Self {
            dt: 0.01,
            params: FhnParams::default(),
            scheme: FluxScheme::default(),
            antidiffusion: true,
            substeps: 2,
        }
    }
}

impl FpStepConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(Error::Config(format!("dt must be positive, got {}", self.dt)));
        }
        if self.substeps == 0 {
            return Err(Error::Config("substeps must be at least 1".into()));
        }
        self.params.validate()
    }
}

/// Stepper bound to one grid and one parameter set. The `v` sweep does not
/// depend on the input current, so its factorization is computed once.
#[derive(Debug, Clone)]
pub struct FpSolver {
    grid: GridSpec,
    cfg: FpStepConfig,
    n_u: usize,
    n_v: usize,
    /// `u - u^3/3` at the `u` faces `i + 1/2`.
    cubic_at_face: Vec<f64>,
    // v-sweep LU factors, node-indexed like the density.
    v_lower: Vec<f64>,
    v_upper_mod: Vec<f64>,
    v_inv_pivot: Vec<f64>,
    /// `v` velocity at face `j + 1/2` of column `i`, stored at `j * n_u + i`.
    v_face: Vec<f64>,
    // scratch
    face_alpha: Vec<f64>,
    face_beta: Vec<f64>,
    upper_mod: Vec<f64>,
    old: Vec<f64>,
    anti: Vec<f64>,
    r_plus: Vec<f64>,
    r_minus: Vec<f64>,
}

impl FpSolver {
    pub fn new(grid: GridSpec, cfg: FpStepConfig) -> Result<Self> {
        grid.validate()?;
        cfg.validate()?;
        let (n_u, n_v) = (grid.n_u(), grid.n_v());
        let cubic_at_face = (0..n_u - 1)
            .map(|i| {
                let u = grid.u_at(i) + 0.5 * grid.du;
                u - u * u * u / 3.0
            })
            .collect();

        let mut solver = Self {
            grid,
            cfg,
            n_u,
            n_v,
            cubic_at_face,
            v_lower: vec![0.0; n_u * n_v],
            v_upper_mod: vec![0.0; n_u * n_v],
            v_inv_pivot: vec![0.0; n_u * n_v],
            v_face: vec![0.0; n_u * n_v],
            face_alpha: vec![0.0; n_u * LANES],
            face_beta: vec![0.0; n_u * LANES],
            upper_mod: vec![0.0; n_u * LANES],
            old: vec![0.0; n_u * n_v],
            anti: vec![0.0; n_u * n_v],
            r_plus: vec![0.0; n_u * n_v],
            r_minus: vec![0.0; n_u * n_v],
        };
        for j in 0..n_v - 1 {
            for i in 0..n_u {
                solver.v_face[j * n_u + i] = solver.v_face_velocity(i, j);
            }
        }
        solver.factor_v_sweep();
        Ok(solver)
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn config(&self) -> &FpStepConfig {
        &self.cfg
    }

    fn substep(&self) -> f64 {
        self.cfg.dt / f64::from(self.cfg.substeps)
    }

    /// Velocity along `v` through the face between rows `j` and `j + 1`.
    #[inline]
    fn v_face_velocity(&self, i: usize, j: usize) -> f64 {
        let p = &self.cfg.params;
        self.grid.u_at(i) - p.b * (self.grid.v_at(j) + 0.5 * self.grid.dv) + p.a
    }

    fn factor_v_sweep(&mut self) {
        let (n_u, n_v) = (self.n_u, self.n_v);
        let mu = self.substep() / self.grid.dv;
        for j in 1..n_v - 1 {
            for i in 1..n_u - 1 {
                let below = self.v_face_velocity(i, j - 1);
                let above = self.v_face_velocity(i, j);
                let lower = -mu * below.max(0.0);
                let diag = 1.0 + mu * (above.max(0.0) - below.min(0.0));
                let upper = mu * above.min(0.0);
                let k = j * n_u + i;
                let pivot = if j == 1 {
                    diag
                } else {
                    diag - lower * self.v_upper_mod[k - n_u]
                };
                self.v_lower[k] = lower;
                self.v_inv_pivot[k] = 1.0 / pivot;
                self.v_upper_mod[k] = upper / pivot;
            }
        }
    }

    /// Advance the field by one `dt` with the input current held at `input`.
    /// Returns the mass absorbed at the boundary during the step.
    pub fn step(&mut self, field: &mut DensityField, input: f64) -> Result<f64> {
        if field.grid() != &self.grid {
            return Err(Error::Grid("field and solver grids differ".into()));
        }
        if !input.is_finite() {
            return Err(Error::Stability(format!("input current {input} is not finite")));
        }
        let (mut leaked, mut support) = self.clip(field.values_mut())?;
        let substeps = u64::from(self.cfg.substeps);
        for sub in 0..substeps {
            let u_first = (field.steps * substeps + sub) % 2 == 0;
            for pass in 0..2 {
                let Some(box_) = support else { break };
                let swept = if (pass == 0) == u_first {
                    self.sweep_u(field.values_mut(), input, box_)
                } else {
                    self.sweep_v(field.values_mut(), box_)
                };
                let (clipped, next) = self.clip(field.values_mut())?;
                leaked += swept + clipped;
                support = next;
            }
        }
        field.leaked_mass += leaked;
        field.time += self.cfg.dt;
        field.steps += 1;
        Ok(leaked)
    }

    fn sweep_u(&mut self, values: &mut [f64], input: f64, support: Support) -> f64 {
        let mut outflow = 0.0;
        let mut j0 = support.j_lo;
        while j0 <= support.j_hi {
            let rows = LANES.min(support.j_hi + 1 - j0);
            outflow += self.sweep_u_rows(values, input, j0, rows);
            j0 += rows;
        }
        outflow * self.grid.cell_area()
    }

    /// `u` sweep over rows `j0..j0 + rows`, eliminating them in lockstep so
    /// that the divisions of independent rows overlap. Returns the boundary
    /// outflow divided by the cell area.
    fn sweep_u_rows(&mut self, values: &mut [f64], input: f64, j0: usize, rows: usize) -> f64 {
        let n_u = self.n_u;
        let p = self.cfg.params;
        let lambda = self.substep() / self.grid.du;
        let k = p.diffusion_u() / self.grid.du;
        let scheme = self.cfg.scheme;
        let last = n_u - 2;
        let block = j0 * n_u..(j0 + rows) * n_u;

        // Face flux times dt/du is alpha * rho_left - beta * rho_right,
        // stored lane-interleaved at `f * LANES + r`.
        let (alpha, beta) = (&mut self.face_alpha, &mut self.face_beta);
        for r in 0..rows {
            let shift = input - self.grid.v_at(j0 + r);
            for (f, cubic) in self.cubic_at_face.iter().enumerate() {
                let (a, b) = face_coefficients(p.c * (cubic + shift), k, scheme);
                alpha[f * LANES + r] = lambda * a;
                beta[f * LANES + r] = lambda * b;
            }
        }

        let x = &mut values[block.clone()];
        self.old[block.clone()].copy_from_slice(x);
        let upper_mod = &mut self.upper_mod;
        let mut prev_upper = [0.0; LANES];
        let mut prev_x = [0.0; LANES];
        for i in 1..=last {
            let (left, right) = ((i - 1) * LANES, i * LANES);
            for r in 0..rows {
                let lower = -alpha[left + r];
                let upper = -beta[right + r];
                let diag = 1.0 + alpha[right + r] + beta[left + r];
                let inv = 1.0 / (diag - lower * prev_upper[r]);
                prev_upper[r] = upper * inv;
                let node = r * n_u + i;
                prev_x[r] = (x[node] - lower * prev_x[r]) * inv;
                x[node] = prev_x[r];
                upper_mod[right + r] = prev_upper[r];
            }
        }
        for i in (1..last).rev() {
            for r in 0..rows {
                let node = r * n_u + i;
                x[node] -= upper_mod[i * LANES + r] * x[node + 1];
            }
        }
        // Boundary nodes are zero, so only the inner neighbours flow out.
        let mut outflow = 0.0;
        for r in 0..rows {
            outflow += beta[r] * x[r * n_u + 1] + alpha[last * LANES + r] * x[r * n_u + last];
        }

        if self.cfg.antidiffusion {
            for r in 0..rows {
                let line = r * n_u..(r + 1) * n_u;
                let row = &mut x[line.clone()];
                let old = &self.old[block.start + line.start..block.start + line.end];
                let anti = &mut self.anti[line.clone()];
                let shift = input - self.grid.v_at(j0 + r);
                // Time-centred central advection plus implicit diffusion, minus
                // the low-order flux. Centring the diffusion too would turn it
                // into Crank-Nicolson, which barely damps odd-even modes at
                // these diffusion numbers.
                anti[0] = 0.0;
                anti[last] = 0.0;
                for f in 1..last {
                    let a = 0.5 * lambda * p.c * (self.cubic_at_face[f] + shift);
                    let advected = a * (row[f] + old[f] + row[f + 1] + old[f + 1]) * 0.5;
                    let central = advected + lambda * k * (row[f] - row[f + 1]);
                    let low = alpha[f * LANES + r] * row[f] - beta[f * LANES + r] * row[f + 1];
                    anti[f] = central - low;
                }
                limit_line(row, old, anti, &mut self.r_plus[line.clone()], &mut self.r_minus[line]);
            }
        }
        outflow
    }

    fn sweep_v(&mut self, values: &mut [f64], support: Support) -> f64 {
        let (n_u, n_v) = (self.n_u, self.n_v);
        let cols = support.i_lo..support.i_hi + 1;
        let dt = self.substep();
        if self.cfg.antidiffusion {
            self.old.copy_from_slice(values);
        }
        for j in 1..n_v - 1 {
            let (done, rest) = values.split_at_mut(j * n_u);
            let row = &mut rest[..n_u];
            let prev = &done[(j - 1) * n_u..];
            let base = j * n_u;
            if j == 1 {
                for i in cols.clone() {
                    row[i] *= self.v_inv_pivot[base + i];
                }
            } else {
                for i in cols.clone() {
                    row[i] = (row[i] - self.v_lower[base + i] * prev[i]) * self.v_inv_pivot[base + i];
                }
            }
        }
        for j in (1..n_v - 2).rev() {
            let (head, tail) = values.split_at_mut((j + 1) * n_u);
            let row = &mut head[j * n_u..];
            let next = &tail[..n_u];
            let base = j * n_u;
            for i in cols.clone() {
                row[i] -= self.v_upper_mod[base + i] * next[i];
            }
        }
        let mut outflow = 0.0;
        let (first, last) = (1, n_v - 2);
        for i in cols.clone() {
            let w_bottom = self.v_face[i];
            let w_top = self.v_face[last * n_u + i];
            outflow += -w_bottom.min(0.0) * values[first * n_u + i];
            outflow += w_top.max(0.0) * values[last * n_u + i];
        }
        if self.cfg.antidiffusion {
            self.limit_v(values, cols);
        }
        outflow * dt * self.grid.du
    }

    /// Zalesak limiter across rows: the `v` counterpart of [`limit_line`],
    /// vectorized along `u`.
    fn limit_v(&mut self, values: &mut [f64], cols: std::ops::Range<usize>) {
        let (n_u, n_v) = (self.n_u, self.n_v);
        let mu = self.substep() / self.grid.dv;
        let anti = &mut self.anti;
        anti[..n_u].iter_mut().for_each(|x| *x = 0.0);
        anti[(n_v - 2) * n_u..].iter_mut().for_each(|x| *x = 0.0);
        for j in 1..n_v - 2 {
            let base = j * n_u;
            let here = &values[base..base + n_u];
            let above = &values[base + n_u..base + 2 * n_u];
            let old_here = &self.old[base..base + n_u];
            let old_above = &self.old[base + n_u..base + 2 * n_u];
            let w = &self.v_face[base..base + n_u];
            let out = &mut anti[base..base + n_u];
            for i in cols.clone() {
                // Time-centred central flux minus the upwind flux.
                let centred = 0.25 * (here[i] + above[i] + old_here[i] + old_above[i]);
                let upwind = w[i].max(0.0) * here[i] + w[i].min(0.0) * above[i];
                out[i] = mu * (w[i] * centred - upwind);
            }
        }
        for j in 1..n_v - 1 {
            let base = j * n_u;
            for i in cols.clone() {
                let k = base + i;
                let (g_in, g_out) = (anti[k - n_u], anti[k]);
                let incoming = g_in.max(0.0) - g_out.min(0.0);
                let outgoing = g_in.min(0.0) - g_out.max(0.0);
                let (lo, hi) = local_bounds(
                    [values[k - n_u], values[k], values[k + n_u]],
                    [self.old[k - n_u], self.old[k], self.old[k + n_u]],
                );
                self.r_plus[k] = ratio(hi - values[k], incoming);
                self.r_minus[k] = ratio(lo - values[k], outgoing);
            }
        }
        for j in 1..n_v - 2 {
            let base = j * n_u;
            for i in cols.clone() {
                let k = base + i;
                let g = anti[k];
                let c = if g >= 0.0 {
                    self.r_plus[k + n_u].min(self.r_minus[k])
                } else {
                    self.r_plus[k].min(self.r_minus[k + n_u])
                };
                anti[k] = c * g;
            }
        }
        for j in 1..n_v - 1 {
            let base = j * n_u;
            for i in cols.clone() {
                let k = base + i;
                values[k] -= anti[k] - anti[k - n_u];
            }
        }
    }

    /// Zero out roundoff negatives and sub-`UNDERFLOW` tails, charging the
    /// change to the leak so that surviving plus leaked mass is unchanged.
    /// Also returns the support of what is left, `None` if nothing is.
    fn clip(&self, values: &mut [f64]) -> Result<(f64, Option<Support>)> {
        let n_u = self.n_u;
        let mut deficit = 0.0;
        let mut support: Option<Support> = None;
        for (j, row) in values.chunks_exact_mut(n_u).enumerate() {
            let mut first = None;
            let mut last = 0;
            for (i, x) in row.iter_mut().enumerate() {
                if x.is_nan() || *x < -NEGATIVE_TOLERANCE {
                    return Err(Error::Stability(format!(
                        "density value {x} after sweep (step size too large?)"
                    )));
                }
                if *x < UNDERFLOW {
                    deficit += *x;
                    *x = 0.0;
                } else {
                    first.get_or_insert(i);
                    last = i;
                }
            }
            if let Some(first) = first {
                let s = support.get_or_insert(Support { i_lo: first, i_hi: last, j_lo: j, j_hi: j });
                s.i_lo = s.i_lo.min(first);
                s.i_hi = s.i_hi.max(last);
                s.j_hi = j;
            }
        }
        Ok((deficit * self.grid.cell_area(), support))
    }
}

#[inline]
fn bernoulli(x: f64) -> f64 {
    if x.abs() < 1e-8 {
        1.0 - 0.5 * x
    } else {
        x / x.exp_m1()
    }
}

/// `(alpha, beta)` of the face flux `alpha * rho_left - beta * rho_right`
/// for velocity `a` and diffusion `k = K / h`. Both are non-negative.
#[inline]
fn face_coefficients(a: f64, k: f64, scheme: FluxScheme) -> (f64, f64) {
    match scheme {
        FluxScheme::ExponentialFitting if k > 0.0 => {
            let peclet = a / k;
            (k * bernoulli(-peclet), k * bernoulli(peclet))
        }
        _ => (a.max(0.0) + k, k - a.min(0.0)),
    }
}

#[inline]
fn local_bounds(low: [f64; 3], old: [f64; 3]) -> (f64, f64) {
    let min = |a: f64, b: f64| if a < b { a } else { b };
    let max = |a: f64, b: f64| if a > b { a } else { b };
    let lo = min(min(min(low[0], low[1]), min(low[2], old[0])), min(old[1], old[2]));
    let hi = max(max(max(low[0], low[1]), max(low[2], old[0])), max(old[1], old[2]));
    (lo, hi)
}

/// Fraction of the requested change that stays within the bound. `room`
/// and `request` never have opposite signs.
#[inline]
fn ratio(room: f64, request: f64) -> f64 {
    if request.abs() <= room.abs() {
        1.0
    } else {
        room / request
    }
}

/// Zalesak flux limiter along one line.
///
/// `low` holds the positive low-order solution, `anti[f]` the antidiffusive
/// transfer (already multiplied by `dt / h`) from node `f` to node `f + 1`.
/// The first and last faces must be zero. Each transfer is scaled so that no
/// node leaves the range spanned by its neighbours in `low` and `old`, which
/// keeps the result non-negative and conserves the line's mass exactly.
fn limit_line(low: &mut [f64], old: &[f64], anti: &mut [f64], r_plus: &mut [f64], r_minus: &mut [f64]) {
    let n = low.len();
    for i in 1..n - 1 {
        let (g_in, g_out) = (anti[i - 1], anti[i]);
        let incoming = g_in.max(0.0) - g_out.min(0.0);
        let outgoing = g_in.min(0.0) - g_out.max(0.0);
        let (lo, hi) = local_bounds(
            [low[i - 1], low[i], low[i + 1]],
            [old[i - 1], old[i], old[i + 1]],
        );
        r_plus[i] = ratio(hi - low[i], incoming);
        r_minus[i] = ratio(lo - low[i], outgoing);
    }
    for f in 1..n - 2 {
        let g = anti[f];
        let c = if g >= 0.0 {
            r_plus[f + 1].min(r_minus[f])
        } else {
            r_plus[f].min(r_minus[f + 1])
        };
        anti[f] = c * g;
    }
    for i in 1..n - 1 {
        low[i] -= anti[i] - anti[i - 1];
    }
}

/// One step on a copy of `field`. Builds a solver per call; loops should hold
/// an [`FpSolver`] instead.
pub fn fp_step(field: &DensityField, cfg: &FpStepConfig, input: f64) -> Result<DensityField> {
    let mut solver = FpSolver::new(*field.grid(), *cfg)?;
    let mut next = field.clone();
    solver.step(&mut next, input)?;
    Ok(next)
}
