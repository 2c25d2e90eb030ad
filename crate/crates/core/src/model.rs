// SPDX-License-Identifier: Apache-2.0

//! FitzHugh–Nagumo vector field, fixed points and the deterministic
//! excitation threshold.
//!
//! ```text
//! du/dt = c (-v + u - u^3/3 + I(t)) + c sqrt(2D) xi(t)
//! dv/dt = u - b v + a
//! ```

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Model constants of one neuron plus the noise intensity `D`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FhnParams {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    /// Noise intensity `D`.
    #[serde(rename = "D")]
    pub noise: f64,
}

impl Default for FhnParams {
    fn default() -> Self {
        Self {
            a: 0.7,
            b: 0.8,
            c: 10.0,
            noise: 0.0,
        }
    }
}

impl FhnParams {
    pub fn with_noise(self, noise: f64) -> Self {
        Self { noise, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [self.a, self.b, self.c, self.noise]
            .iter()
            .all(|x| x.is_finite());
        if !finite {
            return Err(Error::Config("model parameters must be finite".into()));
        }
        if self.b <= 0.0 || self.c <= 0.0 {
            return Err(Error::Config(format!(
                "b and c must be positive (b={}, c={})",
                self.b, self.c
            )));
        }
        if self.noise < 0.0 {
            return Err(Error::Config(format!(
                "noise intensity must be non-negative, got {}",
                self.noise
            )));
        }
        Ok(())
    }

    /// Diffusion coefficient of the density along `u`: `D c^2`.
    pub fn diffusion_u(&self) -> f64 {
        self.noise * self.c * self.c
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct NeuronState {
    pub u: f64,
    pub v: f64,
}

impl NeuronState {
    pub const fn new(u: f64, v: f64) -> Self {
        Self { u, v }
    }

    pub fn is_finite(&self) -> bool {
        self.u.is_finite() && self.v.is_finite()
    }
}

/// Deterministic part of the vector field. Noise never enters here.
#[inline]
pub fn drift(params: &FhnParams, state: NeuronState, input: f64) -> (f64, f64) {
    let NeuronState { u, v } = state;
    (
        params.c * (-v + u - u * u * u / 3.0 + input),
        u - params.b * v + params.a,
    )
}

/// Classic fixed-step RK4 on the noiseless vector field.
pub fn rk4_step(params: &FhnParams, state: NeuronState, input: f64, dt: f64) -> NeuronState {
    let shift = |s: NeuronState, k: (f64, f64), h: f64| NeuronState::new(s.u + h * k.0, s.v + h * k.1);
    let k1 = drift(params, state, input);
    let k2 = drift(params, shift(state, k1, 0.5 * dt), input);
    let k3 = drift(params, shift(state, k2, 0.5 * dt), input);
    let k4 = drift(params, shift(state, k3, dt), input);
    NeuronState::new(
        state.u + dt / 6.0 * (k1.0 + 2.0 * k2.0 + 2.0 * k3.0 + k4.0),
        state.v + dt / 6.0 * (k1.1 + 2.0 * k2.1 + 2.0 * k3.1 + k4.1),
    )
}

/// RK4 trajectory sampled at every step, `floor(t_end/dt) + 1` points.
///
/// The input is evaluated at the start of each step and held for the whole
/// step, the same convention the stochastic and density solvers use.
pub fn rk4_trajectory<F>(
    params: &FhnParams,
    initial: NeuronState,
    input: F,
    dt: f64,
    t_end: f64,
) -> Vec<NeuronState>
where
    F: Fn(f64) -> f64,
{
    let steps = step_count(t_end, dt);
    let mut out = Vec::with_capacity(steps + 1);
    let mut state = initial;
    out.push(state);
    for k in 0..steps {
        state = rk4_step(params, state, input(k as f64 * dt), dt);
        out.push(state);
    }
    out
}

/// Number of whole steps of size `dt` in `[0, t_end]`, tolerant to the
/// roundoff in ratios such as `150.0 / 0.01`.
pub fn step_count(t_end: f64, dt: f64) -> usize {
    let ratio = t_end / dt;
    let nearest = ratio.round();
    if (ratio - nearest).abs() < 1e-9 * nearest.max(1.0) {
        nearest as usize
    } else {
        ratio.floor() as usize
    }
}

/// Default iteration budget for [`rest_state`].
pub const REST_STATE_MAX_ITER: usize = 200;

/// Intersection of the nullclines with the most negative `u`.
pub fn rest_state(params: &FhnParams, input: f64) -> Result<NeuronState> {
    rest_state_with_budget(params, input, REST_STATE_MAX_ITER)
}

/// [`rest_state`] with an explicit bisection/Newton iteration budget.
pub fn rest_state_with_budget(
    params: &FhnParams,
    input: f64,
    max_iter: usize,
) -> Result<NeuronState> {
    params.validate()?;
    if !input.is_finite() {
        return Err(Error::Config("input current must be finite".into()));
    }
    let (a, b) = (params.a, params.b);
    // Residual of u - u^3/3 + I = (u + a)/b; strictly decreasing for large |u|.
    let f = |u: f64| u - u * u * u / 3.0 + input - (u + a) / b;
    let df = |u: f64| 1.0 - u * u - 1.0 / b;

    // Cauchy bound on the roots of u^3 + 3(1/b - 1) u + 3(a/b - I).
    let p = 3.0 * (1.0 / b - 1.0);
    let q = 3.0 * (a / b - input);
    let bound = 1.0 + p.abs().max(q.abs());

    // Scan from the left for the first sign change. f(-bound) > 0.
    let scan_steps = 4096usize;
    let h = 2.0 * bound / scan_steps as f64;
    let mut lo = -bound;
    let mut f_lo = f(lo);
    let mut bracket = None;
    for k in 1..=scan_steps {
        let hi = -bound + k as f64 * h;
        let f_hi = f(hi);
        if f_hi == 0.0 {
            bracket = Some((hi, hi));
            break;
        }
        if f_lo.signum() != f_hi.signum() {
            bracket = Some((lo, hi));
            break;
        }
        lo = hi;
        f_lo = f_hi;
    }
    let (mut lo, mut hi) =
        bracket.ok_or_else(|| Error::NoConvergence("no sign change in root bracket".into()))?;

    let mut root = 0.5 * (lo + hi);
    let mut converged = lo == hi;
    for _ in 0..max_iter {
        if converged {
            break;
        }
        let f_root = f(root);
        if f_root.abs() < 1e-14 {
            converged = true;
            break;
        }
        // Keep the bracket: f(lo) > 0 > f(hi).
        if f_root > 0.0 {
            lo = root;
        } else {
            hi = root;
        }
        let slope = df(root);
        let newton = root - f_root / slope;
        root = if slope != 0.0 && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        if hi - lo < 1e-15 * (1.0 + root.abs()) {
            converged = true;
        }
    }
    if !converged && f(root).abs() > 1e-12 {
        return Err(Error::NoConvergence(format!(
            "rest state root not found within {max_iter} iterations"
        )));
    }
    Ok(NeuronState::new(root, (root + a) / b))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Response {
    Oscillatory,
    Rest,
}

pub const CLASSIFY_DT: f64 = 0.001;
pub const CLASSIFY_HORIZON: f64 = 100.0;

/// Deterministic response to a constant input `amplitude`: start at the
/// unforced rest state nudged by +0.01 in `u`, integrate with RK4, and call
/// it oscillatory when `u` crosses zero upward at least twice in the second
/// half of the horizon.
pub fn classify_response(params: &FhnParams, amplitude: f64, horizon: f64) -> Result<Response> {
    let deterministic = params.with_noise(0.0);
    let rest = rest_state(&deterministic, 0.0)?;
    let mut state = NeuronState::new(rest.u + 0.01, rest.v);
    let steps = step_count(horizon, CLASSIFY_DT);
    let settle = steps / 2;
    let mut crossings = 0;
    for k in 0..steps {
        let next = rk4_step(&deterministic, state, amplitude, CLASSIFY_DT);
        if k >= settle && state.u < 0.0 && next.u >= 0.0 {
            crossings += 1;
        }
        state = next;
    }
    Ok(if crossings >= 2 {
        Response::Oscillatory
    } else {
        Response::Rest
    })
}
