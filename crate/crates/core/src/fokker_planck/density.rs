// SPDX-License-Identifier: Apache-2.0

use crate::error::{Error, Result};
use crate::model::NeuronState;

use super::grid::GridSpec;

/// Observables divide by the surviving mass; below this they are undefined.
pub const MIN_MASS: f64 = 1e-12;

/// Probability density sampled at the grid nodes, with the mass that has
/// left through the absorbing boundary tracked separately.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityField {
    grid: GridSpec,
    values: Vec<f64>,
    pub time: f64,
    pub leaked_mass: f64,
    pub(crate) steps: u64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Moments {
    pub mean_u: f64,
    pub mean_v: f64,
    pub var_u: f64,
    pub var_v: f64,
}

impl DensityField {
    pub fn zeros(grid: GridSpec) -> Result<Self> {
        grid.validate()?;
        Ok(Self {
            grid,
            values: vec![0.0; grid.len()],
            time: 0.0,
            leaked_mass: 0.0,
            steps: 0,
        })
    }

    /// Wrap raw node values (row-major in `v`). Boundary nodes are zeroed.
    pub fn from_values(grid: GridSpec, mut values: Vec<f64>, time: f64) -> Result<Self> {
        grid.validate()?;
        if values.len() != grid.len() {
            return Err(Error::Grid(format!(
                "expected {} values, got {}",
                grid.len(),
                values.len()
            )));
        }
        if let Some(bad) = values.iter().find(|x| !(x.is_finite() && **x >= 0.0)) {
            return Err(Error::Stability(format!(
                "density values must be finite and non-negative, found {bad}"
            )));
        }
        zero_boundary(&grid, &mut values);
        Ok(Self {
            grid,
            values,
            time,
            leaked_mass: 0.0,
            steps: 0,
        })
    }

    /// Product Gaussian sampled at the nodes, renormalized to unit mass.
    pub fn gaussian(
        grid: GridSpec,
        mean_u: f64,
        mean_v: f64,
        var_u: f64,
        var_v: f64,
    ) -> Result<Self> {
        grid.validate()?;
        if !(var_u > 0.0 && var_v > 0.0 && var_u.is_finite() && var_v.is_finite()) {
            return Err(Error::Config(format!(
                "variances must be positive (var_u={var_u}, var_v={var_v})"
            )));
        }
        if !grid.contains(mean_u, mean_v) {
            return Err(Error::Grid(format!(
                "mean ({mean_u}, {mean_v}) lies outside the grid"
            )));
        }
        let (n_u, n_v) = (grid.n_u(), grid.n_v());
        let gu: Vec<f64> = (0..n_u)
            .map(|i| (-(grid.u_at(i) - mean_u).powi(2) / (2.0 * var_u)).exp())
            .collect();
        let gv: Vec<f64> = (0..n_v)
            .map(|j| (-(grid.v_at(j) - mean_v).powi(2) / (2.0 * var_v)).exp())
            .collect();
        let mut values = Vec::with_capacity(grid.len());
        for &wv in &gv {
            values.extend(gu.iter().map(|&wu| wu * wv));
        }
        zero_boundary(&grid, &mut values);
        let mut field = Self {
            grid,
            values,
            time: 0.0,
            leaked_mass: 0.0,
            steps: 0,
        };
        let mass = field.total_mass();
        if mass < MIN_MASS {
            return Err(Error::EmptyDensity(mass));
        }
        let scale = 1.0 / mass;
        field.values.iter_mut().for_each(|x| *x *= scale);
        Ok(field)
    }

    /// Initial condition used throughout: all neurons near rest.
    pub fn resting_population(grid: GridSpec) -> Result<Self> {
        Self::gaussian(grid, -1.0, -0.55, 0.05, 0.013)
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub(crate) fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[self.grid.index(i, j)]
    }

    /// Midpoint-rule integral of the density.
    pub fn total_mass(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.grid.cell_area()
    }

    fn checked_mass(&self) -> Result<f64> {
        let mass = self.total_mass();
        if mass < MIN_MASS {
            Err(Error::EmptyDensity(mass))
        } else {
            Ok(mass)
        }
    }

    /// Means and variances of the density normalized by its surviving mass.
    pub fn moments(&self) -> Result<Moments> {
        self.checked_mass()?;
        let n_u = self.grid.n_u();
        let (mut m0, mut mu, mut mv) = (0.0, 0.0, 0.0);
        for (j, row) in self.values.chunks_exact(n_u).enumerate() {
            let mut r0 = 0.0;
            for (i, &p) in row.iter().enumerate() {
                r0 += p;
                mu += p * self.grid.u_at(i);
            }
            m0 += r0;
            mv += r0 * self.grid.v_at(j);
        }
        let mean_u = mu / m0;
        let mean_v = mv / m0;
        // Second pass about the mean avoids cancellation.
        let (mut suu, mut svv) = (0.0, 0.0);
        for (j, row) in self.values.chunks_exact(n_u).enumerate() {
            let dv = self.grid.v_at(j) - mean_v;
            let mut r0 = 0.0;
            for (i, &p) in row.iter().enumerate() {
                let du = self.grid.u_at(i) - mean_u;
                r0 += p;
                suu += p * du * du;
            }
            svv += r0 * dv * dv;
        }
        Ok(Moments {
            mean_u,
            mean_v,
            var_u: suu / m0,
            var_v: svv / m0,
        })
    }

    /// Fraction of the surviving mass with `u > 0`; the `u = 0` column, if
    /// the grid has one, counts half.
    pub fn supra_fraction(&self) -> Result<f64> {
        let mass = self.checked_mass()?;
        let n_u = self.grid.n_u();
        let tol = 1e-9 * self.grid.du;
        let weights: Vec<f64> = (0..n_u)
            .map(|i| {
                let u = self.grid.u_at(i);
                if u.abs() <= tol {
                    0.5
                } else if u > 0.0 {
                    1.0
                } else {
                    0.0
                }
            })
            .collect();
        let first = weights.iter().position(|&w| w > 0.0).unwrap_or(n_u);
        let above: f64 = self
            .values
            .chunks_exact(n_u)
            .map(|row| {
                row[first..]
                    .iter()
                    .zip(&weights[first..])
                    .map(|(p, w)| p * w)
                    .sum::<f64>()
            })
            .sum();
        Ok((above * self.grid.cell_area() / mass).clamp(0.0, 1.0))
    }

    /// Node with the largest density.
    pub fn mode(&self) -> NeuronState {
        let (idx, _) = self
            .values
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |best, (k, &p)| {
                if p > best.1 {
                    (k, p)
                } else {
                    best
                }
            });
        let n_u = self.grid.n_u();
        NeuronState::new(self.grid.u_at(idx % n_u), self.grid.v_at(idx / n_u))
    }

    /// Mode position in grid cells relative to a point, `(cells_u, cells_v)`.
    pub fn mode_offset_cells(&self, target: NeuronState) -> (f64, f64) {
        let mode = self.mode();
        (
            (mode.u - target.u).abs() / self.grid.du,
            (mode.v - target.v).abs() / self.grid.dv,
        )
    }

    /// `sum |p - q| du dv` between the two densities normalized to unit mass.
    pub fn l1_distance_normalized(&self, other: &[f64]) -> Result<f64> {
        if other.len() != self.values.len() {
            return Err(Error::Grid("density sizes differ".into()));
        }
        let area = self.grid.cell_area();
        let mass_p = self.checked_mass()?;
        let mass_q = other.iter().sum::<f64>() * area;
        if mass_q < MIN_MASS {
            return Err(Error::EmptyDensity(mass_q));
        }
        Ok(self
            .values
            .iter()
            .zip(other)
            .map(|(p, q)| (p / mass_p - q / mass_q).abs())
            .sum::<f64>()
            * area)
    }
}

pub(crate) fn zero_boundary(grid: &GridSpec, values: &mut [f64]) {
    let (n_u, n_v) = (grid.n_u(), grid.n_v());
    values[..n_u].iter_mut().for_each(|x| *x = 0.0);
    values[(n_v - 1) * n_u..].iter_mut().for_each(|x| *x = 0.0);
    for j in 1..n_v - 1 {
        values[j * n_u] = 0.0;
        values[j * n_u + n_u - 1] = 0.0;
    }
}
