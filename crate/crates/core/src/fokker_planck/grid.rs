// SPDX-License-Identifier: Apache-2.0

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Rectangular node grid on the `(u, v)` phase plane. The outermost nodes are
/// the absorbing boundary.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSpec {
    pub u_min: f64,
    pub u_max: f64,
    pub v_min: f64,
    pub v_max: f64,
    pub du: f64,
    pub dv: f64,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            u_min: -4.5,
            u_max: 4.5,
            v_min: -2.34,
            v_max: 2.34,
            du: 0.03,
            dv: 0.013,
        }
    }
}

fn intervals(lo: f64, hi: f64, h: f64, axis: &str) -> Result<usize> {
    if !(lo.is_finite() && hi.is_finite() && h.is_finite()) {
        return Err(Error::Grid(format!("{axis} bounds must be finite")));
    }
    if h <= 0.0 || hi <= lo {
        return Err(Error::Grid(format!(
            "{axis}: need min < max and positive spacing (min={lo}, max={hi}, step={h})"
        )));
    }
    let ratio = (hi - lo) / h;
    let count = ratio.round();
    if (ratio - count).abs() > 1e-9 * count.max(1.0) {
        return Err(Error::Grid(format!(
            "{axis}: span {} is not an integer multiple of {h}",
            hi - lo
        )));
    }
    if count < 2.0 {
        return Err(Error::Grid(format!("{axis}: need at least one interior node")));
    }
    Ok(count as usize)
}

impl GridSpec {
    pub fn validate(&self) -> Result<()> {
        intervals(self.u_min, self.u_max, self.du, "u")?;
        intervals(self.v_min, self.v_max, self.dv, "v")?;
        Ok(())
    }

    /// Node count along `u`.
    pub fn n_u(&self) -> usize {
        ((self.u_max - self.u_min) / self.du).round() as usize + 1
    }

    /// Node count along `v`.
    pub fn n_v(&self) -> usize {
        ((self.v_max - self.v_min) / self.dv).round() as usize + 1
    }

    pub fn len(&self) -> usize {
        self.n_u() * self.n_v()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn u_at(&self, i: usize) -> f64 {
        self.u_min + i as f64 * self.du
    }

    #[inline]
    pub fn v_at(&self, j: usize) -> f64 {
        self.v_min + j as f64 * self.dv
    }

    /// Flat index of node `(i, j)`; rows run along `u`.
    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.n_u() + i
    }

    pub fn cell_area(&self) -> f64 {
        self.du * self.dv
    }

    pub fn contains(&self, u: f64, v: f64) -> bool {
        u >= self.u_min && u <= self.u_max && v >= self.v_min && v <= self.v_max
    }

    /// Node whose cell `[x - h/2, x + h/2)` holds the point, if any.
    pub fn nearest_node(&self, u: f64, v: f64) -> Option<(usize, usize)> {
        let fi = ((u - self.u_min) / self.du + 0.5).floor();
        let fj = ((v - self.v_min) / self.dv + 0.5).floor();
        if !(fi >= 0.0 && fj >= 0.0) {
            return None;
        }
        let (i, j) = (fi as usize, fj as usize);
        (i < self.n_u() && j < self.n_v()).then_some((i, j))
    }

    /// Same bounds with both spacings halved.
    pub fn refined(&self) -> Self {
        Self {
            du: self.du / 2.0,
            dv: self.dv / 2.0,
            ..*self
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_node_counts() {
        let g = GridSpec::default();
        g.validate().unwrap();
        assert_eq!((g.n_u(), g.n_v()), (301, 361));
        assert!((g.u_at(150)).abs() < 1e-12);
        assert!((g.v_at(180)).abs() < 1e-12);
    }

    #[test]
    fn rejects_non_integer_spans() {
        let g = GridSpec {
            du: 0.031,
            ..GridSpec::default()
        };
        assert!(matches!(g.validate(), Err(Error::Grid(_))));
        let g = GridSpec {
            u_max: -5.0,
            ..GridSpec::default()
        };
        assert!(g.validate().is_err());
    }

    #[test]
    fn nearest_node_is_half_open() {
        let g = GridSpec::default();
        assert_eq!(g.nearest_node(0.0, 0.0), Some((150, 180)));
        // Lower edge of the cell belongs to it, upper edge to the next one.
        assert_eq!(g.nearest_node(-0.015, 0.0), Some((150, 180)));
        assert_eq!(g.nearest_node(0.015, 0.0), Some((151, 180)));
        assert_eq!(g.nearest_node(-4.6, 0.0), None);
        assert_eq!(g.nearest_node(4.52, 0.0), None);
    }

    #[test]
    fn refinement_halves_spacing() {
        let g = GridSpec::default().refined();
        g.validate().unwrap();
        assert_eq!((g.n_u(), g.n_v()), (601, 721));
    }
}
