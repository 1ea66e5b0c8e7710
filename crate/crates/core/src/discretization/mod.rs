//! Grids, partitions of [0, T] and tabulated fields.

mod field;
mod partition;

pub use field::{gradient, interp_row, stencil, Field2D, Field3D};
pub use partition::{Partition, SnappedPartition};

use serde::{Deserialize, Serialize};

use crate::error::{Result, TicError};

/// Uniform tensor grid: `nt` steps on [0, T] and `nx` nodes on [x_lo, x_hi].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub x_lo: f64,
    pub x_hi: f64,
    pub nx: usize,
    pub nt: usize,
    pub horizon: f64,
}

impl Grid {
    pub fn new(x_lo: f64, x_hi: f64, nx: usize, nt: usize, horizon: f64) -> Result<Self> {
        if !(x_lo.is_finite() && x_hi.is_finite() && x_lo < x_hi) {
            return Err(TicError::usage(format!("grid needs x_lo < x_hi, got [{x_lo}, {x_hi}]")));
        }
        if nx < 3 {
            return Err(TicError::usage(format!("grid needs nx >= 3, got {nx}")));
        }
        if nt < 1 {
            return Err(TicError::usage("grid needs nt >= 1"));
        }
        if !(horizon > 0.0 && horizon.is_finite()) {
            return Err(TicError::usage(format!("horizon must be positive, got {horizon}")));
        }
        Ok(Grid { x_lo, x_hi, nx, nt, horizon })
    }

    #[inline]
    pub fn dt(&self) -> f64 {
        self.horizon / self.nt as f64
    }

    #[inline]
    pub fn dx(&self) -> f64 {
        (self.x_hi - self.x_lo) / (self.nx - 1) as f64
    }

    #[inline]
    pub fn x(&self, i: usize) -> f64 {
        if i == self.nx - 1 {
            self.x_hi
        } else {
            self.x_lo + self.dx() * i as f64
        }
    }

    #[inline]
    pub fn t(&self, n: usize) -> f64 {
        if n == self.nt {
            self.horizon
        } else {
            self.horizon * n as f64 / self.nt as f64
        }
    }

    pub fn xs(&self) -> Vec<f64> {
        (0..self.nx).map(|i| self.x(i)).collect()
    }

    /// Time level of `t` when it lies on the grid (within 1e-9·dt).
    pub fn level_of(&self, t: f64) -> Option<usize> {
        let k = (t / self.dt()).round();
        if k < 0.0 || k > self.nt as f64 {
            return None;
        }
        let k = k as usize;
        ((self.t(k) - t).abs() <= 1e-9 * self.dt()).then_some(k)
    }

    /// Node indices whose x lies in the middle `fraction` of the domain.
    pub fn inner_nodes(&self, fraction: f64) -> std::ops::RangeInclusive<usize> {
        let mid = 0.5 * (self.x_lo + self.x_hi);
        let half = 0.5 * fraction * (self.x_hi - self.x_lo);
        let eps = 1e-9 * self.dx();
        let lo = (0..self.nx).find(|&i| self.x(i) >= mid - half - eps).unwrap_or(0);
        let hi = (0..self.nx).rev().find(|&i| self.x(i) <= mid + half + eps).unwrap_or(self.nx - 1);
        lo..=hi
    }

    /// Same grid with the spatial step halved and the time step quartered.
    pub fn refined_parabolic(&self) -> Grid {
        Grid { nx: 2 * self.nx - 1, nt: 4 * self.nt, ..*self }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spacings_and_endpoints() {
        let g = Grid::new(-4.0, 4.0, 201, 256, 1.0).unwrap();
        assert_eq!(g.dx(), 0.04);
        assert_eq!(g.dt(), 1.0 / 256.0);
        assert_eq!(g.x(200), 4.0);
        assert_eq!(g.t(256), 1.0);
        assert_eq!(g.level_of(0.5), Some(128));
        assert_eq!(g.level_of(0.501), None);
        assert_eq!(g.inner_nodes(0.5), 50..=150);
    }

    #[test]
    fn rejects_bad_grids() {
        assert!(Grid::new(1.0, 1.0, 10, 10, 1.0).is_err());
        assert!(Grid::new(0.0, 1.0, 2, 10, 1.0).is_err());
        assert!(Grid::new(0.0, 1.0, 3, 0, 1.0).is_err());
        assert!(Grid::new(0.0, 1.0, 3, 3, -1.0).is_err());
    }
}
