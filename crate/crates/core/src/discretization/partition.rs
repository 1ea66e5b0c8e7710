use serde::{Deserialize, Serialize};

use super::Grid;
use crate::error::{Result, TicError};

/// Knots 0 = t_0 < t_1 < … < t_N = T.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Partition {
    knots: Vec<f64>,
}

/// A partition whose knots sit exactly on time levels of a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SnappedPartition {
    pub partition: Partition,
    pub levels: Vec<usize>,
}

impl Partition {
    pub fn new(knots: Vec<f64>) -> Result<Self> {
        if knots.len() < 2 {
            return Err(TicError::usage("a partition needs at least the knots 0 and T"));
        }
        if knots[0] != 0.0 {
            return Err(TicError::usage(format!("first knot must be 0, got {}", knots[0])));
        }
        if knots.iter().any(|k| !k.is_finite()) || knots.windows(2).any(|w| w[1] <= w[0]) {
            return Err(TicError::usage("partition knots must be finite and strictly increasing"));
        }
        Ok(Partition { knots })
    }

    pub fn uniform(horizon: f64, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(TicError::usage("uniform partition needs N >= 1"));
        }
        let knots = (0..=n)
            .map(|k| if k == n { horizon } else { horizon * k as f64 / n as f64 })
            .collect();
        Partition::new(knots)
    }

    /// Cell lengths proportional to ratio^k, k = 0..N-1.
    pub fn geometric(horizon: f64, n: usize, ratio: f64) -> Result<Self> {
        if n == 0 || !(ratio > 0.0 && ratio.is_finite()) {
            return Err(TicError::usage("geometric partition needs N >= 1 and ratio > 0"));
        }
        let weights: Vec<f64> = (0..n).map(|k| ratio.powi(k as i32)).collect();
        let total: f64 = weights.iter().sum();
        let mut knots = Vec::with_capacity(n + 1);
        let mut acc = 0.0;
        knots.push(0.0);
        for w in &weights[..n - 1] {
            acc += w;
            knots.push(horizon * acc / total);
        }
        knots.push(horizon);
        Partition::new(knots)
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    /// Number of cells N.
    pub fn len(&self) -> usize {
        self.knots.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn horizon(&self) -> f64 {
        self.knots[self.knots.len() - 1]
    }

    /// ‖Π‖ = max cell length.
    pub fn mesh(&self) -> f64 {
        self.knots.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max)
    }

    /// Index k - 1 of the cell [t_{k-1}, t_k) containing s; the last cell is closed.
    pub fn cell_of(&self, s: f64) -> Result<usize> {
        let big_t = self.horizon();
        if !(0.0..=big_t).contains(&s) {
            return Err(TicError::domain(format!("time {s} outside [0, {big_t}]")));
        }
        let idx = self.knots.partition_point(|&k| k <= s);
        Ok((idx - 1).min(self.len() - 1))
    }

    /// ℓ^Π(s): the left knot of the cell containing s.
    pub fn ell_pi(&self, s: f64) -> Result<f64> {
        Ok(self.knots[self.cell_of(s)?])
    }

    pub fn refines(&self, coarser: &Partition) -> bool {
        coarser
            .knots
            .iter()
            .all(|k| self.knots.binary_search_by(|p| p.total_cmp(k)).is_ok())
    }

    /// Moves every knot to its nearest grid level.
    pub fn snap(&self, grid: &Grid) -> Result<SnappedPartition> {
        if (self.horizon() - grid.horizon).abs() > 1e-12 * grid.horizon {
            return Err(TicError::usage(format!(
                "partition ends at {} but the grid horizon is {}",
                self.horizon(),
                grid.horizon
            )));
        }
        let dt = grid.dt();
        let mut levels = Vec::with_capacity(self.knots.len());
        for &k in &self.knots {
            let level = (k / dt).round();
            if (k - level * dt).abs() > 0.5 * dt + 1e-12 || level < 0.0 || level > grid.nt as f64 {
                return Err(TicError::usage(format!("knot {k} is more than dt/2 from the time grid")));
            }
            let level = level as usize;
            if levels.last() == Some(&level) {
                return Err(TicError::usage(format!(
                    "two knots snap to time level {level}; use a finer time grid (nt = {})",
                    grid.nt
                )));
            }
            levels.push(level);
        }
        let knots = levels.iter().map(|&l| grid.t(l)).collect();
        Ok(SnappedPartition { partition: Partition { knots }, levels })
    }
}
