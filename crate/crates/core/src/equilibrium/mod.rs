//! The limit equilibrium HJB equation on the triangle D[0,T].
//!
//! Three solvers share [`EquilibriumSolution`]:
//! - [`diagonal_march_solve`] marches every τ-slice backward at once, the
//!   slice hosting the current level fixing the shared strategy;
//! - [`picard_window_solve`] iterates v ↦ V (diagonal) on short windows;
//! - [`kernel_picard_solve`] does the same iteration on the Gaussian-kernel
//!   integral form of each slice.

mod kernel;
mod march;
mod picard;

pub use kernel::{kernel_picard_solve, KernelWeights};
pub use march::diagonal_march_solve;
pub use picard::{picard_window_solve, PicardOptions};

use serde::{Deserialize, Serialize};

use crate::discretization::{Field2D, Field3D, Grid};
use crate::error::{Result, TicError};
use crate::problem::{HamiltonianArgs, ProblemSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    DiagonalMarch,
    Picard,
    KernelPicard,
}

impl std::str::FromStr for Method {
    type Err = TicError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "march" | "diagonal-march" => Ok(Method::DiagonalMarch),
            "picard" => Ok(Method::Picard),
            "kernel" | "kernel-picard" => Ok(Method::KernelPicard),
            other => Err(TicError::usage(format!("unknown method `{other}`; use march, picard or kernel"))),
        }
    }
}

/// One fixed-point window, with every attempt's iterate differences.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WindowLog {
    pub t_start: f64,
    pub t_end: f64,
    pub levels: usize,
    pub diffs: Vec<f64>,
    /// Differences of attempts discarded before a window was halved.
    pub rejected: Vec<Vec<f64>>,
}

impl WindowLog {
    /// d_{i+1}/d_i for i ≥ 1 (skipping the initial guess distance d_0).
    pub fn ratios(&self) -> Vec<f64> {
        self.diffs.windows(2).skip(1).map(|w| w[1] / w[0]).collect()
    }
}

#[derive(Debug, Clone)]
pub struct EquilibriumSolution {
    pub theta: Field3D,
    /// Row n holds the control on [t_n, t_{n+1}).
    pub strategy: Field2D,
    pub value: Field2D,
    pub method: Method,
    /// Sup PDE residual on a checker sub-grid (every fourth slice, level and
    /// inner-half node).
    pub residual: f64,
    /// Sup of the pointwise truncation estimate on the same sub-grid.
    pub truncation_estimate: f64,
    pub iterations: usize,
    pub logs: Vec<WindowLog>,
}

/// Rows τ..=nt of one slice, stored contiguously.
pub(crate) struct SliceRows {
    pub level: usize,
    pub tau: f64,
    nx: usize,
    rows: Vec<f64>,
}

impl SliceRows {
    /// Slice at `level` holding only its terminal row h(τ, ·).
    pub fn terminal(spec: &ProblemSpec, grid: &Grid, level: usize) -> Self {
        let (nx, nt) = (grid.nx, grid.nt);
        let tau = grid.t(level);
        let mut rows = vec![0.0; (nt - level + 1) * nx];
        for i in 0..nx {
            rows[(nt - level) * nx + i] = spec.h(tau, grid.x(i));
        }
        SliceRows { level, tau, nx, rows }
    }

    pub fn row(&self, n: usize) -> &[f64] {
        let k = n - self.level;
        &self.rows[k * self.nx..(k + 1) * self.nx]
    }

    /// (row n mutable, row n+1) for one backward step.
    pub fn step_pair(&mut self, n: usize) -> (&mut [f64], &[f64]) {
        let k = n - self.level;
        let nx = self.nx;
        let (head, tail) = self.rows.split_at_mut((k + 1) * nx);
        (&mut head[k * nx..], &tail[..nx])
    }

    pub fn into_field(self, grid: Grid) -> Result<Field2D> {
        Field2D::new(grid, self.level, grid.nt, self.rows)
    }
}

pub(crate) fn require_sigma_control_free(spec: &ProblemSpec) -> Result<()> {
    if !spec.sigma_control_free {
        return Err(TicError::unsupported(
            "the equilibrium solvers need a diffusion that does not depend on the control (σ(t,x,u) = σ(t,x))",
        ));
    }
    Ok(())
}

/// Central-in-time residual |Θ_t + ℍ(τ, t, x, 𝕦, Θ, Θ_x, Θ_xx)| on every fourth
/// slice, level and inner-half node, with a matching truncation estimate.
pub(crate) fn checker_residual(spec: &ProblemSpec, theta: &Field3D, strategy: &Field2D) -> Result<(f64, f64)> {
    let grid = *theta.grid();
    let (dt, dx) = (grid.dt(), grid.dx());
    let inner = grid.inner_nodes(0.5);
    let (mut resid, mut trunc) = (0.0f64, 0.0f64);
    for (k, &tau_level) in theta.tau_levels().iter().enumerate() {
        if k % 4 != 0 {
            continue;
        }
        let slice = theta.slice(k);
        let tau = grid.t(tau_level);
        let mut m = tau_level + 1;
        while m < grid.nt {
            let (prev, cur, next) = (slice.row(m - 1), slice.row(m), slice.row(m + 1));
            let t = grid.t(m);
            for i in inner.clone().step_by(4) {
                if i < 2 || i + 2 >= grid.nx {
                    continue;
                }
                let u = strategy.at(m, i);
                let x = grid.x(i);
                let (th, p, pp) = slice.derivatives(m, i);
                let h = spec.hamiltonian(&HamiltonianArgs { tau, t, x, u, theta: th, p, pp })?;
                let th_t = (next[i] - prev[i]) / (2.0 * dt);
                resid = resid.max((th_t + h).abs());

                let th_tt = (next[i] - 2.0 * cur[i] + prev[i]) / (dt * dt);
                let d3 = (cur[i + 2] - 2.0 * cur[i + 1] + 2.0 * cur[i - 1] - cur[i - 2]) / (2.0 * dx.powi(3));
                let d4 = (cur[i + 2] - 4.0 * cur[i + 1] + 6.0 * cur[i] - 4.0 * cur[i - 1] + cur[i - 2]) / dx.powi(4);
                let sigma = spec.sigma(t, x, u);
                let a = 0.5 * sigma * sigma;
                let b = spec.b(t, x, u);
                let est = 0.5 * dt * th_tt.abs() + dx * dx * (a * d4.abs() / 12.0 + b.abs() * d3.abs() / 6.0);
                trunc = trunc.max(est);
            }
            m += 4;
        }
    }
    Ok((resid, trunc))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn method_names() {
        assert_eq!("march".parse::<Method>().unwrap(), Method::DiagonalMarch);
        assert_eq!("kernel".parse::<Method>().unwrap(), Method::KernelPicard);
        assert!("newton".parse::<Method>().is_err());
    }

    #[test]
    fn ratios_skip_initial_guess() {
        let log = WindowLog { t_start: 0.0, t_end: 1.0, levels: 4, diffs: vec![1.0, 0.5, 0.1, 0.01], rejected: vec![] };
        let r = log.ratios();
        assert_eq!(r.len(), 2);
        assert!((r[0] - 0.2).abs() < 1e-15 && (r[1] - 0.1).abs() < 1e-15);
    }
}
