//! Control problem definition: coefficients, control set, the Hamiltonian and
//! its pointwise minimizer.

use std::fmt;
use std::sync::Arc;

use crate::error::{Result, TicError};

pub mod expr;
pub mod file;
pub mod oracle;
pub mod presets;

pub use oracle::RiccatiOracle;
pub use presets::{preset, preset_names, Oracle, Preset};

pub type StateFn = Arc<dyn Fn(f64, f64, f64) -> f64 + Send + Sync>;
pub type GeneratorFn = Arc<dyn Fn(f64, f64, f64, f64, f64, f64) -> f64 + Send + Sync>;
pub type TerminalFn = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;

pub const DEFAULT_CONTROL_POINTS: usize = 65;

#[derive(Debug, Clone, PartialEq)]
pub enum ControlSet {
    Interval { lo: f64, hi: f64 },
    Finite(Vec<f64>),
}

impl ControlSet {
    pub fn interval(lo: f64, hi: f64) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
            return Err(TicError::usage(format!("invalid control interval [{lo}, {hi}]")));
        }
        Ok(ControlSet::Interval { lo, hi })
    }

    pub fn finite(mut values: Vec<f64>) -> Result<Self> {
        if values.is_empty() || values.iter().any(|v| !v.is_finite()) {
            return Err(TicError::usage("finite control set must be nonempty and finite"));
        }
        values.sort_by(f64::total_cmp);
        values.dedup();
        Ok(ControlSet::Finite(values))
    }

    /// Sorted candidate controls. Intervals are sampled uniformly with `points` nodes.
    pub fn grid(&self, points: usize) -> Vec<f64> {
        match self {
            ControlSet::Finite(v) => v.clone(),
            ControlSet::Interval { lo, hi } => {
                if points <= 1 || lo == hi {
                    return vec![0.5 * (lo + hi)];
                }
                let step = (hi - lo) / (points - 1) as f64;
                (0..points)
                    .map(|k| if k == points - 1 { *hi } else { lo + step * k as f64 })
                    .collect()
            }
        }
    }

    pub fn contains(&self, u: f64) -> bool {
        const SLACK: f64 = 1e-12;
        match self {
            ControlSet::Interval { lo, hi } => u >= lo - SLACK && u <= hi + SLACK,
            ControlSet::Finite(v) => v.iter().any(|c| (c - u).abs() <= SLACK * (1.0 + c.abs())),
        }
    }

    pub fn bounds(&self) -> (f64, f64) {
        match self {
            ControlSet::Interval { lo, hi } => (*lo, *hi),
            ControlSet::Finite(v) => (v[0], v[v.len() - 1]),
        }
    }
}

/// One control problem. Immutable once built and cheap to clone.
#[derive(Clone)]
pub struct ProblemSpec {
    pub name: String,
    /// b(t, x, u)
    pub drift: StateFn,
    /// σ(t, x, u)
    pub diffusion: StateFn,
    /// g(τ, t, x, u, y, z)
    pub generator: GeneratorFn,
    /// h(τ, x)
    pub terminal: TerminalFn,
    pub controls: ControlSet,
    pub horizon: f64,
    pub sigma_control_free: bool,
    pub lipschitz: f64,
}

impl fmt::Debug for ProblemSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ProblemSpec")
            .field("name", &self.name)
            .field("controls", &self.controls)
            .field("horizon", &self.horizon)
            .field("sigma_control_free", &self.sigma_control_free)
            .field("lipschitz", &self.lipschitz)
            .finish_non_exhaustive()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HamiltonianArgs {
    pub tau: f64,
    pub t: f64,
    pub x: f64,
    pub u: f64,
    pub theta: f64,
    pub p: f64,
    pub pp: f64,
}

impl ProblemSpec {
    #[inline]
    pub fn b(&self, t: f64, x: f64, u: f64) -> f64 {
        (self.drift)(t, x, u)
    }

    #[inline]
    pub fn sigma(&self, t: f64, x: f64, u: f64) -> f64 {
        (self.diffusion)(t, x, u)
    }

    #[inline]
    pub fn g(&self, tau: f64, t: f64, x: f64, u: f64, y: f64, z: f64) -> f64 {
        (self.generator)(tau, t, x, u, y, z)
    }

    #[inline]
    pub fn h(&self, tau: f64, x: f64) -> f64 {
        (self.terminal)(tau, x)
    }

    /// ℍ = a·P + b·p + g(τ, t, x, u, θ, p·σ) with a = σ²/2.
    pub fn hamiltonian(&self, args: &HamiltonianArgs) -> Result<f64> {
        let HamiltonianArgs { tau, t, x, u, theta, p, pp } = *args;
        let sigma = self.sigma(t, x, u);
        if !sigma.is_finite() {
            return Err(coefficient_error("diffusion σ", args, sigma));
        }
        let b = self.b(t, x, u);
        if !b.is_finite() {
            return Err(coefficient_error("drift b", args, b));
        }
        let g = self.g(tau, t, x, u, theta, p * sigma);
        if !g.is_finite() {
            return Err(coefficient_error("generator g", args, g));
        }
        Ok(0.5 * sigma * sigma * pp + b * p + g)
    }

    /// Grid argmin of u ↦ ℍ(τ, t, x, u, θ, p, P); ties go to the smallest control.
    #[allow(clippy::too_many_arguments)]
    pub fn psi_argmin(
        &self,
        tau: f64,
        t: f64,
        x: f64,
        theta: f64,
        p: f64,
        pp: f64,
        control_grid: &[f64],
    ) -> Result<f64> {
        argmin_by(control_grid, |u| {
            self.hamiltonian(&HamiltonianArgs { tau, t, x, u, theta, p, pp })
        })
    }

    /// Spot checks of the structural claims carried by this problem on `[x_lo, x_hi]`.
    pub fn validate(&self, x_lo: f64, x_hi: f64, control_points: usize) -> Result<()> {
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return Err(TicError::usage(format!("horizon must be positive, got {}", self.horizon)));
        }
        if !(x_lo < x_hi) {
            return Err(TicError::usage(format!("empty state domain [{x_lo}, {x_hi}]")));
        }
        let controls = self.controls.grid(control_points.clamp(2, 9));
        let n = 9;
        let times: Vec<f64> = (0..n).map(|k| self.horizon * k as f64 / (n - 1) as f64).collect();
        let xs: Vec<f64> = (0..n).map(|k| x_lo + (x_hi - x_lo) * k as f64 / (n - 1) as f64).collect();
        let yz = [-1.0, 0.0, 1.0];

        for &t in &times {
            for &x in &xs {
                let s0 = self.sigma(t, x, controls[0]);
                for &u in &controls {
                    let b = self.b(t, x, u);
                    let s = self.sigma(t, x, u);
                    if !b.is_finite() || !s.is_finite() {
                        return Err(TicError::domain(format!(
                            "non-finite drift or diffusion at (t={t}, x={x}, u={u})"
                        )));
                    }
                    if self.sigma_control_free && s != s0 {
                        return Err(TicError::usage(format!(
                            "sigma_control_free is set but σ({t}, {x}, ·) varies with the control"
                        )));
                    }
                }
            }
        }

        for (i, &tau) in times.iter().enumerate() {
            for &x in &xs {
                let h = self.h(tau, x);
                if !h.is_finite() {
                    return Err(TicError::domain(format!("non-finite terminal h at (τ={tau}, x={x})")));
                }
                if i > 0 {
                    let slope = (h - self.h(times[i - 1], x)).abs() / (tau - times[i - 1]);
                    if slope > self.lipschitz * (1.0 + 1e-9) {
                        return Err(TicError::usage(format!(
                            "h is not τ-Lipschitz with constant {} at x={x}: slope {slope}",
                            self.lipschitz
                        )));
                    }
                }
            }
        }

        for i in 0..n {
            for j in i..n {
                let (tau, t) = (times[i], times[j]);
                for &x in &xs {
                    for &u in &controls {
                        for &y in &yz {
                            for &z in &yz {
                                let g = self.g(tau, t, x, u, y, z);
                                if !g.is_finite() {
                                    return Err(TicError::domain(format!(
                                        "non-finite generator g at (τ={tau}, t={t}, x={x}, u={u}, y={y}, z={z})"
                                    )));
                                }
                                if i > 0 {
                                    let prev = times[i - 1];
                                    let slope = (g - self.g(prev, t, x, u, y, z)).abs() / (tau - prev);
                                    if slope > self.lipschitz * (1.0 + 1e-9) {
                                        return Err(TicError::usage(format!(
                                            "g is not τ-Lipschitz with constant {} at (t={t}, x={x}, u={u}): slope {slope}",
                                            self.lipschitz
                                        )));
                                    }
                                }
                            }
                        }
                    }
                }
            }
        }
        Ok(())
    }

    /// True when g and h do not depend on τ at sampled points.
    pub fn is_tau_free(&self, x_lo: f64, x_hi: f64) -> bool {
        let n = 7;
        let big_t = self.horizon;
        let controls = self.controls.grid(5);
        for k in 0..n {
            let x = x_lo + (x_hi - x_lo) * k as f64 / (n - 1) as f64;
            if self.h(0.0, x) != self.h(0.5 * big_t, x) || self.h(0.0, x) != self.h(big_t, x) {
                return false;
            }
            for &u in &controls {
                for &t in &[0.6 * big_t, big_t] {
                    for &(y, z) in &[(0.0, 0.0), (1.3, -0.7)] {
                        if self.g(0.0, t, x, u, y, z) != self.g(0.5 * t, t, x, u, y, z)
                            || self.g(0.0, t, x, u, y, z) != self.g(t, t, x, u, y, z)
                        {
                            return false;
                        }
                    }
                }
            }
        }
        true
    }

    /// `Some(σ)` when the diffusion is the same constant at every sampled point.
    pub fn constant_sigma(&self, x_lo: f64, x_hi: f64) -> Option<f64> {
        let controls = self.controls.grid(5);
        let s0 = self.sigma(0.0, x_lo, controls[0]);
        let n = 9;
        for i in 0..n {
            let t = self.horizon * i as f64 / (n - 1) as f64;
            for j in 0..n {
                let x = x_lo + (x_hi - x_lo) * j as f64 / (n - 1) as f64;
                for &u in &controls {
                    if self.sigma(t, x, u) != s0 {
                        return None;
                    }
                }
            }
        }
        Some(s0)
    }
}

fn coefficient_error(name: &str, args: &HamiltonianArgs, value: f64) -> TicError {
    TicError::domain(format!(
        "{name} evaluated to {value} at (τ={}, t={}, x={}, u={}, θ={}, p={})",
        args.tau, args.t, args.x, args.u, args.theta, args.p
    ))
}

/// Index-stable argmin: strict improvement or an exact tie at a smaller control.
pub(crate) fn argmin_by<F>(grid: &[f64], mut f: F) -> Result<f64>
where
    F: FnMut(f64) -> Result<f64>,
{
    if grid.is_empty() {
        return Err(TicError::usage("control grid is empty"));
    }
    let mut best_u = grid[0];
    let mut best = f(best_u)?;
    for &u in &grid[1..] {
        let v = f(u)?;
        if v < best || (v == best && u < best_u) {
            best = v;
            best_u = u;
        }
    }
    Ok(best_u)
}
