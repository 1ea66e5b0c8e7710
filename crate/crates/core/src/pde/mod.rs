//! Backward finite-difference steppers for the HJB equation and for the
//! representation PDE under a frozen strategy.
//!
//! Every step from level n+1 to level n evaluates the Hamiltonian at
//! t_{n+1} on the row V_{n+1}. Row n of a strategy field holds the control
//! used on that step, so the control acting on [t_n, t_{n+1}).

mod stepper;

pub use stepper::{GapReport, Stepper};

use serde::{Deserialize, Serialize};

use crate::discretization::{Field2D, Grid};
use crate::error::{Result, TicError};
use crate::problem::{ProblemSpec, DEFAULT_CONTROL_POINTS};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StepperKind {
    ExplicitUpwind,
    SemiImplicitDiffusion,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Boundary {
    LinearExtrapolation,
    Neumann,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SchemeConfig {
    pub stepper: StepperKind,
    pub cfl_safety: f64,
    pub control_points: usize,
    pub boundary: Boundary,
}

impl Default for SchemeConfig {
    fn default() -> Self {
        SchemeConfig {
            stepper: StepperKind::ExplicitUpwind,
            cfl_safety: 1.0,
            control_points: DEFAULT_CONTROL_POINTS,
            boundary: Boundary::LinearExtrapolation,
        }
    }
}

impl std::str::FromStr for StepperKind {
    type Err = TicError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "explicit-upwind" | "explicit" => Ok(StepperKind::ExplicitUpwind),
            "semi-implicit-diffusion" | "semi-implicit" => Ok(StepperKind::SemiImplicitDiffusion),
            other => Err(TicError::usage(format!(
                "unknown scheme `{other}`; use explicit-upwind or semi-implicit-diffusion"
            ))),
        }
    }
}

fn window_levels(grid: &Grid, window: (f64, f64)) -> Result<(usize, usize)> {
    let level = |t: f64| {
        grid.level_of(t).ok_or_else(|| {
            TicError::usage(format!("window end {t} is not a time level of the grid (dt = {})", grid.dt()))
        })
    };
    let (a, b) = (level(window.0)?, level(window.1)?);
    if a >= b {
        return Err(TicError::usage(format!("empty window [{}, {}]", window.0, window.1)));
    }
    Ok((a, b))
}

/// HJB on the window [t_a, t_b] with τ frozen; returns (value, strategy).
pub fn hjb_backward_solve(
    spec: &ProblemSpec,
    tau: f64,
    window: (f64, f64),
    terminal: &[f64],
    grid: &Grid,
    scheme: &SchemeConfig,
) -> Result<(Field2D, Field2D)> {
    let stepper = Stepper::new(spec, grid, scheme)?;
    let (a, b) = window_levels(grid, window)?;
    stepper.hjb(tau, a, b, terminal)
}

/// Representation PDE on [t_a, t_b] with τ frozen and controls read from `strategy`.
pub fn representation_solve(
    spec: &ProblemSpec,
    tau: f64,
    strategy: &Field2D,
    window: (f64, f64),
    terminal: &[f64],
    grid: &Grid,
    scheme: &SchemeConfig,
) -> Result<Field2D> {
    let stepper = Stepper::new(spec, grid, scheme)?;
    let (a, b) = window_levels(grid, window)?;
    stepper.representation(tau, strategy, a, b, terminal)
}

pub fn verification_gap(
    spec: &ProblemSpec,
    tau: f64,
    value: &Field2D,
    strategy: &Field2D,
    scheme: &SchemeConfig,
) -> Result<GapReport> {
    let stepper = Stepper::new(spec, value.grid(), scheme)?;
    stepper.verification_gap(tau, value, strategy)
}
