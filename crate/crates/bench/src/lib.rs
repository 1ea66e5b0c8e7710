//! Fixtures shared by the benchmarks.

use tic_core::pde::{SchemeConfig, Stepper};
use tic_core::problem::preset;
use tic_core::Grid;

/// Two-rate discounting on [-5, 5] with `nx` nodes and `nt` levels.
pub fn two_rate(nx: usize, nt: usize) -> Stepper {
    let spec = preset("two-rate-discount", &[]).expect("preset").spec;
    let grid = Grid::new(-5.0, 5.0, nx, nt, spec.horizon).expect("grid");
    Stepper::new(&spec, &grid, &SchemeConfig::default()).expect("stable grid")
}

/// Exponential-discount LQ on [-4, 4] with the acceptance control grid.
pub fn lq(nx: usize, nt: usize) -> Stepper {
    let spec = preset("exp-discount-lq", &[]).expect("preset").spec;
    let grid = Grid::new(-4.0, 4.0, nx, nt, spec.horizon).expect("grid");
    Stepper::new(&spec, &grid, &SchemeConfig { control_points: 129, ..Default::default() }).expect("stable grid")
}

pub fn terminal(stepper: &Stepper, tau: f64) -> Vec<f64> {
    stepper.grid().xs().iter().map(|&x| stepper.spec().h(tau, x)).collect()
}
