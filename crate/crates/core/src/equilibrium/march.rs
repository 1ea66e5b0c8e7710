use rayon::prelude::*;

use super::{checker_residual, require_sigma_control_free, EquilibriumSolution, Method, SliceRows};
use crate::discretization::{Field2D, Field3D};
use crate::error::{Result, TicError};
use crate::pde::Stepper;

/// Backward march of all τ-slices together.
///
/// Slices sit on every `tau_stride`-th level. On the step from level n+1 to
/// n the host slice, τ = ⌊n/stride⌋·stride, takes an HJB step; its argmin is
/// the shared strategy on [t_n, t_{n+1}), and every other slice with τ ≤ n
/// takes a policy step with it. With stride s this is the partition cascade
/// with a knot every s levels.
pub fn diagonal_march_solve(stepper: &Stepper, tau_stride: usize) -> Result<EquilibriumSolution> {
    require_sigma_control_free(stepper.spec())?;
    if tau_stride == 0 {
        return Err(TicError::usage("tau_stride must be at least 1"));
    }
    let grid = *stepper.grid();
    let spec = stepper.spec();
    let (nx, nt) = (grid.nx, grid.nt);
    let tau_levels: Vec<usize> = (0..nt).step_by(tau_stride).collect();
    let mut slices: Vec<SliceRows> = tau_levels.iter().map(|&l| SliceRows::terminal(spec, &grid, l)).collect();

    let mut strategy = vec![0.0; (nt + 1) * nx];
    {
        let last = slices.last().expect("nt >= 1");
        stepper.argmin_row(last.tau, grid.t(nt), last.row(nt), &mut strategy[nt * nx..]);
    }

    let mut u = vec![0.0; nx];
    for n in (0..nt).rev() {
        let (rest, hosts) = slices.split_at_mut(n / tau_stride);
        let host = &mut hosts[0];
        let tau = host.tau;
        let (out, next) = host.step_pair(n);
        stepper.hjb_step(tau, n, next, out, &mut u)?;
        rest.par_iter_mut().try_for_each(|s| {
            let tau = s.tau;
            let (out, next) = s.step_pair(n);
            stepper.policy_step(tau, n, next, &u, out)
        })?;
        strategy[n * nx..(n + 1) * nx].copy_from_slice(&u);
    }

    let fields = slices.into_iter().map(|s| s.into_field(grid)).collect::<Result<Vec<_>>>()?;
    let theta = Field3D::new(grid, tau_levels, fields)?;
    let value = theta.diagonal()?;
    let strategy = Field2D::new(grid, 0, nt, strategy)?;
    let (residual, truncation_estimate) = checker_residual(spec, &theta, &strategy)?;
    Ok(EquilibriumSolution {
        theta,
        strategy,
        value,
        method: Method::DiagonalMarch,
        residual,
        truncation_estimate,
        iterations: 1,
        logs: Vec::new(),
    })
}
