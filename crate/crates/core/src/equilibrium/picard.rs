use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{checker_residual, require_sigma_control_free, EquilibriumSolution, Method, SliceRows, WindowLog};
use crate::discretization::{gradient, Field2D, Field3D};
use crate::error::{Result, TicError};
use crate::pde::Stepper;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PicardOptions {
    /// Window length in time; `None` means T/8. Must be a multiple of dt.
    pub delta: Option<f64>,
    pub tol: f64,
    pub max_iter: usize,
    pub max_halvings: usize,
    /// A window is halved when d_1/d_0 exceeds this.
    pub first_ratio_limit: f64,
}

impl Default for PicardOptions {
    fn default() -> Self {
        PicardOptions { delta: None, tol: 1e-10, max_iter: 200, max_halvings: 4, first_ratio_limit: 0.5 }
    }
}

impl PicardOptions {
    pub(crate) fn window_levels(&self, nt: usize, dt: f64, horizon: f64) -> Result<usize> {
        if !(self.tol > 0.0) || self.max_iter == 0 {
            return Err(TicError::usage("picard tolerance must be positive and max_iter at least 1"));
        }
        let delta = self.delta.unwrap_or(horizon / 8.0);
        if !(delta > 0.0) || delta > horizon * (1.0 + 1e-12) {
            return Err(TicError::usage(format!("window length {delta} must lie in (0, T]")));
        }
        let levels = delta / dt;
        let rounded = levels.round();
        if self.delta.is_some() && (levels - rounded).abs() > 1e-9 * levels.max(1.0) {
            return Err(TicError::usage(format!("window length {delta} is not a multiple of dt = {dt}")));
        }
        Ok((rounded as usize).clamp(1, nt))
    }
}

pub(crate) enum Attempt {
    Converged(Vec<f64>),
    Rejected(Vec<f64>),
}

/// Sup|Δv| + sup|Δv_x| over a stack of rows.
pub(crate) fn iterate_distance(old: &[Vec<f64>], new: &[Vec<f64>], dx: f64) -> f64 {
    let (mut dv, mut dp) = (0.0f64, 0.0f64);
    for (a, b) in old.iter().zip(new) {
        let (ga, gb) = (gradient(a, dx), gradient(b, dx));
        for i in 0..a.len() {
            dv = dv.max((a[i] - b[i]).abs());
            dp = dp.max((ga[i] - gb[i]).abs());
        }
    }
    dv + dp
}

/// Windowed fixed-point iteration of v ↦ V on the diagonal.
///
/// Windows [T−δ, T], [T−2δ, T−δ], … are solved in turn. Inside a window the
/// strategy for step n is the argmin against v(t_{n+1}) with τ = t_{n+1};
/// each slice with τ in the window is then re-solved under it and its value
/// at t = τ becomes the next iterate of v. The iterate starts from the
/// frozen-τ HJB solution of the window's oldest slice.
pub fn picard_window_solve(stepper: &Stepper, opts: &PicardOptions) -> Result<EquilibriumSolution> {
    require_sigma_control_free(stepper.spec())?;
    let grid = *stepper.grid();
    let spec = stepper.spec();
    let (nx, nt) = (grid.nx, grid.nt);
    let window = opts.window_levels(nt, grid.dt(), grid.horizon)?;

    let mut slices: Vec<SliceRows> = (0..nt).map(|l| SliceRows::terminal(spec, &grid, l)).collect();
    let top: Vec<f64> = grid.xs().iter().map(|&x| spec.h(grid.horizon, x)).collect();
    let mut strategy = vec![0.0; (nt + 1) * nx];
    stepper.argmin_row(slices[nt - 1].tau, grid.t(nt), slices[nt - 1].row(nt), &mut strategy[nt * nx..]);

    let mut logs = Vec::new();
    let mut iterations = 0;
    let mut nb = nt;
    while nb > 0 {
        let mut len = window.min(nb);
        let mut halvings = 0;
        let mut rejected = Vec::new();
        let diffs = loop {
            let na = nb - len;
            let front = if nb == nt { top.clone() } else { slices[nb].row(nb).to_vec() };
            let may_halve = len > 1 && halvings < opts.max_halvings;
            match attempt(stepper, opts, &mut slices, &mut strategy, &front, na, nb, may_halve)? {
                Attempt::Converged(d) => break d,
                Attempt::Rejected(d) => {
                    log::debug!("picard window [{}, {}] halved after diffs {:?}", grid.t(na), grid.t(nb), d);
                    rejected.push(d);
                    halvings += 1;
                    len = (len / 2).max(1);
                }
            }
        };
        let na = nb - len;
        iterations += diffs.len();
        let u = strategy[na * nx..nb * nx].to_vec();
        slices[..na].par_iter_mut().try_for_each(|s| {
            let tau = s.tau;
            for n in (na..nb).rev() {
                let (out, next) = s.step_pair(n);
                stepper.policy_step(tau, n, next, &u[(n - na) * nx..(n - na + 1) * nx], out)?;
            }
            Ok::<_, TicError>(())
        })?;
        log::debug!("picard window [{}, {}]: {} iterations", grid.t(na), grid.t(nb), diffs.len());
        logs.push(WindowLog { t_start: grid.t(na), t_end: grid.t(nb), levels: len, diffs, rejected });
        nb = na;
    }

    let fields = slices.into_iter().map(|s| s.into_field(grid)).collect::<Result<Vec<_>>>()?;
    let theta = Field3D::new(grid, (0..nt).collect(), fields)?;
    let value = theta.diagonal()?;
    let strategy = Field2D::new(grid, 0, nt, strategy)?;
    let (residual, truncation_estimate) = checker_residual(spec, &theta, &strategy)?;
    Ok(EquilibriumSolution {
        theta,
        strategy,
        value,
        method: Method::Picard,
        residual,
        truncation_estimate,
        iterations,
        logs,
    })
}

#[allow(clippy::too_many_arguments)]
fn attempt(
    stepper: &Stepper,
    opts: &PicardOptions,
    slices: &mut [SliceRows],
    strategy: &mut [f64],
    front: &[f64],
    na: usize,
    nb: usize,
    may_halve: bool,
) -> Result<Attempt> {
    let grid = *stepper.grid();
    let (nx, dx) = (grid.nx, grid.dx());
    let (naive, _) = stepper.hjb(slices[na].tau, na, nb, slices[na].row(nb))?;
    let mut v: Vec<Vec<f64>> = (na..nb).map(|n| naive.row(n).to_vec()).collect();
    let mut diffs = Vec::new();
    loop {
        for n in na..nb {
            let data = if n + 1 == nb { front } else { &v[n + 1 - na] };
            let t = grid.t(n + 1);
            stepper.argmin_row(t, t, data, &mut strategy[n * nx..(n + 1) * nx]);
        }
        let u = &strategy[na * nx..nb * nx];
        slices[na..nb].par_iter_mut().try_for_each(|s| {
            let tau = s.tau;
            for n in (s.level..nb).rev() {
                let (out, next) = s.step_pair(n);
                stepper.policy_step(tau, n, next, &u[(n - na) * nx..(n - na + 1) * nx], out)?;
            }
            Ok::<_, TicError>(())
        })?;
        let fresh: Vec<Vec<f64>> = (na..nb).map(|n| slices[n].row(n).to_vec()).collect();
        let d = iterate_distance(&v, &fresh, dx);
        diffs.push(d);
        v = fresh;
        if d < opts.tol {
            return Ok(Attempt::Converged(diffs));
        }
        if may_halve && diffs.len() == 2 && diffs[1] > opts.first_ratio_limit * diffs[0] {
            return Ok(Attempt::Rejected(diffs));
        }
        if diffs.len() >= opts.max_iter {
            if may_halve {
                return Ok(Attempt::Rejected(diffs));
            }
            return Err(TicError::NonContraction { t_start: grid.t(na), t_end: grid.t(nb), diffs });
        }
    }
}
