use std::f64::consts::{PI, SQRT_2};

use rayon::prelude::*;

use super::{checker_residual, require_sigma_control_free, EquilibriumSolution, Method, PicardOptions, WindowLog};
use crate::discretization::{gradient, Field2D, Field3D, Grid};
use crate::error::{Result, TicError};
use crate::pde::SchemeConfig;
use crate::problem::ProblemSpec;

/// Gaussian weights beyond this many standard deviations are dropped.
const CUTOFF: f64 = 8.5;
const TAIL_MASS_LIMIT: f64 = 1e-8;

fn std_cdf(z: f64) -> f64 {
    0.5 * libm::erfc(-z / SQRT_2)
}

fn std_pdf(z: f64) -> f64 {
    if z.is_infinite() {
        0.0
    } else {
        (-0.5 * z * z).exp() / (2.0 * PI).sqrt()
    }
}

/// Φ(b) − Φ(a) without cancellation in either tail.
fn mass(a: f64, b: f64) -> f64 {
    if a >= 0.0 {
        0.5 * (libm::erfc(a / SQRT_2) - libm::erfc(b / SQRT_2))
    } else if b <= 0.0 {
        0.5 * (libm::erfc(-b / SQRT_2) - libm::erfc(-a / SQRT_2))
    } else {
        1.0 - std_cdf(a) - 0.5 * libm::erfc(b / SQRT_2)
    }
}

fn z_pdf(z: f64) -> f64 {
    if z.is_infinite() {
        0.0
    } else {
        z * std_pdf(z)
    }
}

/// Moments (∫N, ∫(y−μ)N, ∫(y−μ)²N) of N(μ, s²) over [α, β].
fn moments(alpha: f64, beta: f64, mu: f64, s: f64) -> (f64, f64, f64) {
    let (a, b) = ((alpha - mu) / s, (beta - mu) / s);
    let i0 = mass(a, b);
    let i1 = s * (std_pdf(a) - std_pdf(b));
    let j2 = s * s * (i0 + z_pdf(a) - z_pdf(b));
    (i0, i1, j2)
}

/// E[frac(rZ)(1 − frac(rZ))] for standard normal Z: the mean of the hat
/// interpolant's error factor under a Gaussian of width r cells.
pub fn hat_bias_factor(r: f64) -> f64 {
    if r <= 0.0 {
        return 0.0;
    }
    if r >= 0.1 {
        let mut acc = 1.0 / 6.0;
        for k in 1..200 {
            let k = k as f64;
            let term = (-2.0 * PI * PI * k * k * r * r).exp() / (PI * PI * k * k);
            acc -= term;
            if term < 1e-20 {
                break;
            }
        }
        return acc;
    }
    let reach = (CUTOFF * r).ceil() as i64 + 1;
    let mut acc = 0.0;
    for c in -reach..reach {
        let c = c as f64;
        let (i0, i1, j2) = moments(c, c + 1.0, 0.0, r);
        acc -= j2 - (2.0 * c + 1.0) * i1 + c * (c + 1.0) * i0;
    }
    acc
}

#[derive(Debug, Clone)]
struct BandRow {
    start: usize,
    w: Vec<f64>,
}

impl BandRow {
    #[inline]
    fn dot(&self, f: &[f64]) -> f64 {
        self.w.iter().zip(&f[self.start..]).map(|(w, v)| w * v).sum()
    }
}

#[derive(Debug, Clone)]
struct Lag {
    w: Vec<BandRow>,
    d: Vec<BandRow>,
}

/// Heat-kernel quadrature on a uniform grid.
///
/// For lag m ≥ 1, row i of W_m integrates the piecewise-linear interpolant
/// of a grid function (continued linearly past both ends) against the
/// Gaussian N(x_i, 2a·m·dt); D_m is its x_i-derivative. Both are composed
/// with I − (dx²β_m/2)·δ², removing the interpolation bias so that
/// quadratics are reproduced exactly. W_0 is the identity and D_0 the
/// second-order finite-difference gradient.
#[derive(Debug, Clone)]
pub struct KernelWeights {
    grid: Grid,
    lags: Vec<Lag>,
}

impl KernelWeights {
    pub fn new(grid: &Grid, a: f64, max_lag: usize) -> Result<Self> {
        if !(a > 0.0) || !a.is_finite() {
            return Err(TicError::unsupported("the heat kernel needs a positive constant diffusion"));
        }
        let grid = *grid;
        let lags = (0..=max_lag).map(|m| Self::lag(&grid, a, m)).collect();
        Ok(KernelWeights { grid, lags })
    }

    pub fn max_lag(&self) -> usize {
        self.lags.len() - 1
    }

    fn lag(grid: &Grid, a: f64, m: usize) -> Lag {
        let (nx, dx) = (grid.nx, grid.dx());
        if m == 0 {
            let w = (0..nx).map(|i| BandRow { start: i, w: vec![1.0] }).collect();
            let h = 0.5 / dx;
            let d = (0..nx)
                .map(|i| {
                    if i == 0 {
                        BandRow { start: 0, w: vec![-3.0 * h, 4.0 * h, -h] }
                    } else if i + 1 == nx {
                        BandRow { start: nx - 3, w: vec![h, -4.0 * h, 3.0 * h] }
                    } else {
                        BandRow { start: i - 1, w: vec![-h, 0.0, h] }
                    }
                })
                .collect();
            return Lag { w, d };
        }
        let s = (2.0 * a * m as f64 * grid.dt()).sqrt();
        let kappa = 0.5 * hat_bias_factor(s / dx);
        let mut w_rows = Vec::with_capacity(nx);
        let mut d_rows = Vec::with_capacity(nx);
        let mut raw_w = vec![0.0; nx];
        let mut raw_d = vec![0.0; nx];
        for i in 0..nx {
            let mu = grid.x(i);
            raw_w.iter_mut().for_each(|v| *v = 0.0);
            raw_d.iter_mut().for_each(|v| *v = 0.0);
            let lo_cell = (((mu - CUTOFF * s - grid.x_lo) / dx).floor().max(0.0) as usize).min(nx - 2);
            let hi_cell = (((mu + CUTOFF * s - grid.x_lo) / dx).ceil().max(0.0) as usize).min(nx - 2);
            for c in lo_cell..=hi_cell {
                let alpha = if c == 0 { f64::NEG_INFINITY } else { grid.x(c) };
                let beta = if c == nx - 2 { f64::INFINITY } else { grid.x(c + 1) };
                let (i0, i1, j2) = moments(alpha, beta, mu, s);
                for (j, node, sign) in [(c, grid.x(c + 1), -1.0), (c + 1, grid.x(c), 1.0)] {
                    let shift = mu - node;
                    raw_w[j] += sign * (i1 + shift * i0) / dx;
                    raw_d[j] += sign * (j2 + shift * i1) / (s * s * dx);
                }
            }
            let lo = lo_cell;
            let hi = hi_cell + 1;
            w_rows.push(Self::corrected(&raw_w, lo, hi, kappa, nx));
            d_rows.push(Self::corrected(&raw_d, lo, hi, kappa, nx));
        }
        Lag { w: w_rows, d: d_rows }
    }

    /// row·(I − κδ²) for the unscaled second difference δ², copied inward at the end nodes.
    fn corrected(raw: &[f64], lo: usize, hi: usize, kappa: f64, nx: usize) -> BandRow {
        let new_lo = lo.saturating_sub(1);
        let new_hi = (hi + 1).min(nx - 1);
        let mut w: Vec<f64> = raw[new_lo..=new_hi].to_vec();
        if kappa != 0.0 {
            for (k, &rk) in raw.iter().enumerate().take(hi + 1).skip(lo) {
                if rk == 0.0 {
                    continue;
                }
                let centre = k.clamp(1, nx - 2);
                w[centre - 1 - new_lo] -= kappa * rk;
                w[centre - new_lo] += 2.0 * kappa * rk;
                w[centre + 1 - new_lo] -= kappa * rk;
            }
        }
        BandRow { start: new_lo, w }
    }

    /// Entry (i, j) of W_lag.
    pub fn weight(&self, lag: usize, i: usize, j: usize) -> f64 {
        let row = &self.lags[lag].w[i];
        j.checked_sub(row.start).and_then(|k| row.w.get(k)).copied().unwrap_or(0.0)
    }

    pub fn apply(&self, lag: usize, f: &[f64], out: &mut [f64]) {
        for (o, row) in out.iter_mut().zip(&self.lags[lag].w) {
            *o = row.dot(f);
        }
    }

    pub fn apply_derivative(&self, lag: usize, f: &[f64], out: &mut [f64]) {
        for (o, row) in out.iter_mut().zip(&self.lags[lag].d) {
            *o = row.dot(f);
        }
    }

    fn accumulate(&self, lag: usize, scale: f64, f: &[f64], acc: &mut [f64], acc_x: &mut [f64]) {
        let l = &self.lags[lag];
        for i in 0..self.grid.nx {
            acc[i] += scale * l.w[i].dot(f);
            acc_x[i] += scale * l.d[i].dot(f);
        }
    }
}

/// Value, gradient and generator rows of one slice on levels τ..=nt.
struct KernelSlice {
    level: usize,
    tau: f64,
    theta: Vec<Vec<f64>>,
    theta_x: Vec<Vec<f64>>,
    f: Vec<Vec<f64>>,
}

struct Ctx<'a> {
    spec: &'a ProblemSpec,
    grid: Grid,
    sigma: f64,
    weights: &'a KernelWeights,
}

impl Ctx<'_> {
    fn source(&self, tau: f64, n: usize, controls: &[f64], theta: &[f64], theta_x: &[f64], out: &mut [f64]) -> Result<()> {
        let t = self.grid.t(n);
        for i in 0..self.grid.nx {
            let (x, u) = (self.grid.x(i), controls[i]);
            let v = self.spec.b(t, x, u) * theta_x[i] + self.spec.g(tau, t, x, u, theta[i], theta_x[i] * self.sigma);
            if !v.is_finite() {
                return Err(TicError::NumericalBlowup {
                    time_index: n,
                    node: i,
                    detail: format!("non-finite integrand {v} at (τ, t, x) = ({tau}, {t}, {x})"),
                });
            }
            out[i] = v;
        }
        Ok(())
    }

    /// Backward sweep of the restarted Duhamel sums from level `nb` to
    /// `lo`, with the lag-0 trapezoid term resolved by local iteration.
    fn sweep(&self, s: &mut KernelSlice, controls: &[Vec<f64>], na: usize, lo: usize, nb: usize) -> Result<()> {
        let (nx, dt) = (self.grid.nx, self.grid.dt());
        let k = |n: usize| n - s.level;
        let (th_b, thx_b) = (s.theta[k(nb)].clone(), s.theta_x[k(nb)].clone());
        let mut f_b = vec![0.0; nx];
        self.source(s.tau, nb, &controls[nb - na], &th_b, &thx_b, &mut f_b)?;
        s.f[k(nb)] = f_b;
        let mut base = vec![0.0; nx];
        let mut base_x = vec![0.0; nx];
        let mut th = vec![0.0; nx];
        let mut thx = vec![0.0; nx];
        let mut f = vec![0.0; nx];
        for n in (lo..nb).rev() {
            let lag = nb - n;
            self.weights.apply(lag, &th_b, &mut base);
            self.weights.apply(lag, &thx_b, &mut base_x);
            for m in n + 1..=nb {
                let c = if m == nb { 0.5 * dt } else { dt };
                self.weights.accumulate(m - n, c, &s.f[k(m)], &mut base, &mut base_x);
            }
            th.copy_from_slice(&s.theta[k(n + 1)]);
            thx.copy_from_slice(&s.theta_x[k(n + 1)]);
            let mut converged = false;
            for _ in 0..200 {
                self.source(s.tau, n, &controls[n - na], &th, &thx, &mut f)?;
                let fx = gradient(&f, self.grid.dx());
                let mut change = 0.0f64;
                for i in 0..nx {
                    let a = base[i] + 0.5 * dt * f[i];
                    let b = base_x[i] + 0.5 * dt * fx[i];
                    change = change.max((a - th[i]).abs()).max((b - thx[i]).abs());
                    th[i] = a;
                    thx[i] = b;
                }
                if change <= 1e-14 * (1.0 + th.iter().fold(0.0f64, |m, v| m.max(v.abs()))) {
                    converged = true;
                    break;
                }
            }
            if !converged {
                return Err(TicError::NonContraction {
                    t_start: self.grid.t(n),
                    t_end: self.grid.t(n + 1),
                    diffs: vec![],
                });
            }
            self.source(s.tau, n, &controls[n - na], &th, &thx, &mut f)?;
            s.theta[k(n)].copy_from_slice(&th);
            s.theta_x[k(n)].copy_from_slice(&thx);
            s.f[k(n)].copy_from_slice(&f);
        }
        Ok(())
    }

    fn controls(&self, n: usize, v: &[f64], vx: &[f64], grid_u: &[f64], out: &mut [f64]) -> Result<()> {
        let t = self.grid.t(n);
        for i in 0..self.grid.nx {
            out[i] = self.spec.psi_argmin(t, t, self.grid.x(i), v[i], vx[i], 0.0, grid_u)?;
        }
        Ok(())
    }
}

/// Windowed Picard iteration on the integral form of each slice.
///
/// Each slice is Θ(τ,t) = Γ(T−t)∗h(τ) + ∫_t^T Γ(s−t)∗F(τ,s) ds with Γ the
/// heat kernel of the constant diffusion and F = b(𝕦)Θ_x + g(τ,s,y,𝕦,Θ,Θ_xσ);
/// its gradient carries the kernel derivative. The strategy is the argmin
/// of the first-order Hamiltonian (second-order term dropped, since it does
/// not depend on u) against the diagonal on each level. Windows restart the
/// sums from their right end, so only lags up to one window are needed.
pub fn kernel_picard_solve(spec: &ProblemSpec, grid: &Grid, scheme: &SchemeConfig, opts: &PicardOptions) -> Result<EquilibriumSolution> {
    require_sigma_control_free(spec)?;
    if (grid.horizon - spec.horizon).abs() > 1e-12 * spec.horizon.max(1.0) {
        return Err(TicError::usage(format!("grid horizon {} differs from problem horizon {}", grid.horizon, spec.horizon)));
    }
    let sigma = spec
        .constant_sigma(grid.x_lo, grid.x_hi)
        .ok_or_else(|| TicError::unsupported("the kernel route needs a constant diffusion coefficient"))?;
    if sigma == 0.0 {
        return Err(TicError::unsupported("the kernel route needs a nonzero diffusion coefficient"));
    }
    let a = 0.5 * sigma * sigma;
    let (nx, nt, dx) = (grid.nx, grid.nt, grid.dx());
    let spread = (2.0 * a * grid.horizon).sqrt();
    for i in grid.inner_nodes(0.5) {
        let x = grid.x(i);
        let tail = std_cdf((grid.x_lo - x) / spread) + std_cdf((x - grid.x_hi) / spread);
        if tail > TAIL_MASS_LIMIT {
            return Err(TicError::domain(format!(
                "x-domain [{}, {}] too small for the heat kernel: tail mass {tail:.3e} at x = {x} exceeds {TAIL_MASS_LIMIT:e}",
                grid.x_lo, grid.x_hi
            )));
        }
    }
    let window = opts.window_levels(nt, grid.dt(), grid.horizon)?;
    let weights = KernelWeights::new(grid, a, window)?;
    let ctx = Ctx { spec, grid: *grid, sigma, weights: &weights };
    let grid_u = spec.controls.grid(scheme.control_points);

    let mut slices: Vec<KernelSlice> = (0..nt)
        .map(|l| {
            let tau = grid.t(l);
            let rows = nt - l + 1;
            let h: Vec<f64> = grid.xs().iter().map(|&x| spec.h(tau, x)).collect();
            let mut theta = vec![vec![0.0; nx]; rows];
            let mut theta_x = vec![vec![0.0; nx]; rows];
            theta_x[rows - 1] = gradient(&h, dx);
            theta[rows - 1] = h;
            KernelSlice { level: l, tau, theta, theta_x, f: vec![vec![0.0; nx]; rows] }
        })
        .collect();
    let top: Vec<f64> = grid.xs().iter().map(|&x| spec.h(grid.horizon, x)).collect();
    let top_x = gradient(&top, dx);
    let mut strategy = vec![vec![0.0; nx]; nt + 1];
    ctx.controls(nt, &top, &top_x, &grid_u, &mut strategy[nt])?;

    let mut logs = Vec::new();
    let mut iterations = 0;
    let mut nb = nt;
    while nb > 0 {
        let (front, front_x) = if nb == nt {
            (top.clone(), top_x.clone())
        } else {
            let s = &slices[nb];
            (s.theta[0].clone(), s.theta_x[0].clone())
        };
        let mut len = window.min(nb);
        let mut halvings = 0;
        let mut rejected = Vec::new();
        let (diffs, controls) = loop {
            let na = nb - len;
            let may_halve = len > 1 && halvings < opts.max_halvings;
            let mut controls = vec![strategy[nb].clone(); len + 1];
            let mut v = vec![front.clone(); len];
            let mut vx = vec![front_x.clone(); len];
            let mut diffs = Vec::new();
            let outcome = loop {
                for n in na..nb {
                    ctx.controls(n, &v[n - na], &vx[n - na], &grid_u, &mut controls[n - na])?;
                }
                slices[na..nb].par_iter_mut().try_for_each(|s| {
                    let lo = s.level;
                    ctx.sweep(s, &controls, na, lo, nb)
                })?;
                let fresh: Vec<Vec<f64>> = (na..nb).map(|n| slices[n].theta[0].clone()).collect();
                let fresh_x: Vec<Vec<f64>> = (na..nb).map(|n| slices[n].theta_x[0].clone()).collect();
                let d = sup_diff_rows(&v, &fresh) + sup_diff_rows(&vx, &fresh_x);
                diffs.push(d);
                v = fresh;
                vx = fresh_x;
                if d < opts.tol {
                    break Ok(());
                }
                if may_halve && diffs.len() == 2 && diffs[1] > opts.first_ratio_limit * diffs[0] {
                    break Err(true);
                }
                if diffs.len() >= opts.max_iter {
                    break Err(may_halve);
                }
            };
            match outcome {
                Ok(()) => break (diffs, controls),
                Err(true) => {
                    log::debug!("kernel window [{}, {}] halved after diffs {:?}", grid.t(na), grid.t(nb), diffs);
                    rejected.push(diffs);
                    halvings += 1;
                    len = (len / 2).max(1);
                }
                Err(false) => {
                    return Err(TicError::NonContraction { t_start: grid.t(na), t_end: grid.t(nb), diffs });
                }
            }
        };
        let na = nb - len;
        iterations += diffs.len();
        strategy[na..nb].clone_from_slice(&controls[..nb - na]);
        slices[..na].par_iter_mut().try_for_each(|s| ctx.sweep(s, &controls, na, na, nb))?;
        logs.push(WindowLog { t_start: grid.t(na), t_end: grid.t(nb), levels: len, diffs, rejected });
        nb = na;
    }

    let fields = slices
        .into_iter()
        .map(|s| Field2D::new(*grid, s.level, nt, s.theta.concat()))
        .collect::<Result<Vec<_>>>()?;
    let theta = Field3D::new(*grid, (0..nt).collect(), fields)?;
    let value = theta.diagonal()?;
    let strategy = Field2D::new(*grid, 0, nt, strategy.concat())?;
    let (residual, truncation_estimate) = checker_residual(spec, &theta, &strategy)?;
    Ok(EquilibriumSolution {
        theta,
        strategy,
        value,
        method: Method::KernelPicard,
        residual,
        truncation_estimate,
        iterations,
        logs,
    })
}

fn sup_diff_rows(a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
    a.iter()
        .zip(b)
        .flat_map(|(x, y)| x.iter().zip(y).map(|(p, q)| (p - q).abs()))
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use proptest::prelude::*;

    use super::*;
    use crate::problem::{preset, ControlSet};

    fn heat_spec(sigma: f64, lo: f64, hi: f64) -> ProblemSpec {
        ProblemSpec {
            name: "heat".into(),
            drift: Arc::new(|_, _, _| 0.0),
            diffusion: Arc::new(move |_, _, _| sigma),
            generator: Arc::new(|_, _, _, _, _, _| 0.0),
            terminal: Arc::new(|_, x| x * x),
            controls: ControlSet::interval(lo, hi).unwrap(),
            horizon: 1.0,
            sigma_control_free: true,
            lipschitz: 1.0,
        }
    }

    #[test]
    fn bias_factor_branches_agree() {
        for r in [0.05, 0.0999, 0.1, 0.2, 0.4] {
            let reach = (CUTOFF * r).ceil() as i64 + 1;
            let direct: f64 = (-reach..reach)
                .map(|c| {
                    let c = c as f64;
                    let (i0, i1, j2) = moments(c, c + 1.0, 0.0, r);
                    -(j2 - (2.0 * c + 1.0) * i1 + c * (c + 1.0) * i0)
                })
                .sum();
            assert!((direct - hat_bias_factor(r)).abs() < 1e-12, "r = {r}");
        }
        assert!((hat_bias_factor(3.0) - 1.0 / 6.0).abs() < 1e-15);
        assert_eq!(hat_bias_factor(0.0), 0.0);
    }

    proptest! {
        /// Source nodes j = 0, 1 and nx-2, nx-1 also carry the linear continuation
        /// past the domain ends, so only the other nodes discretize the heat kernel.
        #[test]
        fn discrete_kernel_obeys_gaussian_bound(lag in 1usize..=32, i in 0usize..121, j in 2usize..119) {
            static KW: std::sync::OnceLock<KernelWeights> = std::sync::OnceLock::new();
            let grid = Grid::new(-3.0, 3.0, 121, 128, 1.0).unwrap();
            let a = 0.08;
            let kw = KW.get_or_init(|| KernelWeights::new(&grid, a, 32).unwrap());
            let s = lag as f64 * grid.dt();
            let d = grid.x(i) - grid.x(j);
            let lambda = 0.5 / a;
            let k = 2.0 / (4.0 * PI * a).sqrt();
            let bound = k * (-lambda * d * d / (4.0 * s)).exp() / s.sqrt();
            prop_assert!(kw.weight(lag, i, j).abs() / grid.dx() <= bound);
        }
    }

    #[test]
    fn quadratics_are_reproduced() {
        let grid = Grid::new(-5.0, 5.0, 101, 64, 1.0).unwrap();
        let a = 0.08;
        let kw = KernelWeights::new(&grid, a, 16).unwrap();
        let f: Vec<f64> = grid.xs().iter().map(|x| x * x - 0.5 * x + 1.0).collect();
        let mut out = vec![0.0; 101];
        let mut out_d = vec![0.0; 101];
        for m in [1usize, 3, 16] {
            let var = 2.0 * a * m as f64 * grid.dt();
            kw.apply(m, &f, &mut out);
            kw.apply_derivative(m, &f, &mut out_d);
            for i in grid.inner_nodes(0.5) {
                let x = grid.x(i);
                assert!((out[i] - (x * x - 0.5 * x + 1.0 + var)).abs() < 1e-12, "m={m} i={i}");
                assert!((out_d[i] - (2.0 * x - 0.5)).abs() < 1e-11, "m={m} i={i}");
            }
        }
    }

    #[test]
    fn weights_integrate_gaussian_smoothing() {
        let grid = Grid::new(-6.0, 6.0, 241, 64, 1.0).unwrap();
        let a = 0.125;
        let kw = KernelWeights::new(&grid, a, 8).unwrap();
        let f: Vec<f64> = grid.xs().iter().map(|x| x.cos()).collect();
        let mut out = vec![0.0; 241];
        let var = 2.0 * a * 8.0 * grid.dt();
        kw.apply(8, &f, &mut out);
        for i in grid.inner_nodes(0.5) {
            let exact = grid.x(i).cos() * (-0.5 * var).exp();
            assert!((out[i] - exact).abs() < 1e-6, "{} vs {exact}", out[i]);
        }
    }

    #[test]
    fn heat_equation_with_quadratic_terminal() {
        let spec = heat_spec(0.3, -1.0, 1.0);
        let grid = Grid::new(-8.0, 8.0, 81, 32, 1.0).unwrap();
        let sol = kernel_picard_solve(&spec, &grid, &SchemeConfig::default(), &PicardOptions::default()).unwrap();
        for s in sol.theta.slices() {
            for n in s.start()..=32 {
                for i in grid.inner_nodes(0.5) {
                    let exact = grid.x(i).powi(2) + 0.09 * (1.0 - grid.t(n));
                    assert!((s.at(n, i) - exact).abs() < 1e-10);
                }
            }
        }
    }

    #[test]
    fn tau_free_lq_matches_riccati() {
        let p = preset("tau-free", &[]).unwrap();
        let oracle = p.oracle.unwrap().riccati();
        let grid = Grid::new(-5.0, 5.0, 101, 64, 1.0).unwrap();
        let sol = kernel_picard_solve(&p.spec, &grid, &SchemeConfig::default(), &PicardOptions::default()).unwrap();
        for n in [0usize, 32, 63] {
            for i in grid.inner_nodes(0.5) {
                let err = (sol.value.at(n, i) - oracle.value(grid.t(n), grid.x(i))).abs();
                assert!(err < 5e-3, "n={n} x={} err={err}", grid.x(i));
            }
        }
        assert!(sol.logs.iter().all(|l| *l.diffs.last().unwrap() < 1e-10));
    }

    #[test]
    fn small_domain_is_rejected() {
        let spec = heat_spec(1.0, -1.0, 1.0);
        let grid = Grid::new(-1.0, 1.0, 21, 16, 1.0).unwrap();
        let err = kernel_picard_solve(&spec, &grid, &SchemeConfig::default(), &PicardOptions::default()).unwrap_err();
        assert!(matches!(err, TicError::Domain(_)), "{err}");
    }

    #[test]
    fn state_dependent_diffusion_is_unsupported() {
        let mut spec = heat_spec(0.3, -1.0, 1.0);
        spec.diffusion = Arc::new(|_, x, _| 0.3 + 0.01 * x);
        let grid = Grid::new(-8.0, 8.0, 81, 32, 1.0).unwrap();
        let err = kernel_picard_solve(&spec, &grid, &SchemeConfig::default(), &PicardOptions::default()).unwrap_err();
        assert_eq!(err.exit_code(), 4);
    }
}
