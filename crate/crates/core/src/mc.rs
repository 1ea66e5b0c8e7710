//! Monte-Carlo checks of the value fields: closed-loop Euler–Maruyama paths
//! and direct estimates of recursive costs for the two generator shapes
//! whose backward equation integrates in closed form.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::discretization::{Field2D, Field3D};
use crate::error::{Result, TicError};
use crate::problem::ProblemSpec;

/// Paths per RNG stream; stream index = block index.
pub const BLOCK: usize = 1024;
const EXIT_LIMIT: f64 = 0.01;

#[derive(Debug, Clone, Copy, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct SimOptions {
    /// Euler steps from the start time to T; `None` follows the strategy grid.
    pub steps: Option<usize>,
    /// Turn the boundary-exit warning into an error.
    pub strict: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PathBundle {
    pub times: Vec<f64>,
    pub n_paths: usize,
    /// Row-major n_paths × (steps+1).
    pub states: Vec<f64>,
    /// Row-major n_paths × steps; control applied on [t_j, t_{j+1}).
    pub controls: Vec<f64>,
    /// Row-major n_paths × steps.
    pub increments: Vec<f64>,
    /// Paths that hit the domain boundary and were frozen there.
    pub exited: Vec<bool>,
    pub seed: u64,
}

impl PathBundle {
    pub fn steps(&self) -> usize {
        self.times.len() - 1
    }

    pub fn state(&self, path: usize, j: usize) -> f64 {
        self.states[path * (self.steps() + 1) + j]
    }

    pub fn control(&self, path: usize, j: usize) -> f64 {
        self.controls[path * self.steps() + j]
    }

    pub fn increment(&self, path: usize, j: usize) -> f64 {
        self.increments[path * self.steps() + j]
    }

    pub fn exit_fraction(&self) -> f64 {
        self.exited.iter().filter(|&&e| e).count() as f64 / self.n_paths as f64
    }

    pub fn path_states(&self, path: usize) -> &[f64] {
        let w = self.steps() + 1;
        &self.states[path * w..(path + 1) * w]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CostMode {
    GFreeOfYz,
    YLinear,
}

impl std::str::FromStr for CostMode {
    type Err = TicError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "g-free-of-yz" => Ok(CostMode::GFreeOfYz),
            "y-linear" => Ok(CostMode::YLinear),
            other => Err(TicError::usage(format!("unknown cost mode `{other}`; use g-free-of-yz or y-linear"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McReport {
    pub estimate: f64,
    pub std_error: f64,
    pub n_paths: usize,
    pub target: String,
    pub seed: u64,
    pub mode: CostMode,
    pub exit_fraction: f64,
}

impl McReport {
    /// (a − b)/√(se_a² + se_b²).
    pub fn z_against(&self, other: &McReport) -> f64 {
        z_score(self.estimate - other.estimate, self.std_error.hypot(other.std_error))
    }
}

fn z_score(diff: f64, se: f64) -> f64 {
    if se > 0.0 {
        diff / se
    } else if diff == 0.0 {
        0.0
    } else {
        diff.signum() * f64::INFINITY
    }
}

/// Bilinear interpolation of a strategy field in (t, x), clamped to its box.
pub fn strategy_at(strategy: &Field2D, t: f64, x: f64) -> f64 {
    let grid = strategy.grid();
    let s = ((t / grid.dt()) - strategy.start() as f64).clamp(0.0, (strategy.end() - strategy.start()) as f64);
    let n = (s.floor() as usize + strategy.start()).min(strategy.end().saturating_sub(1).max(strategy.start()));
    let w = s - (n - strategy.start()) as f64;
    let lo = strategy.interp_x(n, x);
    if w <= 0.0 || n >= strategy.end() {
        return lo;
    }
    (1.0 - w) * lo + w * strategy.interp_x(n + 1, x)
}

/// Closed-loop paths from (0, x0); x0 must lie in the inner half of the
/// strategy's spatial domain.
pub fn simulate_closed_loop(spec: &ProblemSpec, strategy: &Field2D, x0: f64, n_paths: usize, seed: u64) -> Result<PathBundle> {
    let grid = strategy.grid();
    let quarter = 0.25 * (grid.x_hi - grid.x_lo);
    if x0 < grid.x_lo + quarter - 1e-12 || x0 > grid.x_hi - quarter + 1e-12 {
        return Err(TicError::usage(format!(
            "x0 = {x0} is outside the inner half [{}, {}] of the domain",
            grid.x_lo + quarter,
            grid.x_hi - quarter
        )));
    }
    simulate_from(spec, strategy, 0.0, &[x0], n_paths, seed, &SimOptions::default())
}

/// Euler–Maruyama paths from time t0 under the frozen feedback `strategy`.
///
/// Path p starts at `starts[p % starts.len()]`. Paths leaving [x_lo, x_hi]
/// are frozen on the boundary and flagged.
pub fn simulate_from(
    spec: &ProblemSpec,
    strategy: &Field2D,
    t0: f64,
    starts: &[f64],
    n_paths: usize,
    seed: u64,
    opts: &SimOptions,
) -> Result<PathBundle> {
    let grid = *strategy.grid();
    if n_paths == 0 || starts.is_empty() {
        return Err(TicError::usage("need at least one path and one start point"));
    }
    let horizon = spec.horizon;
    let (t_cov, _) = strategy.time_range();
    if strategy.end() != grid.nt || t0 < t_cov - 1e-12 || t0 >= horizon {
        return Err(TicError::usage(format!(
            "strategy covers [{t_cov}, {}] but paths need [{t0}, {horizon}]",
            grid.t(strategy.end())
        )));
    }
    let steps = opts.steps.unwrap_or_else(|| (((horizon - t0) / grid.dt()).round() as usize).max(1));
    if steps == 0 {
        return Err(TicError::usage("need at least one time step"));
    }
    let dt = (horizon - t0) / steps as f64;
    let sqrt_dt = dt.sqrt();
    let times: Vec<f64> = (0..=steps).map(|j| if j == steps { horizon } else { t0 + j as f64 * dt }).collect();
    let w = steps + 1;

    let mut states = vec![0.0; n_paths * w];
    let mut controls = vec![0.0; n_paths * steps];
    let mut increments = vec![0.0; n_paths * steps];
    let mut exited = vec![false; n_paths];

    states
        .par_chunks_mut(BLOCK * w)
        .zip(controls.par_chunks_mut(BLOCK * steps))
        .zip(increments.par_chunks_mut(BLOCK * steps))
        .zip(exited.par_chunks_mut(BLOCK))
        .enumerate()
        .try_for_each(|(block, (((xs, us), dws), ex))| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(block as u64);
            for (k, flag) in ex.iter_mut().enumerate() {
                let path = block * BLOCK + k;
                let mut x = starts[path % starts.len()];
                xs[k * w] = x;
                for j in 0..steps {
                    let t = times[j];
                    let u = strategy_at(strategy, t, x);
                    let z: f64 = StandardNormal.sample(&mut rng);
                    let dw = sqrt_dt * z;
                    us[k * steps + j] = u;
                    dws[k * steps + j] = dw;
                    if !*flag {
                        let next = x + spec.b(t, x, u) * dt + spec.sigma(t, x, u) * dw;
                        if !next.is_finite() {
                            return Err(TicError::NumericalBlowup {
                                time_index: j,
                                node: path,
                                detail: format!("path state became {next} at t = {t}"),
                            });
                        }
                        if next <= grid.x_lo || next >= grid.x_hi {
                            *flag = true;
                            x = next.clamp(grid.x_lo, grid.x_hi);
                        } else {
                            x = next;
                        }
                    }
                    xs[k * w + j + 1] = x;
                }
            }
            Ok(())
        })?;

    let bundle = PathBundle { times, n_paths, states, controls, increments, exited, seed };
    let frac = bundle.exit_fraction();
    if frac > EXIT_LIMIT {
        let msg = format!("{:.2}% of paths left [{}, {}] and were frozen on the boundary", 100.0 * frac, grid.x_lo, grid.x_hi);
        if opts.strict {
            return Err(TicError::domain(msg));
        }
        log::warn!("{msg}");
    }
    Ok(bundle)
}

/// Generator shape found by probing g at distinct (y, z).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GeneratorShape {
    FreeOfYz,
    /// g = κ·y + g⁰(τ, t, x, u).
    YLinear { kappa: f64 },
    Other,
}

pub fn probe_generator(spec: &ProblemSpec, tau: f64, points: &[(f64, f64, f64)]) -> GeneratorShape {
    const YS: [f64; 4] = [-1.3, 0.0, 0.7, 2.1];
    const ZS: [f64; 3] = [-0.9, 0.0, 1.1];
    let close = |a: f64, b: f64| (a - b).abs() <= 1e-9 * (1.0 + a.abs().max(b.abs()));
    let mut kappa: Option<f64> = None;
    let mut free = true;
    for &(t, x, u) in points {
        let g0 = spec.g(tau, t, x, u, 0.0, 0.0);
        for &z in &ZS {
            if !close(spec.g(tau, t, x, u, 0.0, z), g0) {
                return GeneratorShape::Other;
            }
        }
        let k = spec.g(tau, t, x, u, 1.0, 0.0) - g0;
        for &y in &YS {
            let gy = spec.g(tau, t, x, u, y, 0.0);
            if !close(gy, g0 + k * y) {
                return GeneratorShape::Other;
            }
            for &z in &ZS {
                if !close(spec.g(tau, t, x, u, y, z), gy) {
                    return GeneratorShape::Other;
                }
            }
        }
        if !close(k, 0.0) {
            free = false;
        }
        match kappa {
            None => kappa = Some(k),
            Some(k0) if !close(k0, k) => return GeneratorShape::Other,
            _ => {}
        }
    }
    if free {
        GeneratorShape::FreeOfYz
    } else {
        GeneratorShape::YLinear { kappa: kappa.unwrap_or(0.0) }
    }
}

fn probe_points(spec: &ProblemSpec, bundle: &PathBundle) -> Vec<(f64, f64, f64)> {
    let (lo, hi) = spec.controls.bounds();
    let mut pts = Vec::new();
    let steps = bundle.steps();
    for &frac in &[0.0, 0.37, 0.81] {
        let j = ((steps as f64 * frac) as usize).min(steps - 1);
        let p = (bundle.n_paths - 1).min((bundle.n_paths as f64 * frac) as usize);
        pts.push((bundle.times[j], bundle.state(p, j), bundle.control(p, j)));
    }
    for &(fx, fu) in &[(-1.0, 0.0), (0.5, 1.0), (1.5, 0.25)] {
        pts.push((bundle.times[steps / 2], fx, lo + fu * (hi - lo)));
    }
    pts
}

/// Per-path recursive cost with parameter τ, started at the bundle's first time.
fn path_costs(spec: &ProblemSpec, tau: f64, bundle: &PathBundle, mode: CostMode) -> Result<Vec<f64>> {
    let shape = probe_generator(spec, tau, &probe_points(spec, bundle));
    let kappa = match (mode, shape) {
        (CostMode::GFreeOfYz, GeneratorShape::FreeOfYz) => 0.0,
        (CostMode::YLinear, GeneratorShape::YLinear { kappa }) => kappa,
        (CostMode::YLinear, GeneratorShape::FreeOfYz) => 0.0,
        (_, GeneratorShape::Other) => {
            return Err(TicError::unsupported(
                "the generator depends on (y, z) beyond a constant-rate linear term; use the PDE representation instead",
            ))
        }
        (CostMode::GFreeOfYz, GeneratorShape::YLinear { .. }) => {
            return Err(TicError::unsupported("the generator depends on y; use the y-linear mode"))
        }
    };
    let steps = bundle.steps();
    let t0 = bundle.times[0];
    let times = &bundle.times;
    let weights: Vec<f64> = times.iter().map(|&t| (kappa * (t - t0)).exp()).collect();
    let costs: Vec<f64> = (0..bundle.n_paths)
        .into_par_iter()
        .map(|p| {
            let xs = bundle.path_states(p);
            let mut acc = 0.0;
            for j in 0..steps {
                let dt = times[j + 1] - times[j];
                acc += weights[j] * spec.g(tau, times[j], xs[j], bundle.control(p, j), 0.0, 0.0) * dt;
            }
            acc + weights[steps] * spec.h(tau, xs[steps])
        })
        .collect();
    if let Some(p) = costs.iter().position(|c| !c.is_finite()) {
        return Err(TicError::NumericalBlowup { time_index: steps, node: p, detail: "non-finite path cost".into() });
    }
    Ok(costs)
}

fn mean_and_se(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Mean recursive cost Y(t0) over the bundle's paths.
pub fn recursive_cost_estimate(spec: &ProblemSpec, tau: f64, bundle: &PathBundle, mode: CostMode) -> Result<McReport> {
    let costs = path_costs(spec, tau, bundle, mode)?;
    let (estimate, std_error) = mean_and_se(&costs);
    Ok(McReport {
        estimate,
        std_error,
        n_paths: bundle.n_paths,
        target: format!("Y(t={}; tau={tau}, x0={})", bundle.times[0], bundle.state(0, 0)),
        seed: bundle.seed,
        mode,
        exit_fraction: bundle.exit_fraction(),
    })
}

/// The mode the generator admits, preferring the cheaper g-free-of-yz.
pub fn detect_mode(spec: &ProblemSpec, tau: f64, bundle: &PathBundle) -> Result<CostMode> {
    match probe_generator(spec, tau, &probe_points(spec, bundle)) {
        GeneratorShape::FreeOfYz => Ok(CostMode::GFreeOfYz),
        GeneratorShape::YLinear { .. } => Ok(CostMode::YLinear),
        GeneratorShape::Other => Err(TicError::unsupported(
            "the generator depends on (y, z) beyond a constant-rate linear term; use the PDE representation instead",
        )),
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PathwiseCheck {
    pub s: f64,
    pub restarts: usize,
    pub paths_per_restart: usize,
    /// Mean over restarts of |Θ(τ, s, X_s) − tail-cost estimate|.
    pub mean_abs_gap: f64,
    pub rms_std_error: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FeynmanKacReport {
    pub mc: McReport,
    pub reference: f64,
    pub z_score: f64,
    pub pathwise: PathwiseCheck,
}

pub const RESTARTS: usize = 32;

/// MC estimate of the recursive cost from (τ, x0) under `strategy`, scored
/// against Θ(τ, τ, x0); plus sub-bundle restarts at s = (τ+T)/2 checking
/// Θ(τ, s, X_s) against the conditional tail cost.
#[allow(clippy::too_many_arguments)]
pub fn feynman_kac_check(
    spec: &ProblemSpec,
    theta: &Field3D,
    strategy: &Field2D,
    tau: f64,
    x0: f64,
    n_paths: usize,
    seed: u64,
) -> Result<FeynmanKacReport> {
    let grid = *theta.grid();
    let level = grid
        .level_of(tau)
        .filter(|l| theta.tau_levels().contains(l))
        .ok_or_else(|| TicError::usage(format!("τ = {tau} is not a slice level of the field")))?;
    let slice = theta.slice(theta.tau_levels().iter().position(|&l| l == level).expect("checked"));
    let bundle = simulate_from(spec, strategy, grid.t(level), &[x0], n_paths, seed, &SimOptions::default())?;
    let mode = detect_mode(spec, tau, &bundle)?;
    let mut mc = recursive_cost_estimate(spec, tau, &bundle, mode)?;
    mc.target = format!("Theta(tau={tau}, t={tau}, x={x0})");
    let reference = slice.interp_x(level, x0);
    let z = z_score(mc.estimate - reference, mc.std_error);

    let mid = (level + grid.nt) / 2;
    let s = grid.t(mid);
    let j = mid - level;
    let per = (n_paths / RESTARTS).max(64);
    let (mut gap, mut se2) = (0.0, 0.0);
    for r in 0..RESTARTS {
        let p = r * (n_paths / RESTARTS).max(1) % n_paths;
        let xs = bundle.state(p, j);
        let sub_seed = seed ^ (0x9E37_79B9_7F4A_7C15u64.wrapping_mul(r as u64 + 1));
        let sub = simulate_from(spec, strategy, s, &[xs], per, sub_seed, &SimOptions::default())?;
        let rep = recursive_cost_estimate(spec, tau, &sub, mode)?;
        gap += (slice.interp_x(mid, xs) - rep.estimate).abs();
        se2 += rep.std_error * rep.std_error;
    }
    let mean_abs_gap = gap / RESTARTS as f64;
    let rms_std_error = (se2 / RESTARTS as f64).sqrt();
    let pathwise = PathwiseCheck {
        s,
        restarts: RESTARTS,
        paths_per_restart: per,
        mean_abs_gap,
        rms_std_error,
        passed: mean_abs_gap <= 3.0 * rms_std_error + 1e-9,
    };
    Ok(FeynmanKacReport { mc, reference, z_score: z, pathwise })
}

/// Each row of `strategy` with its x-values randomly permuted.
pub fn shuffled_strategy(strategy: &Field2D, seed: u64) -> Field2D {
    let mut out = strategy.clone();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for n in out.start()..=out.end() {
        out.row_mut(n).shuffle(&mut rng);
    }
    out
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::discretization::Grid;
    use crate::problem::ControlSet;

    fn spec(b: f64, sigma: f64, g: f64, h: f64) -> ProblemSpec {
        ProblemSpec {
            name: "toy".into(),
            drift: Arc::new(move |_, _, u| b * u),
            diffusion: Arc::new(move |_, _, _| sigma),
            generator: Arc::new(move |_, _, _, _, _, _| g),
            terminal: Arc::new(move |_, _| h),
            controls: ControlSet::interval(-1.0, 1.0).unwrap(),
            horizon: 1.0,
            sigma_control_free: true,
            lipschitz: 1.0,
        }
    }

    fn grid() -> Grid {
        Grid::new(-4.0, 4.0, 81, 50, 1.0).unwrap()
    }

    #[test]
    fn degenerate_paths_stay_put() {
        let s = spec(0.0, 0.0, 0.0, 0.0);
        let strat = Field2D::filled(grid(), 0, 50, 0.3);
        let b = simulate_closed_loop(&s, &strat, 0.5, 100, 1).unwrap();
        assert!(b.states.iter().all(|&x| x == 0.5));
    }

    #[test]
    fn deterministic_ode_path() {
        let s = spec(1.0, 0.0, 0.0, 0.0);
        let strat = Field2D::filled(grid(), 0, 50, 0.7);
        let b = simulate_closed_loop(&s, &strat, -1.0, 3, 1).unwrap();
        for j in 0..=50 {
            assert!((b.state(2, j) - (-1.0 + 0.7 * b.times[j])).abs() < 1e-12);
        }
    }

    #[test]
    fn brownian_moments() {
        let s = spec(0.0, 1.0, 0.0, 0.0);
        let g = Grid::new(-8.0, 8.0, 81, 50, 1.0).unwrap();
        let strat = Field2D::filled(g, 0, 50, 0.0);
        let n = 10_000;
        let b = simulate_closed_loop(&s, &strat, 0.0, n, 42).unwrap();
        let xt: Vec<f64> = (0..n).map(|p| b.state(p, 50)).collect();
        let (mean, se) = mean_and_se(&xt);
        assert!(mean.abs() <= 4.0 * se);
        let var = xt.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n as f64 - 1.0);
        let var_se = (2.0f64 / n as f64).sqrt();
        assert!((var - 1.0).abs() <= 4.0 * var_se, "var {var}");
    }

    #[test]
    fn increments_have_variance_dt() {
        let s = spec(0.0, 1.0, 0.0, 0.0);
        let g = Grid::new(-8.0, 8.0, 81, 50, 1.0).unwrap();
        let strat = Field2D::filled(g, 0, 50, 0.0);
        let b = simulate_closed_loop(&s, &strat, 0.0, 2000, 5).unwrap();
        let (mean, se) = mean_and_se(&b.increments);
        assert!(mean.abs() <= 4.0 * se);
        let m = b.increments.len() as f64;
        let var = b.increments.iter().map(|x| x * x).sum::<f64>() / m;
        let dt = 1.0 / 50.0;
        assert!((var - dt).abs() <= 4.0 * dt * (2.0 / m).sqrt());
    }

    #[test]
    fn constant_terminal_has_zero_error() {
        let s = spec(1.0, 0.5, 0.0, 2.5);
        let strat = Field2D::filled(grid(), 0, 50, 0.0);
        let b = simulate_closed_loop(&s, &strat, 0.0, 500, 3).unwrap();
        let r = recursive_cost_estimate(&s, 0.0, &b, CostMode::GFreeOfYz).unwrap();
        assert_eq!(r.estimate, 2.5);
        assert_eq!(r.std_error, 0.0);
    }

    #[test]
    fn unit_running_cost_integrates_to_one() {
        let s = spec(1.0, 0.5, 1.0, 0.0);
        let strat = Field2D::filled(grid(), 0, 50, 0.0);
        let b = simulate_closed_loop(&s, &strat, 0.0, 200, 3).unwrap();
        let r = recursive_cost_estimate(&s, 0.0, &b, CostMode::GFreeOfYz).unwrap();
        assert!((r.estimate - 1.0).abs() < 1e-12);
    }

    #[test]
    fn y_linear_weights_solve_the_linear_bsde() {
        let mut s = spec(0.0, 0.0, 0.0, 1.0);
        s.generator = Arc::new(|_, _, _, _, y, _| 0.4 * y + 1.0);
        let strat = Field2D::filled(grid(), 0, 50, 0.0);
        let b = simulate_from(&s, &strat, 0.0, &[0.0], 10, 1, &SimOptions { steps: Some(4000), strict: false }).unwrap();
        let r = recursive_cost_estimate(&s, 0.0, &b, CostMode::YLinear).unwrap();
        let k: f64 = 0.4;
        let exact = k.exp() + (k.exp() - 1.0) / k;
        assert!((r.estimate - exact).abs() < 1e-3, "{} vs {exact}", r.estimate);
        assert!(recursive_cost_estimate(&s, 0.0, &b, CostMode::GFreeOfYz).is_err());
    }

    #[test]
    fn nonlinear_generator_is_unsupported() {
        let mut s = spec(0.0, 0.2, 0.0, 1.0);
        s.generator = Arc::new(|_, _, _, _, y, z| y.abs() + z * z);
        let strat = Field2D::filled(grid(), 0, 50, 0.0);
        let b = simulate_closed_loop(&s, &strat, 0.0, 10, 1).unwrap();
        let err = recursive_cost_estimate(&s, 0.0, &b, CostMode::YLinear).unwrap_err();
        assert_eq!(err.exit_code(), 4);
    }

    #[test]
    fn strict_exits_escalate() {
        let s = spec(1.0, 0.0, 0.0, 0.0);
        let strat = Field2D::filled(grid(), 0, 50, 1.0);
        let opts = SimOptions { steps: None, strict: true };
        let err = simulate_from(&s, &strat, 0.0, &[3.5], 10, 1, &opts).unwrap_err();
        assert!(matches!(err, TicError::Domain(_)));
        let b = simulate_from(&s, &strat, 0.0, &[3.5], 10, 1, &SimOptions::default()).unwrap();
        assert_eq!(b.exit_fraction(), 1.0);
        assert!(b.path_states(0).iter().all(|&x| x <= 4.0));
        assert_eq!(b.state(0, 50), 4.0);
    }

    #[test]
    fn x0_outside_inner_half_is_rejected() {
        let s = spec(0.0, 0.0, 0.0, 0.0);
        let strat = Field2D::filled(grid(), 0, 50, 0.0);
        assert!(simulate_closed_loop(&s, &strat, 3.0, 10, 1).is_err());
    }

    #[test]
    fn bilinear_strategy_interpolation() {
        let g = grid();
        let strat = Field2D::from_fn(g, 0, 50, |t, x| 2.0 * t + x);
        for &(t, x) in &[(0.0, 0.0), (0.013, 0.31), (0.5, -1.27), (0.999, 3.9)] {
            assert!((strategy_at(&strat, t, x) - (2.0 * t + x)).abs() < 1e-12);
        }
    }

    #[test]
    fn shuffle_permutes_rows() {
        let strat = Field2D::from_fn(grid(), 0, 50, |_, x| x);
        let sh = shuffled_strategy(&strat, 9);
        assert_ne!(sh, strat);
        let mut a = sh.row(7).to_vec();
        a.sort_by(f64::total_cmp);
        assert_eq!(a, strat.row(7));
    }
}
