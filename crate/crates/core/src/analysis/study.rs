use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use crate::cascade::{cascade_solve, CascadeSolution};
use crate::discretization::{Field2D, Grid, Partition};
use crate::equilibrium::{diagonal_march_solve, kernel_picard_solve, picard_window_solve, EquilibriumSolution, Method};
use crate::error::{Result, TicError};
use crate::mc::{detect_mode, recursive_cost_estimate, simulate_from, SimOptions};
use crate::pde::Stepper;
use crate::problem::ProblemSpec;

/// Solves the limit equation with the configured method.
pub fn solve_equilibrium(config: &ExperimentConfig, stepper: &Stepper) -> Result<EquilibriumSolution> {
    match config.method {
        Method::DiagonalMarch => diagonal_march_solve(stepper, config.tau_stride),
        Method::Picard => picard_window_solve(stepper, &config.picard),
        Method::KernelPicard => kernel_picard_solve(stepper.spec(), stepper.grid(), stepper.scheme(), &config.picard),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LimitDistance {
    pub value: f64,
    pub gradient: f64,
    /// sup of |ΔΘ| + |ΔΘ_x| taken pointwise.
    pub combined: f64,
    pub strategy: f64,
}

/// Distances between a cascade and a limit solution over the compact set
/// 𝒦 = {every reference τ-slice, t ≥ τ, x in the middle `fraction` of the domain}.
pub fn limit_distance(cascade: &CascadeSolution, reference: &EquilibriumSolution, fraction: f64) -> Result<LimitDistance> {
    let grid = *reference.theta.grid();
    if cascade.theta.grid() != &grid {
        return Err(TicError::usage("cascade and reference must share a grid"));
    }
    let inner = grid.inner_nodes(fraction);
    let mut d = LimitDistance { value: 0.0, gradient: 0.0, combined: 0.0, strategy: 0.0 };
    for (k, &level) in reference.theta.tau_levels().iter().enumerate() {
        let ours = cascade.theta.slice(cascade.theta.slice_index_for(level).expect("cascade starts at 0"));
        let theirs = reference.theta.slice(k);
        for n in level..=grid.nt {
            let (a, b) = (ours.row(n), theirs.row(n));
            let (ga, gb) = (ours.gradient_row(n), theirs.gradient_row(n));
            for i in inner.clone() {
                let (dv, dg) = ((a[i] - b[i]).abs(), (ga[i] - gb[i]).abs());
                d.value = d.value.max(dv);
                d.gradient = d.gradient.max(dg);
                d.combined = d.combined.max(dv + dg);
            }
        }
    }
    d.strategy = cascade.strategy.sup_diff(&reference.strategy, 0..=grid.nt - 1, inner);
    Ok(d)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub ladder: Vec<usize>,
    pub mesh_sizes: Vec<f64>,
    /// sup_𝒦 (|Θ^Π − Θ| + |Θ^Π_x − Θ_x|).
    pub errors: Vec<f64>,
    pub strategy_errors: Vec<f64>,
    pub max_jumps: Vec<f64>,
    /// Least-squares slope of log error against log mesh; `None` if an error vanishes.
    pub fitted_rate: Option<f64>,
    pub strategy_rate: Option<f64>,
    pub reference: String,
    pub non_monotone: bool,
}

impl ConvergenceReport {
    pub fn to_csv_string(&self) -> String {
        let mut out = String::from("n,mesh,error,strategy_error,max_jump\n");
        for i in 0..self.ladder.len() {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                self.ladder[i], self.mesh_sizes[i], self.errors[i], self.strategy_errors[i], self.max_jumps[i]
            ));
        }
        out
    }
}

/// Least-squares slope of ln(y) on ln(x); `None` unless every y is positive.
pub fn loglog_slope(x: &[f64], y: &[f64]) -> Option<f64> {
    if x.len() < 2 || y.iter().any(|&v| !(v > 0.0)) {
        return None;
    }
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let (mx, my) = (lx.iter().sum::<f64>() / n, ly.iter().sum::<f64>() / n);
    let sxx: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

/// Uniform cascades along `ladder` against the configured limit solver.
pub fn run_convergence_study(config: &ExperimentConfig, ladder: &[usize]) -> Result<ConvergenceReport> {
    if ladder.len() < 3 {
        return Err(TicError::usage(format!("a convergence ladder needs at least 3 partitions, got {}", ladder.len())));
    }
    if ladder.windows(2).any(|w| w[0] >= w[1]) || ladder[0] == 0 {
        return Err(TicError::usage("ladder sizes must be positive and strictly increasing"));
    }
    let problem = config.resolve_problem()?;
    let stepper = config.stepper(&problem.spec)?;
    let reference = solve_equilibrium(config, &stepper)?;
    let horizon = problem.spec.horizon;
    let mut report = ConvergenceReport {
        ladder: ladder.to_vec(),
        mesh_sizes: Vec::new(),
        errors: Vec::new(),
        strategy_errors: Vec::new(),
        max_jumps: Vec::new(),
        fitted_rate: None,
        strategy_rate: None,
        reference: format!("{:?}", reference.method),
        non_monotone: false,
    };
    for &n in ladder {
        let partition = Partition::uniform(horizon, n)?;
        let cascade = cascade_solve(&stepper, &partition)?;
        let d = limit_distance(&cascade, &reference, 0.5)?;
        log::info!("N = {n}: sup error {:.4e}, strategy error {:.4e}", d.combined, d.strategy);
        report.mesh_sizes.push(partition.mesh());
        report.errors.push(d.combined);
        report.strategy_errors.push(d.strategy);
        report.max_jumps.push(cascade.max_jump());
    }
    report.fitted_rate = loglog_slope(&report.mesh_sizes, &report.errors);
    report.strategy_rate = loglog_slope(&report.mesh_sizes, &report.strategy_errors);
    report.non_monotone = report.errors.windows(2).any(|w| w[1] > w[0]);
    if report.non_monotone {
        log::warn!("error sequence is non-monotone: {:?}", report.errors);
    }
    Ok(report)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CheckOutcome {
    pub name: String,
    pub passed: bool,
    pub magnitude: f64,
    pub tolerance: f64,
    pub detail: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConsistencyReport {
    pub problem: String,
    pub checks: Vec<CheckOutcome>,
}

impl ConsistencyReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

pub const INVARIANCE_TOL: f64 = 1e-8;
pub const KERNEL_AGREEMENT_TOL: f64 = 2e-2;

/// Candidate strategies for the verification inequality: shifts, a
/// state-dependent bump and a damping of the given strategy, clamped to U.
pub fn perturbations(spec: &ProblemSpec, strategy: &Field2D) -> Vec<(String, Field2D)> {
    let (lo, hi) = spec.controls.bounds();
    let width = hi - lo;
    let grid: Grid = *strategy.grid();
    let make = |f: &dyn Fn(f64, f64) -> f64| {
        let mut out = strategy.clone();
        for n in out.start()..=out.end() {
            let row = out.row_mut(n);
            for (i, u) in row.iter_mut().enumerate() {
                *u = f(*u, grid.x(i)).clamp(lo, hi);
            }
        }
        out
    };
    vec![
        ("shift-up".into(), make(&|u, _| u + 0.125 * width)),
        ("shift-down".into(), make(&|u, _| u - 0.125 * width)),
        ("bump".into(), make(&|u, x| u + 0.125 * width * (std::f64::consts::PI * x / 2.0).sin())),
        ("damped".into(), make(&|u, _| 0.5 * u)),
    ]
}

/// Checks that a τ-free problem behaves time-consistently.
pub fn run_consistency_suite(config: &ExperimentConfig) -> Result<ConsistencyReport> {
    let problem = config.resolve_problem()?;
    let spec = &problem.spec;
    if !spec.is_tau_free(config.grid.x_lo, config.grid.x_hi) {
        return Err(TicError::usage(format!(
            "`{}` depends on the initial time τ; the consistency suite applies to τ-free problems only",
            spec.name
        )));
    }
    let stepper = config.stepper(spec)?;
    let grid = *stepper.grid();
    let mut checks = Vec::new();

    let sizes: Vec<usize> = [1usize, 4, 16].into_iter().filter(|n| grid.nt % n == 0).collect();
    let mut cascades = Vec::new();
    for &n in &sizes {
        cascades.push(cascade_solve(&stepper, &Partition::uniform(spec.horizon, n)?)?);
    }
    let diagonals: Vec<Field2D> = cascades.iter().map(|c| c.diagonal()).collect::<Result<_>>()?;
    let mut worst = 0.0f64;
    for i in 0..diagonals.len() {
        for j in i + 1..diagonals.len() {
            worst = worst.max(diagonals[i].sup_diff(&diagonals[j], 0..=grid.nt, 0..=grid.nx - 1));
        }
    }
    checks.push(CheckOutcome {
        name: "partition-invariance".into(),
        passed: sizes.len() >= 2 && worst <= INVARIANCE_TOL,
        magnitude: worst,
        tolerance: INVARIANCE_TOL,
        detail: format!("pairwise sup |V^Π − V^Π'| over N ∈ {sizes:?}"),
    });

    let hjb = &cascades[0];
    let eq = solve_equilibrium(config, &stepper)?;
    let (gap, tol, nodes) = match eq.method {
        Method::KernelPicard => {
            let inner = grid.inner_nodes(0.5);
            (eq.value.sup_diff(&diagonals[0], 0..=grid.nt, inner), KERNEL_AGREEMENT_TOL, "inner half")
        }
        _ => (eq.value.sup_diff(&diagonals[0], 0..=grid.nt, 0..=grid.nx - 1), INVARIANCE_TOL, "all nodes"),
    };
    checks.push(CheckOutcome {
        name: "equilibrium-equals-hjb".into(),
        passed: gap <= tol,
        magnitude: gap,
        tolerance: tol,
        detail: format!("sup |V_eq − V_hjb| ({:?}, {nodes})", eq.method),
    });

    let deterministic = spec.constant_sigma(grid.x_lo, grid.x_hi) == Some(0.0);
    let n_paths = if deterministic { 1 } else { config.mc.n_paths };
    let opts = SimOptions { steps: None, strict: config.mc.strict };
    let x0 = config.mc.x0;
    let base = simulate_from(spec, &hjb.strategy, 0.0, &[x0], n_paths, config.seed, &opts)?;
    let mode = detect_mode(spec, 0.0, &base)?;
    let optimal = recursive_cost_estimate(spec, 0.0, &base, mode)?;
    let mut min_margin = f64::INFINITY;
    let mut detail = Vec::new();
    for (name, strat) in perturbations(spec, &hjb.strategy) {
        let bundle = simulate_from(spec, &strat, 0.0, &[x0], n_paths, config.seed, &opts)?;
        let rep = recursive_cost_estimate(spec, 0.0, &bundle, mode)?;
        let slack = if deterministic { 1e-6 } else { 3.0 * optimal.std_error.hypot(rep.std_error) };
        let margin = rep.estimate - optimal.estimate + slack;
        min_margin = min_margin.min(margin);
        detail.push(format!("{name}: J = {:.6} (se {:.2e})", rep.estimate, rep.std_error));
    }
    checks.push(CheckOutcome {
        name: "mc-verification-inequality".into(),
        passed: min_margin >= 0.0,
        magnitude: min_margin,
        tolerance: 0.0,
        detail: format!(
            "{} mode, optimal J = {:.6} (se {:.2e}); {}",
            if deterministic { "deterministic" } else { "monte-carlo" },
            optimal.estimate,
            optimal.std_error,
            detail.join("; ")
        ),
    });
    Ok(ConsistencyReport { problem: spec.name.clone(), checks })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::config::GridConfig;
    use crate::analysis::ProblemRef;

    fn config(preset: &str, nx: usize, nt: usize) -> ExperimentConfig {
        ExperimentConfig {
            problem: ProblemRef { preset: Some(preset.into()), ..Default::default() },
            grid: GridConfig { x_lo: -4.0, x_hi: 4.0, nx, nt: Some(nt) },
            mc: crate::analysis::config::McConfig { n_paths: 2000, x0: 0.5, strict: false },
            ..Default::default()
        }
    }

    #[test]
    fn slope_of_power_law() {
        let x = [1.0, 0.5, 0.25];
        let y: Vec<f64> = x.iter().map(|v: &f64| 3.0 * v.powf(1.5)).collect();
        assert!((loglog_slope(&x, &y).unwrap() - 1.5).abs() < 1e-12);
        assert!(loglog_slope(&x, &[1.0, 0.0, 1.0]).is_none());
    }

    #[test]
    fn short_ladder_is_rejected() {
        let err = run_convergence_study(&config("two-rate-discount", 41, 64), &[2, 4]).unwrap_err();
        assert_eq!(err.exit_code(), 2);
        assert!(run_convergence_study(&config("two-rate-discount", 41, 64), &[4, 2, 8]).is_err());
    }

    #[test]
    fn tau_free_errors_vanish() {
        let rep = run_convergence_study(&config("tau-free", 41, 64), &[2, 4, 8]).unwrap();
        assert!(rep.errors.iter().all(|&e| e <= 1e-8), "{:?}", rep.errors);
        assert!(rep.strategy_errors.iter().all(|&e| e <= 1e-8));
    }

    #[test]
    fn two_rate_errors_shrink() {
        let rep = run_convergence_study(&config("two-rate-discount", 41, 64), &[2, 4, 8, 16]).unwrap();
        assert!(!rep.non_monotone, "{:?}", rep.errors);
        assert!(rep.fitted_rate.unwrap() > 0.8, "{:?}", rep.fitted_rate);
        assert!(rep.to_csv_string().lines().count() == 5);
    }

    #[test]
    fn consistency_suite_passes_for_time_consistent_problem() {
        let rep = run_consistency_suite(&config("exp-discount-lq", 41, 64)).unwrap();
        assert!(rep.passed(), "{rep:?}");
        assert_eq!(rep.checks.len(), 3);
    }

    #[test]
    fn consistency_suite_deterministic_mode() {
        let mut cfg = config("tau-free", 41, 64);
        cfg.problem.params.insert("sigma".into(), 0.0);
        let rep = run_consistency_suite(&cfg).unwrap();
        assert!(rep.passed(), "{rep:?}");
        assert!(rep.checks[2].detail.starts_with("deterministic"));
    }

    #[test]
    fn consistency_suite_refuses_tau_dependence() {
        let err = run_consistency_suite(&config("two-rate-discount", 41, 64)).unwrap_err();
        assert_eq!(err.exit_code(), 2);
    }
}
