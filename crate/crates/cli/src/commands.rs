use serde_json::{json, Value};
use tic_core::analysis::{
    export_results, run_consistency_suite, run_convergence_study, solve_equilibrium, Artifact, ExperimentConfig, Manifest,
};
use tic_core::cascade::{cascade_solve, local_optimality_check, CascadeSolution};
use tic_core::equilibrium::EquilibriumSolution;
use tic_core::mc::{feynman_kac_check, shuffled_strategy, FeynmanKacReport};
use tic_core::pde::Stepper;
use tic_core::{Grid, ProblemSpec, Result, TicError};

/// What a subcommand prints, and whether its checks held.
pub struct Report {
    pub summary: Value,
    pub ok: bool,
}

impl Report {
    fn ok(summary: Value) -> Self {
        Report { summary, ok: true }
    }
}

struct Setup {
    spec: ProblemSpec,
    stepper: Stepper,
    problem: String,
}

fn setup(cfg: &ExperimentConfig) -> Result<Setup> {
    let resolved = cfg.resolve_problem()?;
    let stepper = cfg.stepper(&resolved.spec)?;
    let problem = resolved.preset.map_or_else(|| resolved.spec.name.clone(), |p| p.name.to_string());
    log::info!("problem {problem}: grid {:?}", stepper.grid());
    Ok(Setup { spec: resolved.spec, stepper, problem })
}

fn grid_json(g: &Grid) -> Value {
    json!({"x_lo": g.x_lo, "x_hi": g.x_hi, "nx": g.nx, "nt": g.nt, "horizon": g.horizon})
}

fn config_artifact(cfg: &ExperimentConfig) -> Result<Artifact> {
    Ok(Artifact::text("config.toml", cfg.to_toml_string()?))
}

fn write(cfg: &ExperimentConfig, artifacts: &[Artifact]) -> Result<Manifest> {
    let manifest = export_results(artifacts, &cfg.out_dir)?;
    log::info!("wrote {} files to {}", manifest.entries.len(), cfg.out_dir.display());
    Ok(manifest)
}

fn summary(command: &str, s: &Setup, cfg: &ExperimentConfig, manifest: &Manifest, result: Value) -> Value {
    json!({
        "command": command,
        "problem": s.problem,
        "grid": grid_json(s.stepper.grid()),
        "out_dir": cfg.out_dir,
        "files": manifest.entries.iter().map(|e| json!({"file": e.file, "sha256": e.sha256})).collect::<Vec<_>>(),
        "result": result,
    })
}

fn cascade_artifacts(sol: &CascadeSolution, prefix: &str) -> Result<Vec<Artifact>> {
    let meta = json!({"knots": sol.partition.knots()});
    Ok(vec![
        Artifact::field(format!("{prefix}value"), &sol.diagonal()?, meta.clone()),
        Artifact::field(format!("{prefix}value_left"), &sol.value, meta.clone()),
        Artifact::field(format!("{prefix}strategy"), &sol.strategy, meta),
        Artifact::json(format!("{prefix}jumps"), &sol.jumps)?,
    ])
}

fn cascade_result(sol: &CascadeSolution) -> Value {
    json!({"players": sol.partition.len(), "mesh": sol.partition.mesh(), "max_jump": sol.max_jump()})
}

fn equilibrium_artifacts(sol: &EquilibriumSolution, prefix: &str) -> Result<Vec<Artifact>> {
    let meta = json!({"method": sol.method});
    Ok(vec![
        Artifact::field(format!("{prefix}value"), &sol.value, meta.clone()),
        Artifact::field(format!("{prefix}strategy"), &sol.strategy, meta),
        Artifact::json(format!("{prefix}windows"), &sol.logs)?,
    ])
}

fn equilibrium_result(sol: &EquilibriumSolution) -> Value {
    json!({
        "method": sol.method,
        "slices": sol.theta.len(),
        "iterations": sol.iterations,
        "residual": sol.residual,
        "truncation_estimate": sol.truncation_estimate,
        "windows": sol.logs.len(),
    })
}

pub fn cascade(cfg: &ExperimentConfig, check_players: Option<usize>) -> Result<Report> {
    let s = setup(cfg)?;
    let partition = cfg.partition.build(s.spec.horizon)?;
    let sol = cascade_solve(&s.stepper, &partition)?;
    let mut artifacts = vec![config_artifact(cfg)?];
    artifacts.extend(cascade_artifacts(&sol, "")?);
    let mut result = cascade_result(&sol);
    let mut ok = true;
    if let Some(trials) = check_players {
        let reports = (1..=sol.partition.len())
            .map(|k| local_optimality_check(&s.stepper, &sol, k, trials, cfg.seed.wrapping_add(k as u64), 1e-6))
            .collect::<Result<Vec<_>>>()?;
        ok = reports.iter().all(|r| r.passed());
        result["local_optimality"] = json!({
            "passed": ok,
            "worst_excess": reports.iter().map(|r| r.worst_excess()).fold(f64::INFINITY, f64::min),
        });
        artifacts.push(Artifact::json("local_optimality", &reports)?);
    }
    let manifest = write(cfg, &artifacts)?;
    Ok(Report { summary: summary("cascade", &s, cfg, &manifest, result), ok })
}

pub fn equilibrium(cfg: &ExperimentConfig) -> Result<Report> {
    let s = setup(cfg)?;
    let sol = solve_equilibrium(cfg, &s.stepper)?;
    let mut artifacts = vec![config_artifact(cfg)?];
    artifacts.extend(equilibrium_artifacts(&sol, "")?);
    let manifest = write(cfg, &artifacts)?;
    Ok(Report::ok(summary("equilibrium", &s, cfg, &manifest, equilibrium_result(&sol))))
}

/// Under `--strict`, boundary exits on the main bundle are an error.
fn strict_exits(cfg: &ExperimentConfig, fk: &FeynmanKacReport) -> Result<()> {
    if cfg.mc.strict && fk.mc.exit_fraction > 0.01 {
        return Err(TicError::domain(format!(
            "{:.2}% of paths left the domain; widen [x_lo, x_hi]",
            100.0 * fk.mc.exit_fraction
        )));
    }
    Ok(())
}

fn mc_result(fk: &FeynmanKacReport, negative: Option<&FeynmanKacReport>) -> Value {
    let mut v = json!({
        "estimate": fk.mc.estimate,
        "std_error": fk.mc.std_error,
        "reference": fk.reference,
        "z_score": fk.z_score,
        "passed": fk.z_score.abs() <= 3.0,
        "pathwise_passed": fk.pathwise.passed,
        "exit_fraction": fk.mc.exit_fraction,
    });
    if let Some(n) = negative {
        v["negative_control_z"] = json!(n.z_score);
    }
    v
}

pub fn mc(cfg: &ExperimentConfig, from_equilibrium: bool, negative_control: bool) -> Result<Report> {
    let s = setup(cfg)?;
    let (theta, strategy) = if from_equilibrium {
        let sol = solve_equilibrium(cfg, &s.stepper)?;
        (sol.theta, sol.strategy)
    } else {
        let sol = cascade_solve(&s.stepper, &cfg.partition.build(s.spec.horizon)?)?;
        (sol.theta, sol.strategy)
    };
    let fk = feynman_kac_check(&s.spec, &theta, &strategy, 0.0, cfg.mc.x0, cfg.mc.n_paths, cfg.seed)?;
    strict_exits(cfg, &fk)?;
    let negative = if negative_control {
        let shuffled = shuffled_strategy(&strategy, cfg.seed);
        Some(feynman_kac_check(&s.spec, &theta, &shuffled, 0.0, cfg.mc.x0, cfg.mc.n_paths, cfg.seed)?)
    } else {
        None
    };
    let artifacts = vec![config_artifact(cfg)?, Artifact::json("mc", &fk)?];
    let manifest = write(cfg, &artifacts)?;
    Ok(Report::ok(summary("mc", &s, cfg, &manifest, mc_result(&fk, negative.as_ref()))))
}

pub fn converge(cfg: &ExperimentConfig, ladder: &[usize]) -> Result<Report> {
    let s = setup(cfg)?;
    let report = run_convergence_study(cfg, ladder)?;
    if report.non_monotone {
        log::warn!("error sequence is not monotone; the grid may be under-resolved");
    }
    let artifacts = vec![
        config_artifact(cfg)?,
        Artifact::text("convergence.csv", report.to_csv_string()),
        Artifact::json("convergence", &report)?,
    ];
    let manifest = write(cfg, &artifacts)?;
    let result = json!({
        "ladder": report.ladder,
        "errors": report.errors,
        "fitted_rate": report.fitted_rate,
        "strategy_rate": report.strategy_rate,
        "reference": report.reference,
        "non_monotone": report.non_monotone,
    });
    Ok(Report::ok(summary("converge", &s, cfg, &manifest, result)))
}

pub fn consistency(cfg: &ExperimentConfig) -> Result<Report> {
    let s = setup(cfg)?;
    let report = run_consistency_suite(cfg)?;
    for c in report.checks.iter().filter(|c| !c.passed) {
        log::error!("check {} failed: {}", c.name, c.detail);
    }
    let artifacts = vec![config_artifact(cfg)?, Artifact::json("consistency", &report)?];
    let manifest = write(cfg, &artifacts)?;
    let result = json!({"passed": report.passed(), "checks": report.checks});
    Ok(Report { summary: summary("consistency", &s, cfg, &manifest, result), ok: report.passed() })
}

pub fn export(cfg: &ExperimentConfig) -> Result<Report> {
    let s = setup(cfg)?;
    let eq = solve_equilibrium(cfg, &s.stepper)?;
    let cas = cascade_solve(&s.stepper, &cfg.partition.build(s.spec.horizon)?)?;
    let fk = feynman_kac_check(&s.spec, &cas.theta, &cas.strategy, 0.0, cfg.mc.x0, cfg.mc.n_paths, cfg.seed)?;
    strict_exits(cfg, &fk)?;
    let mut artifacts = vec![config_artifact(cfg)?];
    artifacts.extend(equilibrium_artifacts(&eq, "equilibrium_")?);
    artifacts.extend(cascade_artifacts(&cas, "cascade_")?);
    artifacts.push(Artifact::json("mc", &fk)?);
    let manifest = write(cfg, &artifacts)?;
    let result = json!({
        "equilibrium": equilibrium_result(&eq),
        "cascade": cascade_result(&cas),
        "mc": mc_result(&fk, None),
    });
    Ok(Report::ok(summary("export", &s, cfg, &manifest, result)))
}
