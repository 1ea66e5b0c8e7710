//! `tic-solve`: command-line front end for the tic-core solvers.
//!
//! Every subcommand writes its artifacts plus `manifest.json` into the output
//! directory and prints one JSON summary line on stdout. Logs go to stderr.
//! A subcommand whose checks fail still prints its summary and exits with 3.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use tic_core::analysis::{ExperimentConfig, PartitionSpec};
use tic_core::equilibrium::Method;
use tic_core::pde::StepperKind;
use tic_core::{Result, TicError};

#[derive(Parser, Debug)]
#[command(name = "tic-solve", version, about = "Equilibrium strategies for time-inconsistent recursive control")]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Default)]
struct GlobalArgs {
    /// Experiment config (TOML); flags below override its fields.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Named problem: exp-discount-lq, two-rate-discount or tau-free.
    #[arg(long, global = true, conflicts_with = "problem_file")]
    preset: Option<String>,
    /// Problem definition file.
    #[arg(long, global = true)]
    problem_file: Option<PathBuf>,
    /// Preset parameter override, repeatable.
    #[arg(long = "param", value_name = "KEY=VALUE", global = true, value_parser = parse_param)]
    params: Vec<(String, f64)>,
    #[arg(long, global = true, allow_negative_numbers = true)]
    x_lo: Option<f64>,
    #[arg(long, global = true, allow_negative_numbers = true)]
    x_hi: Option<f64>,
    #[arg(long, global = true)]
    nx: Option<usize>,
    /// Time levels; `auto` picks the smallest stable count.
    #[arg(long, global = true)]
    nt: Option<String>,
    /// Points of the control grid used for the Hamiltonian minimum.
    #[arg(long, global = true)]
    controls: Option<usize>,
    /// explicit-upwind or semi-implicit-diffusion.
    #[arg(long, global = true)]
    scheme: Option<StepperKind>,
    /// Fraction of the explicit stability bound, in (0, 1].
    #[arg(long, global = true)]
    cfl: Option<f64>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Treat Monte-Carlo boundary exits as errors.
    #[arg(long, global = true)]
    strict: bool,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// N-player cascade on a partition of [0, T].
    Cascade(CascadeArgs),
    /// Equilibrium limit by diagonal march, Picard windows or the kernel route.
    Equilibrium(EquilibriumArgs),
    /// Monte-Carlo check of Θ(0, 0, x0) under the frozen strategy.
    Mc(McArgs),
    /// Cascade-to-limit convergence over a ladder of uniform partitions.
    Converge(ConvergeArgs),
    /// Partition invariance, HJB agreement and verification on a τ-free problem.
    Consistency,
    /// Equilibrium, cascade and Monte-Carlo artifacts in one directory.
    Export(ExportArgs),
}

#[derive(Args, Debug)]
struct CascadeArgs {
    /// uniform:N, geometric:N:RATIO or knots:t0,t1,...
    #[arg(long)]
    partition: Option<PartitionSpec>,
    /// Also run the local optimality check for every player with this many trials.
    #[arg(long)]
    check_players: Option<usize>,
}

#[derive(Args, Debug)]
struct EquilibriumArgs {
    #[command(flatten)]
    method: MethodArgs,
}

#[derive(Args, Debug, Default)]
struct MethodArgs {
    /// march, picard or kernel.
    #[arg(long)]
    method: Option<Method>,
    /// τ-slice spacing in time levels for the march.
    #[arg(long)]
    tau_stride: Option<usize>,
    /// Picard window length.
    #[arg(long)]
    window: Option<f64>,
}

#[derive(Args, Debug)]
struct McArgs {
    /// Strategy source: cascade or equilibrium.
    #[arg(long, default_value = "cascade", value_parser = ["cascade", "equilibrium"])]
    from: String,
    #[arg(long)]
    partition: Option<PartitionSpec>,
    #[command(flatten)]
    method: MethodArgs,
    #[arg(long)]
    paths: Option<usize>,
    #[arg(long, allow_negative_numbers = true)]
    x0: Option<f64>,
    /// Also score a row-shuffled strategy, which should fail.
    #[arg(long)]
    negative_control: bool,
}

#[derive(Args, Debug)]
struct ConvergeArgs {
    /// Increasing player counts, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "2,4,8,16,32")]
    ladder: Vec<usize>,
    #[command(flatten)]
    method: MethodArgs,
}

#[derive(Args, Debug)]
struct ExportArgs {
    #[arg(long)]
    partition: Option<PartitionSpec>,
    #[command(flatten)]
    method: MethodArgs,
    #[arg(long)]
    paths: Option<usize>,
    #[arg(long, allow_negative_numbers = true)]
    x0: Option<f64>,
}

fn parse_param(s: &str) -> std::result::Result<(String, f64), String> {
    let (k, v) = s.split_once('=').ok_or_else(|| format!("expected KEY=VALUE, got `{s}`"))?;
    let v: f64 = v.trim().parse().map_err(|_| format!("`{v}` is not a number"))?;
    Ok((k.trim().to_string(), v))
}

impl GlobalArgs {
    fn config(&self) -> Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(path) => ExperimentConfig::load(path)?,
            None => ExperimentConfig::default(),
        };
        if let Some(p) = &self.preset {
            cfg.problem.preset = Some(p.clone());
            cfg.problem.file = None;
        }
        if let Some(f) = &self.problem_file {
            cfg.problem.file = Some(f.clone());
            cfg.problem.preset = None;
            cfg.problem.params.clear();
        }
        for (k, v) in &self.params {
            cfg.problem.params.insert(k.clone(), *v);
        }
        if let Some(v) = self.x_lo {
            cfg.grid.x_lo = v;
        }
        if let Some(v) = self.x_hi {
            cfg.grid.x_hi = v;
        }
        if let Some(v) = self.nx {
            cfg.grid.nx = v;
        }
        if let Some(v) = &self.nt {
            cfg.grid.nt = match v.as_str() {
                "auto" => None,
                n => Some(n.parse().map_err(|_| TicError::usage(format!("--nt expects a count or `auto`, got `{n}`")))?),
            };
        }
        if let Some(v) = self.controls {
            cfg.scheme.control_points = v;
        }
        if let Some(v) = self.scheme {
            cfg.scheme.stepper = v;
        }
        if let Some(v) = self.cfl {
            cfg.scheme.cfl_safety = v;
        }
        if let Some(v) = self.seed {
            cfg.seed = v;
        }
        if let Some(v) = &self.out {
            cfg.out_dir = v.clone();
        }
        cfg.mc.strict |= self.strict;
        cfg.validate()?;
        Ok(cfg)
    }
}

impl MethodArgs {
    fn apply(&self, cfg: &mut ExperimentConfig) {
        if let Some(m) = self.method {
            cfg.method = m;
        }
        if let Some(s) = self.tau_stride {
            cfg.tau_stride = s;
        }
        if self.window.is_some() {
            cfg.picard.delta = self.window;
        }
    }
}

fn run(cli: Cli) -> Result<commands::Report> {
    if let Some(n) = cli.global.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| TicError::usage(format!("cannot size the thread pool: {e}")))?;
    }
    let mut cfg = cli.global.config()?;
    match cli.command {
        Command::Cascade(a) => {
            if let Some(p) = a.partition {
                cfg.partition = p;
            }
            commands::cascade(&cfg, a.check_players)
        }
        Command::Equilibrium(a) => {
            a.method.apply(&mut cfg);
            commands::equilibrium(&cfg)
        }
        Command::Mc(a) => {
            if let Some(p) = a.partition {
                cfg.partition = p;
            }
            a.method.apply(&mut cfg);
            if let Some(n) = a.paths {
                cfg.mc.n_paths = n;
            }
            if let Some(x) = a.x0 {
                cfg.mc.x0 = x;
            }
            cfg.validate()?;
            commands::mc(&cfg, a.from == "equilibrium", a.negative_control)
        }
        Command::Converge(a) => {
            a.method.apply(&mut cfg);
            commands::converge(&cfg, &a.ladder)
        }
        Command::Consistency => commands::consistency(&cfg),
        Command::Export(a) => {
            if let Some(p) = a.partition {
                cfg.partition = p;
            }
            a.method.apply(&mut cfg);
            if let Some(n) = a.paths {
                cfg.mc.n_paths = n;
            }
            if let Some(x) = a.x0 {
                cfg.mc.x0 = x;
            }
            cfg.validate()?;
            commands::export(&cfg)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(report) => {
            println!("{}", report.summary);
            if report.ok {
                ExitCode::SUCCESS
            } else {
                eprintln!("error: one or more checks failed");
                ExitCode::from(3)
            }
        }
        Err(e) => {
            let code = e.exit_code();
            eprintln!("error: {e}");
            log::debug!("{e:?}");
            ExitCode::from(code as u8)
        }
    }
}
