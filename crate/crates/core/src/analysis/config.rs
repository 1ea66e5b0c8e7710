use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::discretization::{Grid, Partition};
use crate::equilibrium::{Method, PicardOptions};
use crate::error::{Result, TicError};
use crate::pde::{SchemeConfig, Stepper};
use crate::problem::{self, preset, preset_names, Preset, ProblemSpec};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemRef {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preset: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub file: Option<PathBuf>,
    /// Preset parameter overrides.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub params: BTreeMap<String, f64>,
}

impl Default for ProblemRef {
    fn default() -> Self {
        ProblemRef { preset: Some("exp-discount-lq".into()), file: None, params: BTreeMap::new() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub x_lo: f64,
    pub x_hi: f64,
    pub nx: usize,
    /// Time levels; `None` picks the smallest stable count, rounded up to a multiple of 8.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nt: Option<usize>,
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig { x_lo: -4.0, x_hi: 4.0, nx: 201, nt: Some(256) }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum PartitionSpec {
    Uniform { n: usize },
    Geometric { n: usize, ratio: f64 },
    Knots { knots: Vec<f64> },
}

impl Default for PartitionSpec {
    fn default() -> Self {
        PartitionSpec::Uniform { n: 8 }
    }
}

impl PartitionSpec {
    pub fn build(&self, horizon: f64) -> Result<Partition> {
        match self {
            PartitionSpec::Uniform { n } => Partition::uniform(horizon, *n),
            PartitionSpec::Geometric { n, ratio } => Partition::geometric(horizon, *n, *ratio),
            PartitionSpec::Knots { knots } => Partition::new(knots.clone()),
        }
    }
}

impl std::str::FromStr for PartitionSpec {
    type Err = TicError;
    /// `uniform:N`, `geometric:N:RATIO` or `knots:t0,t1,...`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || TicError::usage(format!("bad partition `{s}`; use uniform:N, geometric:N:RATIO or knots:t0,t1,..."));
        let (kind, rest) = s.split_once(':').ok_or_else(bad)?;
        match kind {
            "uniform" => Ok(PartitionSpec::Uniform { n: rest.parse().map_err(|_| bad())? }),
            "geometric" => {
                let (n, r) = rest.split_once(':').ok_or_else(bad)?;
                Ok(PartitionSpec::Geometric { n: n.parse().map_err(|_| bad())?, ratio: r.parse().map_err(|_| bad())? })
            }
            "knots" => {
                let knots = rest.split(',').map(|k| k.trim().parse::<f64>()).collect::<std::result::Result<Vec<_>, _>>();
                Ok(PartitionSpec::Knots { knots: knots.map_err(|_| bad())? })
            }
            _ => Err(bad()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct McConfig {
    pub n_paths: usize,
    pub x0: f64,
    pub strict: bool,
}

impl Default for McConfig {
    fn default() -> Self {
        McConfig { n_paths: 10_000, x0: 0.0, strict: false }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub problem: ProblemRef,
    pub grid: GridConfig,
    pub scheme: SchemeConfig,
    pub partition: PartitionSpec,
    pub method: Method,
    pub tau_stride: usize,
    pub picard: PicardOptions,
    pub mc: McConfig,
    pub seed: u64,
    pub out_dir: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            problem: ProblemRef::default(),
            grid: GridConfig::default(),
            scheme: SchemeConfig::default(),
            partition: PartitionSpec::default(),
            method: Method::DiagonalMarch,
            tau_stride: 1,
            picard: PicardOptions::default(),
            mc: McConfig::default(),
            seed: 1,
            out_dir: PathBuf::from("out"),
        }
    }
}

/// A resolved problem: the `ProblemSpec` plus its preset record when there is one.
#[derive(Debug, Clone)]
pub struct ResolvedProblem {
    pub spec: ProblemSpec,
    pub preset: Option<Preset>,
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| TicError::config(format!("invalid experiment config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| TicError::config(format!("cannot serialize config: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| TicError::io(path, e))?;
        Self::from_toml_str(&text)
    }

    /// Range checks that need no solver work.
    pub fn validate(&self) -> Result<()> {
        match (&self.problem.preset, &self.problem.file) {
            (Some(name), None) => {
                if !preset_names().contains(&name.as_str()) {
                    return Err(TicError::usage(format!("unknown preset `{name}`; available: {}", preset_names().join(", "))));
                }
            }
            (None, Some(_)) => {
                if !self.problem.params.is_empty() {
                    return Err(TicError::usage("preset parameters cannot be combined with a problem file"));
                }
            }
            _ => return Err(TicError::usage("give exactly one of problem.preset or problem.file")),
        }
        let g = &self.grid;
        if !(g.x_lo.is_finite() && g.x_hi.is_finite() && g.x_lo < g.x_hi) {
            return Err(TicError::usage(format!("grid bounds must satisfy x_lo < x_hi, got [{}, {}]", g.x_lo, g.x_hi)));
        }
        if g.nx < 5 {
            return Err(TicError::usage(format!("nx must be at least 5, got {}", g.nx)));
        }
        if g.nt == Some(0) {
            return Err(TicError::usage("nt must be positive"));
        }
        if self.tau_stride == 0 {
            return Err(TicError::usage("tau_stride must be at least 1"));
        }
        if !(self.scheme.cfl_safety > 0.0 && self.scheme.cfl_safety <= 1.0) {
            return Err(TicError::config(format!("cfl_safety must lie in (0, 1], got {}", self.scheme.cfl_safety)));
        }
        if self.scheme.control_points == 0 {
            return Err(TicError::usage("control_points must be positive"));
        }
        if self.mc.n_paths == 0 {
            return Err(TicError::usage("mc.n_paths must be positive"));
        }
        if self.seed > i64::MAX as u64 {
            return Err(TicError::usage(format!("seed must be at most {}, got {}", i64::MAX, self.seed)));
        }
        if !(self.picard.tol > 0.0) || self.picard.max_iter == 0 {
            return Err(TicError::usage("picard.tol must be positive and picard.max_iter at least 1"));
        }
        Ok(())
    }

    pub fn resolve_problem(&self) -> Result<ResolvedProblem> {
        self.validate()?;
        if let Some(name) = &self.problem.preset {
            let overrides: Vec<(&str, f64)> = self.problem.params.iter().map(|(k, v)| (k.as_str(), *v)).collect();
            let p = preset(name, &overrides)?;
            return Ok(ResolvedProblem { spec: p.spec.clone(), preset: Some(p) });
        }
        let path = self.problem.file.as_ref().expect("validated");
        Ok(ResolvedProblem { spec: problem::file::load(path)?, preset: None })
    }

    /// The configured grid; an unset nt becomes the smallest stable count.
    pub fn grid_for(&self, spec: &ProblemSpec) -> Result<Grid> {
        let g = &self.grid;
        if let Some(nt) = g.nt {
            return Grid::new(g.x_lo, g.x_hi, g.nx, nt, spec.horizon);
        }
        let probe = Grid::new(g.x_lo, g.x_hi, g.nx, 64, spec.horizon)?;
        let relaxed = SchemeConfig { cfl_safety: 1.0, ..self.scheme };
        let bound = {
            let mut s = Stepper::new(spec, &probe, &relaxed);
            let mut nt = 64;
            while let Err(TicError::Config(_)) = s {
                nt *= 2;
                s = Stepper::new(spec, &Grid::new(g.x_lo, g.x_hi, g.nx, nt, spec.horizon)?, &relaxed);
                if nt > 1 << 24 {
                    break;
                }
            }
            s?.max_stable_dt()? * self.scheme.cfl_safety
        };
        let nt = ((spec.horizon / bound).ceil() as usize).max(8).div_ceil(8) * 8;
        Grid::new(g.x_lo, g.x_hi, g.nx, nt, spec.horizon)
    }

    pub fn stepper(&self, spec: &ProblemSpec) -> Result<Stepper> {
        spec.validate(self.grid.x_lo, self.grid.x_hi, self.scheme.control_points)?;
        Stepper::new(spec, &self.grid_for(spec)?, &self.scheme)
    }
}
