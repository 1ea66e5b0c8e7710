//! Experiment configs, convergence and consistency studies, and export.

pub mod config;
mod export;
mod study;

pub use config::{ExperimentConfig, GridConfig, McConfig, PartitionSpec, ProblemRef, ResolvedProblem};
pub use export::{export_results, sha256_hex, Artifact, Manifest, ManifestEntry, MANIFEST_FILE};
pub use study::{
    limit_distance, loglog_slope, perturbations, run_consistency_suite, run_convergence_study, solve_equilibrium,
    CheckOutcome, ConsistencyReport, ConvergenceReport, LimitDistance, INVARIANCE_TOL, KERNEL_AGREEMENT_TOL,
};
