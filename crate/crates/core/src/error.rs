use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = TicError> = std::result::Result<T, E>;

/// Errors raised by the solvers and the experiment layer.
///
/// Each variant maps onto one of the process exit codes used by the CLI
/// (see [`TicError::exit_code`]).
#[derive(Debug, Error)]
pub enum TicError {
    /// Caller supplied arguments that violate an operation's preconditions.
    #[error("usage error: {0}")]
    Usage(String),

    /// A coefficient or query point left the domain where it is defined.
    #[error("domain error: {0}")]
    Domain(String),

    /// Scheme configuration is inconsistent with the problem, e.g. a CFL violation.
    #[error("configuration error: {0}")]
    Config(String),

    #[error("numerical blow-up at time index {time_index}, node {node}: {detail}")]
    NumericalBlowup {
        time_index: usize,
        node: usize,
        detail: String,
    },

    #[error("fixed-point iteration did not contract on window [{t_start}, {t_end}]; iterate differences {diffs:?}")]
    NonContraction {
        t_start: f64,
        t_end: f64,
        diffs: Vec<f64>,
    },

    /// The problem is outside the class a solver handles.
    #[error("unsupported problem: {0}")]
    Unsupported(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// Error raised inside one player's sub-solve of the partition cascade.
    #[error("player {player}: {source}")]
    Player {
        player: usize,
        #[source]
        source: Box<TicError>,
    },
}

impl TicError {
    pub fn usage(msg: impl Into<String>) -> Self {
        TicError::Usage(msg.into())
    }

    pub fn domain(msg: impl Into<String>) -> Self {
        TicError::Domain(msg.into())
    }

    pub fn config(msg: impl Into<String>) -> Self {
        TicError::Config(msg.into())
    }

    pub fn unsupported(msg: impl Into<String>) -> Self {
        TicError::Unsupported(msg.into())
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        TicError::Io {
            path: path.into(),
            source,
        }
    }

    pub fn for_player(self, player: usize) -> Self {
        TicError::Player {
            player,
            source: Box::new(self),
        }
    }

    /// Process exit code: 2 usage, 3 numerical failure, 4 unsupported problem.
    pub fn exit_code(&self) -> i32 {
        match self {
            TicError::Usage(_)
            | TicError::Config(_)
            | TicError::Parse { .. }
            | TicError::Io { .. } => 2,
            TicError::Domain(_)
            | TicError::NumericalBlowup { .. }
            | TicError::NonContraction { .. } => 3,
            TicError::Unsupported(_) => 4,
            TicError::Player { source, .. } => source.exit_code(),
        }
    }
}
