use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// The tariff violates `retail >= export`, which the threshold policy needs.
    #[error("retail rate {retail} is below export rate {export}")]
    PolicyAssumption { retail: f64, export: f64 },

    #[error("calibration error: {0}")]
    Calibration(String),

    /// A state that the threshold structure rules out; indicates a bug.
    #[error("internal invariant violated: {0}")]
    Invariant(String),

    #[error("input error: {0}")]
    Input(String),

    /// No retail rate in the bracket recovers the utility's costs.
    #[error("death spiral: expected utility surplus stays negative on [{lo}, {hi}] (best {best:.6} at {argmax:.4})")]
    DeathSpiral {
        lo: f64,
        hi: f64,
        best: f64,
        argmax: f64,
    },

    #[error("bracket error: {0}")]
    Bracket(String),

    #[error("undefined baseline: percentage change against zero")]
    UndefinedBaseline,

    #[error("{}: row {row}: {message}", file.display())]
    Schema {
        file: PathBuf,
        row: usize,
        message: String,
    },

    #[error("{}: {message}", file.display())]
    Alignment { file: PathBuf, message: String },

    #[error("{}: trace is empty", .0.display())]
    EmptyTrace(PathBuf),

    #[error("config error: {0}")]
    Config(String),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn is_death_spiral(&self) -> bool {
        matches!(self, Error::DeathSpiral { .. })
    }
}
