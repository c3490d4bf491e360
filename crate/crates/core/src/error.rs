use std::path::{Path, PathBuf};

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("core count {0} is not a power of 2; group and crown scheduling require a power-of-2 machine")]
    NotPowerOfTwo(u32),

    #[error("malformed model: {0}")]
    MalformedModel(String),

    #[error("LP relaxation is unbounded")]
    Unbounded,

    #[error("unknown variable `{0}` in solution")]
    UnknownVariable(String),

    #[error("constraint {index} (`{name}`) violated by {slack:e}")]
    ConstraintViolated { index: usize, name: String, slack: f64 },

    #[error("LP text parse error on line {line}: {msg}")]
    LpParse { line: usize, msg: String },

    #[error("solver assignment is inconsistent: {0}")]
    InconsistentAssignment(String),

    #[error("result carries no assignment")]
    NoAssignment,

    #[error("instance exceeds the enumeration budget (n <= 5, p <= 4, K <= 3): {0}")]
    BudgetExceeded(String),

    #[error("unrestricted baseline has no incumbent for p = {machine}, n = {n}, set {set_index}")]
    MissingBaseline { machine: u32, n: usize, set_index: usize },

    #[error("infeasible schedule produced for {0}")]
    InfeasibleSchedule(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        Error::Io { path: path.to_path_buf(), source }
    }
}
