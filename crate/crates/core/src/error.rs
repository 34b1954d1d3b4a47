use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: {message}")]
    Parse { line: u64, message: String },

    #[error("invalid group {group}: {message}")]
    Validation { group: String, message: String },

    #[error("missing column `{0}` in header")]
    MissingColumn(String),

    #[error("no compositions after filtering")]
    NoCompositions,

    #[error("nothing to cluster: need at least {needed} agents with picks, found {found}")]
    NothingToCluster { needed: usize, found: usize },

    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("kl divergence undefined: p[{index}] > 0 but q[{index}] = 0")]
    KlUndefined { index: usize },

    #[error("invalid distance matrix: {0}")]
    InvalidMatrix(String),

    #[error("cluster count {k} out of range {min}..={max}")]
    KOutOfRange { k: usize, min: usize, max: usize },

    #[error("empty cluster")]
    EmptyCluster,

    #[error("snapshots share no agents")]
    DisjointRosters,

    #[error("agent `{0}` is not in the roster")]
    UnknownAgent(String),

    #[error("infeasible model: {0}")]
    InfeasibleModel(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Whether the error stems from user-supplied input rather than a bug or I/O failure.
    pub fn is_input_error(&self) -> bool {
        matches!(
            self,
            Error::Parse { .. }
                | Error::Validation { .. }
                | Error::MissingColumn(_)
                | Error::NoCompositions
                | Error::NothingToCluster { .. }
                | Error::KOutOfRange { .. }
                | Error::DisjointRosters
                | Error::InfeasibleModel(_)
                | Error::Csv(_)
                | Error::Json(_)
        )
    }
}
