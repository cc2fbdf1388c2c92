use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("game contract violated: metric {value} outside declared range [{min}, {max}]")]
    ContractViolation { value: f64, min: f64, max: f64 },

    #[error("game has {players} players, exact solver is capped at {cap}")]
    Capacity { players: usize, cap: usize },

    #[error("bernstein width is undefined before any sample (t = 0)")]
    UndefinedWidth,

    #[error("correlation undefined: {0}")]
    UndefinedCorrelation(String),

    #[error("unsupported game: {0}")]
    UnsupportedGame(String),

    #[error("checkpoint rejected: {0}")]
    Checkpoint(String),

    #[error("permutation {index}: {source}")]
    Permutation {
        index: u64,
        #[source]
        source: Box<Error>,
    },

    #[error("external evaluator{}: {message}", .id.map(|i| format!(" (request {i})")).unwrap_or_default())]
    Evaluator { id: Option<u64>, message: String },

    #[error("malformed input: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn arg(msg: impl Into<String>) -> Self {
        Error::Argument(msg.into())
    }

    /// True when the failure originated in an external evaluator process,
    /// looking through permutation context.
    pub fn is_evaluator_failure(&self) -> bool {
        match self {
            Error::Evaluator { .. } => true,
            Error::Permutation { source, .. } => source.is_evaluator_failure(),
            _ => false,
        }
    }
}
