use thiserror::Error;

pub type Result<T> = std::result::Result<T, BifiError>;

#[derive(Debug, Error)]
pub enum BifiError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("value {value} outside the canonical domain [-1, 1]")]
    Domain { value: f64 },

    #[error("basis size overflow for d = {d}, p = {p}")]
    SizeOverflow { d: usize, p: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("empty input: {0}")]
    Empty(String),

    #[error("non-finite entry in {0}")]
    NonFinite(String),

    #[error("no lambda on the grid attains the residual tolerance {kappa:.6e}; best residual {best_residual:.6e}")]
    Infeasible { kappa: f64, best_residual: f64 },

    #[error("rank {requested} exceeds the available rank {available}")]
    RankTooLarge { requested: usize, available: usize },

    #[error("degenerate case: {0}")]
    Degenerate(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("data error: {0}")]
    Data(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl BifiError {
    /// Process exit code for the CLI: 2 config, 3 data, 4 numerical.
    pub fn exit_code(&self) -> i32 {
        match self {
            BifiError::Config(_) | BifiError::Json(_) => 2,
            BifiError::Data(_)
            | BifiError::Io(_)
            | BifiError::DimensionMismatch(_)
            | BifiError::Domain { .. }
            | BifiError::Empty(_)
            | BifiError::NonFinite(_) => 3,
            BifiError::InvalidArgument(_)
            | BifiError::SizeOverflow { .. }
            | BifiError::RankTooLarge { .. } => 2,
            BifiError::Infeasible { .. } | BifiError::Degenerate(_) | BifiError::Numerical(_) => 4,
        }
    }
}
