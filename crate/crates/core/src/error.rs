use thiserror::Error;

/// Errors produced by the simulation kernels and experiment runners.
#[derive(Debug, Error)]
pub enum WvcfError {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("dimension overflow: {0}")]
    SizeOverflow(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("operator is not Hermitian (relative deviation {deviation:.3e})")]
    NotHermitian { deviation: f64 },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("post-selection failure: overlap magnitude {overlap:.3e} below threshold")]
    PostSelection { overlap: f64 },

    #[error("ill-conditioned pointer: {component}")]
    IllConditionedPointer { component: String },

    #[error("resource limit: {0}")]
    Resource(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl WvcfError {
    /// Process exit status used by the experiment runner.
    pub fn exit_code(&self) -> i32 {
        match self {
            WvcfError::Config(_)
            | WvcfError::Domain(_)
            | WvcfError::IllConditionedPointer { .. }
            | WvcfError::Resource(_)
            | WvcfError::Io(_)
            | WvcfError::Csv(_)
            | WvcfError::Json(_) => 2,
            WvcfError::DimensionMismatch { .. }
            | WvcfError::SizeOverflow(_)
            | WvcfError::NotHermitian { .. }
            | WvcfError::Numerical(_)
            | WvcfError::PostSelection { .. } => 3,
        }
    }
}

pub type Result<T> = std::result::Result<T, WvcfError>;
