use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid letter {letter} for a free group of rank {rank}")]
    InvalidLetter { letter: i32, rank: u32 },

    #[error("rank mismatch: {0} vs {1}")]
    RankMismatch(u32, u32),

    #[error("rank must be at least 1")]
    ZeroRank,

    #[error("not an enlargement: {0}")]
    NotAnEnlargement(String),

    #[error("set is not grounded: {0}")]
    NotGrounded(String),

    #[error("invalid letter order: {0}")]
    InvalidLetterOrder(String),

    #[error("crescent is undefined for the identity")]
    IdentityCrescent,

    #[error("matrix is not positive semidefinite (min eigenvalue {min_eigenvalue:e})")]
    NotPsd { min_eigenvalue: f64 },

    #[error("matrix is singular (min eigenvalue {min_eigenvalue:e})")]
    Singular { min_eigenvalue: f64 },

    #[error("shape mismatch: expected {expected}, found {found}")]
    ShapeMismatch { expected: String, found: String },

    #[error("not a contraction: operator norm {0}")]
    NotContraction(f64),

    #[error("translation consistency violated by {0:e}")]
    ConsistencyViolation(f64),

    #[error("singular restriction at enumeration step {step}")]
    SingularPrefix { step: usize },

    #[error("word {word:?} is outside the explicit table of radius {radius}")]
    ExplicitOutOfRange { word: Vec<i32>, radius: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("group algebra element is zero")]
    ZeroElement,

    #[error("function is not positive definite on the requested set (min eigenvalue {min_eigenvalue:e})")]
    NotPositiveDefinite { min_eigenvalue: f64 },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
