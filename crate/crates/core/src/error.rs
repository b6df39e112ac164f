use thiserror::Error;

/// Errors raised by the pricing library and the experiment runner.
#[derive(Debug, Error)]
pub enum Error {
    #[error("move set needs at least {needed} points in dimension {dim}, got {got}")]
    TooFewPoints { needed: usize, dim: usize, got: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("convex hull of the move set has dimension {hull_dim} < {dim}")]
    DimensionDeficient { hull_dim: usize, dim: usize },

    #[error("origin is not in the interior of the convex hull of the move set")]
    OriginNotInterior,

    #[error("duplicate point at index {0}")]
    DuplicatePoint(usize),

    #[error("simplex vertices are affinely dependent")]
    SingularSystem,

    #[error("simplex does not contain the origin")]
    NotContaining,

    #[error("move set is not a lattice binomial product set")]
    NotLatticeBinomial,

    #[error("invalid parameters: {0}")]
    BadParams(String),

    #[error("payoff is not declared separable")]
    NotSeparable,

    #[error("separable decomposition disagrees with the payoff at {point:?}: {lhs} vs {rhs}")]
    ValidationFailed { point: Vec<f64>, lhs: f64, rhs: f64 },

    #[error("move set is not a direct product across the partition blocks")]
    NotProductAcrossBlocks,

    #[error("convexity check failed: {0}")]
    ConvexityCheckFailed(String),

    #[error("declared structure contradicted at layer {layer}, node {node}")]
    StructureCertificationFailed { layer: usize, node: usize },

    #[error("linear program failed: {0}")]
    LpNumericalFailure(String),

    #[error("negative probability {0} in the completed measure")]
    NegativeProbability(f64),

    #[error("explicit scheme unstable: dt/ds^2 = {ratio} > 1/2")]
    StabilityViolation { ratio: f64 },

    #[error("non-finite value in the solution field")]
    NonFiniteField,

    #[error("covariance matrix is not positive semidefinite")]
    NonPsd,

    #[error("point is not in the normalized half cube: {0}")]
    NotInHalfCube(String),

    #[error("exhaustive path enumeration needs {paths} paths, budget is {budget}")]
    PathBudgetExceeded { paths: f64, budget: f64 },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("verification failed: {0}")]
    VerificationFailed(String),
}

impl Error {
    /// Stable variant name for structured error output.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::TooFewPoints { .. } => "TooFewPoints",
            Error::DimensionMismatch { .. } => "DimensionMismatch",
            Error::DimensionDeficient { .. } => "DimensionDeficient",
            Error::OriginNotInterior => "OriginNotInterior",
            Error::DuplicatePoint(_) => "DuplicatePoint",
            Error::SingularSystem => "SingularSystem",
            Error::NotContaining => "NotContaining",
            Error::NotLatticeBinomial => "NotLatticeBinomial",
            Error::BadParams(_) => "BadParams",
            Error::NotSeparable => "NotSeparable",
            Error::ValidationFailed { .. } => "ValidationFailed",
            Error::NotProductAcrossBlocks => "NotProductAcrossBlocks",
            Error::ConvexityCheckFailed(_) => "ConvexityCheckFailed",
            Error::StructureCertificationFailed { .. } => "StructureCertificationFailed",
            Error::LpNumericalFailure(_) => "LpNumericalFailure",
            Error::NegativeProbability(_) => "NegativeProbability",
            Error::StabilityViolation { .. } => "StabilityViolation",
            Error::NonFiniteField => "NonFiniteField",
            Error::NonPsd => "NonPsd",
            Error::NotInHalfCube(_) => "NotInHalfCube",
            Error::PathBudgetExceeded { .. } => "PathBudgetExceeded",
            Error::Io(_) => "Io",
            Error::Json(_) => "Json",
            Error::Config(_) => "Config",
            Error::VerificationFailed(_) => "VerificationFailed",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
