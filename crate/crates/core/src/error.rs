use thiserror::Error;

#[derive(Error, Debug, Clone, PartialEq)]
pub enum GlctError {
    #[error("parameter matrix is not unimodular: ad - bc = {det}")]
    NotUnimodular { det: f64 },
    #[error("|b| = {b:e} is below the b = 0 threshold; use the b = 0 decomposition")]
    BZero { b: f64 },
    #[error("|b| = {b:e} is not below the b = 0 threshold")]
    NotB0Case { b: f64 },
    #[error("adjacency is not symmetric (max deviation {max_deviation:e})")]
    NotSymmetric { max_deviation: f64 },
    #[error("invalid graph: {0}")]
    InvalidGraph(String),
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("numerical failure: {0}")]
    NumericalFailure(String),
    #[error("eigenvalue {re} + {im}i is not on the unit circle")]
    NotUnitModulus { re: f64, im: f64 },
    #[error("scaling factor must be positive, got {0}")]
    InvalidDelta(f64),
    #[error("operation not supported for recipe {0}")]
    UnsupportedRecipe(String),
    #[error("invalid generator spec: {0}")]
    InvalidSpec(String),
    #[error("NMSE denominator is zero")]
    DegenerateDenominator,
    #[error("parse error: {0}")]
    Parse(String),
    #[error("config error: {0}")]
    Config(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for GlctError {
    fn from(e: std::io::Error) -> Self {
        GlctError::Io(e.to_string())
    }
}

impl From<serde_json::Error> for GlctError {
    fn from(e: serde_json::Error) -> Self {
        GlctError::Parse(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, GlctError>;

impl GlctError {
    /// Process exit code: 2 validation, 3 numeric failure, 4 i/o.
    pub fn exit_code(&self) -> i32 {
        match self {
            GlctError::NumericalFailure(_)
            | GlctError::NotUnitModulus { .. }
            | GlctError::DegenerateDenominator => 3,
            GlctError::Io(_) => 4,
            _ => 2,
        }
    }
}
