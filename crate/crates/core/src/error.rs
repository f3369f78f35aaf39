use thiserror::Error;

/// Errors produced anywhere in the toolkit.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("syntax error at position {position}: {message}")]
    Syntax { position: usize, message: String },

    #[error("unknown identifier `{0}`")]
    UnknownIdentifier(String),

    #[error("malformed contraction: {0}")]
    Structure(String),

    #[error("cannot evaluate: {0}")]
    Evaluation(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("immersion is singular at {point:?} (smallest singular value {sigma_min:e})")]
    RankDeficient { point: Vec<f64>, sigma_min: f64 },

    #[error("normal frame construction broke down at {point:?}")]
    NormalFrame { point: Vec<f64> },

    #[error("non-finite geometry at {point:?}")]
    NonFinite { point: Vec<f64> },

    #[error("inversion center {center:?} lies on the surface (distance {distance:e} at node {node:?})")]
    CenterOnSurface {
        center: Vec<f64>,
        distance: f64,
        node: Vec<f64>,
    },

    #[error("weight mismatch: expected {expected}, found {found}")]
    Weight { expected: i32, found: i32 },

    #[error("invalid input: {0}")]
    Invalid(String),
}

pub type Result<T> = std::result::Result<T, Error>;
