use std::path::PathBuf;

/// Errors produced anywhere in the design and simulation pipeline.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("matrix is not symmetric: max |a_ij - a_ji| = {max_asymmetry:e} (scale {scale:e})")]
    NotSymmetric { max_asymmetry: f64, scale: f64 },

    #[error("node {node} has zero degree; L̂_R undefined")]
    ZeroDegree { node: usize },

    #[error("graph is disconnected; eigenvalue 1 of W is not simple")]
    Disconnected,

    #[error("no spectral mass below 1-κ; check κ, τ, density")]
    EmptyRegion,

    #[error("density has no mass above threshold τ = {tau:e}")]
    NoMassAboveThreshold { tau: f64 },

    #[error("design region contains λ = {lambda} ≥ 1; 1/(1-λ) undefined")]
    RegionTouchesUnity { lambda: f64 },

    #[error("linear program stalled after {pivots} pivots")]
    LpStall { pivots: usize },

    #[error("linear program internal error: {0}")]
    LpInternal(String),

    #[error("need {needed} distinct eigenvalues different from 1, found {found}")]
    InsufficientEigenvalues { needed: usize, found: usize },

    #[error("eigenvalue 1 is not simple: {count} eigenvalues within tolerance of 1")]
    UnitEigenvalueNotSimple { count: usize },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("realization slot {slot}: preconditions failed after {retries} retries ({reason})")]
    ResampleExhausted {
        slot: usize,
        retries: usize,
        reason: String,
    },

    #[error("density mass {mass} deviates more than 5% from 1")]
    MassDeviation { mass: f64 },

    #[error("{path}:{line}: {message}")]
    Format {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("config error at `{field}`: {message}")]
    Config { field: String, message: String },

    #[error("filter of degree {0} has no monomial form (capped at degree 10)")]
    NoMonomialForm(usize),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }

    pub(crate) fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            message: message.into(),
        }
    }

    /// True for errors caused by the user's configuration rather than numerics.
    pub fn is_config_error(&self) -> bool {
        matches!(self, Error::Config { .. } | Error::InvalidParameter(_))
    }

    /// True for numerical failures: empty regions, LP trouble, resampling exhausted.
    pub fn is_numerical_error(&self) -> bool {
        !self.is_config_error() && !matches!(self, Error::Io(_) | Error::Json(_) | Error::Format { .. })
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
