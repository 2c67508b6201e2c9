use std::path::PathBuf;

use thiserror::Error;

use crate::model::Violation;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid projection task: {0}")]
    InvalidTask(String),

    #[error("invalid device capability: {0}")]
    InvalidDevice(String),

    #[error("invalid viewpoint set: {0}")]
    InvalidViewpoints(String),

    #[error("local computing infeasible: compute latency {latency} s >= deadline {deadline} s")]
    InfeasibleCompute { latency: f64, deadline: f64 },

    #[error("3D/2D size ratio {alpha} must exceed 1")]
    AlphaDegenerate { alpha: f64 },

    #[error("negative discriminant {radicand} in optimal frequency (alpha = {alpha})")]
    NegativeDiscriminant { alpha: f64, radicand: f64 },

    #[error("policy violates structural properties: {0:?}")]
    InvalidPolicy(Vec<Violation>),

    #[error("shape mismatch: expected {expected}, got {got}")]
    ShapeMismatch { expected: usize, got: usize },

    #[error("count policy needs {needed} viewpoints but only {n} exist")]
    CountsExceedN { needed: u64, n: u64 },

    #[error("count policy caches {cache2d} 2D FOVs but computes only {compute} projections")]
    CountsInconsistent { cache2d: u64, compute: u64 },

    #[error("enumeration space {size} exceeds limit {limit}")]
    EnumerationTooLarge { size: u128, limit: u128 },

    #[error("instance with {n} viewpoints is too large for exhaustive search (max {max})")]
    TooLarge { n: usize, max: usize },

    #[error("popularity distribution invalid: {0}")]
    BadDistribution(String),

    #[error("route {route} infeasible for viewpoint {viewpoint}")]
    InfeasibleRoute { viewpoint: usize, route: u8 },

    #[error("LP failure at CCCP iteration {iteration}: {source}")]
    LpFailure {
        iteration: usize,
        #[source]
        source: LpError,
    },

    #[error("penalized objective increased from {previous} to {current} at iteration {iteration}")]
    NonDecreasingObjective {
        iteration: usize,
        previous: f64,
        current: f64,
    },

    #[error("config error in {path}: {message}")]
    Config { path: PathBuf, message: String },

    #[error("cannot parse {path} at line {line}, column {column}: {message}")]
    InstanceParse {
        path: PathBuf,
        line: usize,
        column: usize,
        message: String,
    },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Lp(#[from] LpError),
}

#[derive(Debug, Clone, Error, PartialEq)]
pub enum LpError {
    #[error("malformed program: {0}")]
    Malformed(String),

    #[error("simplex exceeded {limit} iterations")]
    NumericalBreakdown { limit: usize },

    #[error("program reported unbounded over a bounded domain")]
    UnexpectedUnbounded,

    #[error("solution failed verification: {0}")]
    Verification(String),
}

impl Error {
    /// Short machine-readable tag used in CLI error records.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Config { .. } => "ConfigError",
            Error::InstanceParse { .. } | Error::Io { .. } => "InstanceParseError",
            Error::InvalidTask(_)
            | Error::InvalidDevice(_)
            | Error::InvalidViewpoints(_)
            | Error::BadDistribution(_) => "InstanceParseError",
            _ => "SolverError",
        }
    }
}
