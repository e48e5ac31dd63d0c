use thiserror::Error;

/// Errors raised by the signal, PHY, estimation and solver layers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("empty input vector")]
    EmptyInput,

    #[error("non-finite entry at index {index}")]
    NonFinite { index: usize },

    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("sparsity violated: {nonzeros} nonzero taps exceed bound {bound}")]
    SparsityViolated { nonzeros: usize, bound: usize },

    #[error("payload has {got} bits, frame expects {expected}")]
    PayloadSize { expected: usize, got: usize },

    #[error("pilot magnitude on tone {tone} is zero")]
    ZeroPilotMagnitude { tone: usize },

    #[error("received signal too short: need {needed} samples, got {got}")]
    SignalTooShort { needed: usize, got: usize },

    #[error("normal matrix is singular or not positive definite")]
    Singular,

    #[error("residual bound {eps:.3e} is infeasible: smallest achievable residual is {min_residual:.3e}")]
    Infeasible { eps: f64, min_residual: f64 },

    #[error(
        "leading auto-convolution coefficient vanishes (|a0| = {magnitude:.3e}); cannot divide by the leading tap"
    )]
    DegenerateLeadingTap { magnitude: f64 },

    #[error("solver stopped after {iterations} iterations without converging (primal {primal:.3e}, dual {dual:.3e})")]
    NotConverged { iterations: usize, primal: f64, dual: f64 },

    #[error("{path}: {message}")]
    Io { path: String, message: String },

    #[error("negative parameter `{name}`")]
    NegativeParameter { name: &'static str },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: &std::path::Path, err: impl std::fmt::Display) -> Self {
        Error::Io {
            path: path.display().to_string(),
            message: err.to_string(),
        }
    }
}
