use thiserror::Error;

/// Errors raised by model construction, solvers, samplers and simulators.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("model violates `{condition}` at p = {point}")]
    InvalidModel { condition: String, point: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("expression error at offset {offset}: {message}")]
    Parse { message: String, offset: usize },

    #[error("hypergeometric parameter c = {c} is a nonpositive integer")]
    HypergeometricPole { c: f64 },

    #[error("series for {what} did not converge within {terms} terms")]
    SeriesNonConvergence { what: String, terms: usize },

    #[error("{stage}: no convergence ({detail})")]
    NonConvergence { stage: &'static str, detail: String },

    #[error("{stage}: integrator failure ({detail})")]
    Integrator { stage: &'static str, detail: String },

    #[error("{stage}: singular system")]
    Singular { stage: &'static str },

    #[error("density {value} below positivity floor at p = {point}")]
    PositivityFloor { point: f64, value: f64 },

    #[error("boundary {boundary} receives no jumps; nothing to reverse")]
    NoJumps { boundary: usize },

    #[error("internal inconsistency: {0}")]
    Internal(String),
}

pub type Result<T> = std::result::Result<T, Error>;
