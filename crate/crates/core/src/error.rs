use thiserror::Error;

/// Errors raised by mesh construction, solvers and model evaluation.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid spec: {0}")]
    InvalidSpec(String),
    #[error("invalid mesh: {0}")]
    InvalidMesh(String),
    #[error("level set is empty: t = {t} lies outside ({min}, {max})")]
    LevelEmpty { t: f64, min: f64, max: f64 },
    #[error("numerical degeneracy: {0}")]
    NumericalDegeneracy(String),
    #[error("no convergence after {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("smoother parameter epsilon = {0} outside (0, 0.2) or leaves no linear part")]
    EpsilonOutOfRange(f64),
    #[error("zero denominator in quotient")]
    ZeroDenominator,
    #[error("Rayleigh quotient is not bounded below (beta = {beta})")]
    IndefiniteQuotient { beta: f64 },
    #[error("parameters (kappa = {kappa}, lambda = {lambda}) sit on a case boundary")]
    AmbiguousCase { kappa: f64, lambda: f64 },
    #[error("noncompact model requires a cutoff")]
    MissingCutoff,
    #[error("root not bracketed: {0}")]
    RootNotBracketed(String),
    #[error("heat dispersion is infinite (noncompact model with positive bulk coefficient)")]
    InfiniteDispersion,
    #[error("boundary measures differ: surface {surface}, model {model}")]
    BoundaryMeasureMismatch { surface: f64, model: f64 },
    #[error("length mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
