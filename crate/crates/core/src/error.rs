use thiserror::Error;

use crate::compiler::CompileError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
#[error("dimension mismatch: expected {expected}, found {found}")]
pub struct DimensionMismatch {
    pub expected: usize,
    pub found: usize,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error(transparent)]
    Dimension(#[from] DimensionMismatch),
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("exact projection supports at most {max} constraints, got {got}")]
    TooManyConstraints { max: usize, got: usize },
    /// Indices are positions in the constraint list passed to the solver.
    #[error("feasible set is empty; conflicting constraints {conflicting:?}")]
    Infeasible { conflicting: Vec<usize> },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ScheduleError {
    #[error("polynomial exponent must be positive, got {0}")]
    NonPositiveExponent(f64),
    #[error("progress must lie in [0, 1], got {0}")]
    ProgressOutOfRange(f64),
    #[error("total steps must be at least 1")]
    ZeroSteps,
    #[error(transparent)]
    Dimension(#[from] DimensionMismatch),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EngineError {
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Schedule(#[from] ScheduleError),
    #[error(transparent)]
    Dimension(#[from] DimensionMismatch),
    #[error("guidance scale must be positive, got {0}")]
    NonPositiveGamma(f64),
    #[error("sign must be +1 or -1, got {0}")]
    InvalidSign(f64),
    #[error("expected {expected} negation branches, got {found}")]
    BranchCount { expected: usize, found: usize },
    #[error("unknown engine mode {0:?}; expected one of full, no_projection, no_scheduling")]
    UnknownMode(String),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum WorldError {
    #[error("condition selects no mixture component: {0}")]
    EmptyCondition(String),
    #[error("invalid world: {0}")]
    Invalid(String),
    #[error(transparent)]
    Dimension(#[from] DimensionMismatch),
    #[error("sampler needs at least {min} steps, got {got}")]
    TooFewSteps { min: usize, got: usize },
    #[error("entity {0:?} has no coordinate block in this world")]
    UnknownEntity(String),
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Schedule(#[from] ScheduleError),
}

/// Crate-wide error; each module also exposes its own narrower type.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Schedule(#[from] ScheduleError),
    #[error(transparent)]
    Compile(#[from] CompileError),
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    World(#[from] WorldError),
    #[error("bench: {0}")]
    Bench(String),
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed json in {path}: {source}")]
    Json {
        path: String,
        #[source]
        source: serde_json::Error,
    },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
