use thiserror::Error;

use crate::ascent::Trajectory;
use crate::polytope::PolytopeTrajectory;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("argument {what} = {value} is outside its domain {domain}")]
    Domain {
        what: &'static str,
        value: f64,
        domain: &'static str,
    },

    #[error("mixture has no positive coefficient with p >= 2")]
    NotASpinGlass,

    #[error("mixture coefficient gamma_{p} = {gamma} is negative")]
    NegativeCoefficient { p: usize, gamma: f64 },

    #[error("invalid mixture: {0}")]
    InvalidMixture(String),

    #[error("degree {p} tensor needs {entries} entries, over the budget of {budget}")]
    DegreeTooLarge { p: usize, entries: u128, budget: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("dense threshold exceeded: {dim} > {threshold}")]
    DenseThresholdExceeded { dim: usize, threshold: usize },

    #[error("index set is empty")]
    EmptySubset,

    #[error("index {index} out of range for dimension {n}")]
    IndexOutOfRange { index: usize, n: usize },

    #[error("subspace intersection is the zero subspace")]
    ResultEmpty,

    #[error("requested {k} eigenpairs from a {dim}-dimensional operator")]
    KOutOfRange { k: usize, dim: usize },

    #[error("eigensolver did not converge after {iterations} iterations (residual {residual:e})")]
    ConvergenceFailure { iterations: usize, residual: f64 },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("point is already a corner: no free directions remain")]
    AtCorner,

    #[error("ascent stopped after {} steps without terminating", .0.steps.len())]
    MaxStepsExceeded(Box<Trajectory>),

    #[error("polytope ascent stopped after {} steps without reaching a corner", .0.steps.len())]
    PolytopeMaxStepsExceeded(Box<PolytopeTrajectory>),

    #[error("point violates constraint {constraint} by {violation:e}")]
    PointOutside { constraint: usize, violation: f64 },

    #[error("direction vector is zero")]
    ZeroDirection,

    #[error("ray is unbounded: polytope is not bounded in this direction")]
    UnboundedRay,

    #[error("invalid polytope: {0}")]
    InvalidPolytope(String),

    #[error("invalid disorder file: {0}")]
    InvalidDump(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
