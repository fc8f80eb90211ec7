use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("knot sequence is empty")]
    EmptyKnots,
    #[error("spline order must be at least 1, got {0}")]
    InvalidOrder(usize),
    #[error("knot at position {index} is not finite")]
    NonFiniteKnot { index: usize },
    #[error("knot sequence decreases at position {index}")]
    NotSorted { index: usize },
    #[error("boundary knots must repeat 0 and 1 exactly {order} times")]
    BadBoundary { order: usize },
    #[error("knot {value} starting at position {index} has multiplicity above the order {order}")]
    MultiplicityTooHigh { index: usize, value: f64, order: usize },
    #[error("index {index} out of range for length {len}")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("infeasible size: {0}")]
    InfeasibleSize(String),
    #[error("point coordinate {value} lies outside [0, 1]")]
    OutOfDomain { value: f64 },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("matrix is not positive definite (pivot {pivot} is {value})")]
    NotPositiveDefinite { pivot: usize, value: f64 },
    #[error("size {size} exceeds the cap {cap}")]
    SizeCapExceeded { size: usize, cap: usize },
    #[error("decay fit needs at least 3 usable distances, found {usable}")]
    DegenerateFit { usable: usize },
    #[error("maximal function vanishes at a point where the projection is {projection}")]
    DivisionByZeroRegion { projection: f64 },
    #[error("precondition violated: {0}")]
    PreconditionViolated(String),
    #[error("alpha = {alpha} gives N = floor(alpha) < 2")]
    DegenerateAlpha { alpha: f64 },
    #[error("construction needs {count} pieces, cap is {cap}")]
    MeshBlowup { count: String, cap: usize },
    #[error("rectangle average {average} is below the required {required}")]
    HypothesisNotMet { average: f64, required: f64 },
    #[error("set {index} is not contained in its rectangle")]
    NotSubset { index: usize },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, Error>;
