use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("distance must be positive, got {0}")]
    NonPositiveDistance(f64),
    #[error("parameter `{name}` must be positive, got {value}")]
    NonPositiveParameter { name: &'static str, value: f64 },
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("zero transmit power on a selected link (user {user})")]
    ZeroPower { user: usize },
    #[error("interference-plus-noise covariance is not positive definite")]
    SingularCovariance,
    #[error("zero rate on a selected path: {0}")]
    ZeroRate(String),
    #[error("zero computing allocation on a selected path: {0}")]
    ZeroCompute(String),
    #[error("solver hit the iteration limit ({0} iterations)")]
    MaxIterationsExceeded(usize),
    #[error("no strictly feasible starting point")]
    NoStrictlyFeasiblePoint,
    #[error("box bounds have empty interior at variable {0}")]
    InfeasibleBox(usize),
    #[error("matrix is not Hermitian (asymmetry {0:e})")]
    NotHermitian(f64),
    #[error("infeasible: {0}")]
    Infeasible(String),
    #[error("capacity cannot be repaired: node {0} stays overloaded")]
    IrreparableCapacity(String),
    #[error("branch-and-bound budget of {0} nodes exceeded")]
    BudgetExceeded(usize),
    #[error("successive convex approximation diverged")]
    ScaDiverged,
    #[error("non-positive residual delay budget for user {user} ({budget:e} s)")]
    NegativeDelayBudget { user: usize, budget: f64 },
    #[error("scenario infeasible: {0:?}")]
    ScenarioInfeasible(Vec<String>),
    #[error("walker geometry: only {found} satellites inside the slant-range window, need {needed}")]
    EmptyVisibility { found: usize, needed: usize },
    #[error("parse error: {0}")]
    ParseError(String),
    #[error("invalid field `{field}`: {reason}")]
    ValidationError { field: String, reason: String },
    #[error("empty input")]
    EmptyInput,
    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
