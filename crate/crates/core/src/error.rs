use thiserror::Error;

/// Errors raised by the operator, lagrangian and solver layers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid grid: need a < b and M > 0 (a={a}, b={b}, M={m})")]
    InvalidGrid { a: f64, b: f64, m: usize },

    #[error("invalid stencil: {0}")]
    InvalidStencil(String),

    #[error("step mismatch: stencil eps={stencil}, grid eps={grid}")]
    StepMismatch { stencil: f64, grid: f64 },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("safety interval is empty: 4*N*eps = {width} exceeds b-a = {length}")]
    EmptySafetyInterval { width: f64, length: f64 },

    #[error("{name}({t}) is not {expected} (asymmetry {asymmetry:e})")]
    Symmetry {
        name: &'static str,
        expected: &'static str,
        t: f64,
        asymmetry: f64,
    },

    #[error("derivative of {0} was not supplied")]
    MissingDerivative(&'static str),

    #[error("singular parameters: {0}")]
    SingularParameters(String),

    #[error("singular linear system (condition estimate {condition:e})")]
    SingularSystem { condition: f64 },

    #[error("post-solve residual {residual:e} exceeds {bound:e}")]
    ResidualCheck { residual: f64, bound: f64 },

    #[error("margin delta={delta} does not exceed stencil reach 2*N*eps={reach}")]
    MarginTooSmall { delta: f64, reach: f64 },

    #[error("order fit needs at least 3 positive errors, got {0}")]
    TooFewPoints(usize),

    #[error("invalid sweep: {0}")]
    InvalidSweep(String),

    #[error("unknown {kind} key '{key}'")]
    UnknownKey { kind: &'static str, key: String },

    #[error("invalid lagrangian: {0}")]
    InvalidLagrangian(String),
}

pub type Result<T> = std::result::Result<T, Error>;
