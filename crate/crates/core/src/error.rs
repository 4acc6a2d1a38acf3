use flexagg_lp::LpError;

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid case: {field}: {reason}")]
    InvalidCase { field: String, reason: String },
    #[error("size cap exceeded: {what} needs {size}, cap is {cap}")]
    SizeCap { what: String, size: u128, cap: u128 },
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error("infeasible: {0}")]
    Infeasible(String),
    #[error("period {period}: setpoint {setpoint} violates {side} bound {bound}")]
    OutOfBand { period: usize, setpoint: f64, side: &'static str, bound: f64 },
    #[error("period {period}: no feasible dispatch for setpoint {setpoint} ({strategy} strategy)")]
    StepInfeasible { period: usize, setpoint: f64, strategy: String },
    #[error("invariant violated: {0}")]
    Invariant(String),
    #[error("grid too large: {points} points, limit {limit}")]
    GridTooLarge { points: u128, limit: u128 },
    #[error(transparent)]
    Lp(#[from] LpError),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(field: impl Into<String>, reason: impl Into<String>) -> Error {
    Error::InvalidCase { field: field.into(), reason: reason.into() }
}
