use thiserror::Error;

use crate::expr::{EvalError, ParseError};

/// Every failure the toolkit reports. [`JlmError::exit_code`] maps them onto
/// the command-line convention: 1 for bad input, 2 when a method gives up.
#[derive(Debug, Clone, Error)]
pub enum JlmError {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("invalid input: {0}")]
    Input(String),
    #[error("unknown model `{0}`")]
    UnknownModel(String),
    #[error("undeclared symbol `{symbol}` in {place}")]
    UndeclaredSymbol { symbol: String, place: String },
    #[error("unknown variable `{0}`")]
    UnknownVariable(String),
    #[error("no elementary antiderivative of `{term}` with respect to {var} in the supported class")]
    NotElementary { term: String, var: String },
    #[error("change of variables is not invertible: {0}")]
    NotInvertible(String),
    #[error("singular Jacobian: {0}")]
    SingularJacobian(String),
    #[error("ansatz insufficient: {0}")]
    AnsatzInsufficient(String),
    #[error("degenerate parameters: the solution requires {}", .constraints.join(", "))]
    DegenerateParameters { constraints: Vec<String> },
    #[error("verification failed for {what}: residual {residual}")]
    Unverified { what: String, residual: String },
    #[error("inconsistent integral: {0}")]
    InconsistentIntegral(String),
    #[error("incompatible quadratures: {0}")]
    IncompatibleQuadratures(String),
    #[error("on-shell residual depends on the velocity: {0}")]
    ResidualDependsOnVelocity(String),
    #[error("not conserved: dI/dt = {0}")]
    NotConserved(String),
    #[error("context mismatch: {0}")]
    ContextMismatch(String),
    #[error("state became non-finite at t = {time}")]
    NonFinite { time: f64 },
}

impl JlmError {
    pub fn exit_code(&self) -> i32 {
        match self {
            JlmError::Parse(_)
            | JlmError::Input(_)
            | JlmError::UnknownModel(_)
            | JlmError::UndeclaredSymbol { .. }
            | JlmError::UnknownVariable(_)
            | JlmError::ContextMismatch(_) => 1,
            _ => 2,
        }
    }
}

pub type Result<T, E = JlmError> = std::result::Result<T, E>;
