use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid size: {0}")]
    InvalidSize(String),
    #[error("degenerate disorder: mean and standard deviation are both zero")]
    DegenerateDisorder,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("enumeration size cap exceeded: n = {n} > {cap}")]
    SizeCap { n: usize, cap: usize },
    #[error("domain error: {0}")]
    Domain(String),
    #[error("fixed point did not converge after {iterations} iterations (m = {m}, q = {q}, residual = {residual:e})")]
    Convergence {
        iterations: usize,
        m: f64,
        q: f64,
        residual: f64,
    },
    #[error("temperature mismatch: order parameters solved at T = {solved}, requested T = {requested}")]
    Consistency { solved: f64, requested: f64 },
    #[error("target energy {target} is outside the bracket range [{lo}, {hi}]")]
    Unbracketable { target: f64, lo: f64, hi: f64 },
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("oracle inconsistency: value {value} lies below ground energy {ground}")]
    OracleInconsistency { value: f64, ground: f64 },
    #[error("insufficient data: need at least {needed} points, got {got}")]
    InsufficientData { needed: usize, got: usize },
    #[error("config error: {0}")]
    Config(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
