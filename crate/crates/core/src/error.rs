use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("evaluation point must be positive, got {0}")]
    Domain(f64),

    #[error("integrating x^{power}·(ln x)^{log_exp} needs a log exponent above 2")]
    UnsupportedTerm { power: f64, log_exp: u8 },

    #[error("invalid term: {0}")]
    InvalidTerm(String),

    #[error("invalid interval ({lo}, {hi}): need 0 <= lo < hi < inf")]
    InvalidInterval { lo: f64, hi: f64 },

    #[error("invalid piecewise function: {0}")]
    InvalidFunction(String),

    #[error("function is singular at x = 0: {0}")]
    SingularAtZero(String),

    #[error("invalid atom spec: {0}")]
    InvalidSpec(String),

    #[error("no nontrivial atom: {constraints} constraints on {unknowns} coefficients leave a trivial null space")]
    Infeasible { constraints: usize, unknowns: usize },

    #[error("moment constraint {row} is numerically dependent (relative residual {residual:e} < 1e-8); interval too ill-conditioned")]
    NumericalRank { row: usize, residual: f64 },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("spec mismatch: {0}")]
    SpecMismatch(String),

    #[error("parameter outside the admissible domain: {0}")]
    ParameterDomain(String),

    #[error("integral diverges: {0}")]
    Divergent(String),
}
