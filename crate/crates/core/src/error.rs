use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("syntax error at byte {position}: {message}")]
    Syntax { position: usize, message: String },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("selection sigma = {sigma} is not below sigma* = {sigma_star}; the line-counting process is not positive recurrent")]
    AssumptionViolated { sigma: f64, sigma_star: f64 },

    #[error("truncation too coarse: {0}")]
    Truncation(String),

    #[error("singular system at row {row} (pivot ratio {condition_estimate:e})")]
    Singular { row: usize, condition_estimate: f64 },

    #[error("coefficient check failed at n = {n}: {message}")]
    InvalidCoefficients { n: usize, message: String },

    #[error("fixed-point iteration did not converge after {iterations} iterations (last change {last_change:e})")]
    NotConverged { iterations: usize, last_change: f64 },

    #[error("event budget of {0} exhausted")]
    BudgetExhausted(u64),

    #[error("inconsistent realization: {0}")]
    Inconsistent(String),
}
