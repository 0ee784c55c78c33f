use thiserror::Error;

/// Errors raised by the analytic, control and simulation routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid service rate at index {index}: {value} (rates must be finite and > 0)")]
    NonPositiveRate { index: usize, value: f64 },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("{family} cannot reach mean {mean} with SCV {scv}: {reason}")]
    Parameterization {
        family: &'static str,
        mean: f64,
        scv: f64,
        reason: String,
    },

    #[error("unstable configuration: load {load} >= service rate {rate} at concurrency {k}")]
    Unstable { load: f64, rate: f64, k: usize },

    #[error("unstabilizable: load {load} >= maximal service rate {max_rate}")]
    Unstabilizable { load: f64, max_rate: f64 },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("stationary density not integrable on [0, {w_max}]: {reason}")]
    Truncation { w_max: f64, reason: String },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("solver did not converge: {0}")]
    NoConvergence(String),

    #[error("policy file: {0}")]
    PolicyFormat(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
