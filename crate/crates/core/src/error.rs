use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("invalid state: {0}")]
    InvalidState(String),
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("enumeration budget exceeded: {what} needs {required} entries, cap is {cap}")]
    Budget {
        what: String,
        required: String,
        cap: usize,
    },
    #[error("missing key {0}")]
    MissingKey(String),
    #[error("no convergence after {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("infeasible: {0}")]
    Infeasible(String),
    #[error("acceptance rate {rate:.3e} below floor {floor:.3e}; increase the envelope batch")]
    LowAcceptance { rate: f64, floor: f64 },
    #[error("internal error: {0}")]
    Internal(String),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = core::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidArgument(msg.into()))
}

/// `base^exp` as a table size, or a budget error when it exceeds `cap`.
pub fn table_size(base: usize, exp: usize, cap: usize, what: &str) -> Result<usize> {
    let mut size: usize = 1;
    for _ in 0..exp {
        match size.checked_mul(base) {
            Some(s) if s <= cap => size = s,
            _ => {
                return Err(Error::Budget {
                    what: what.to_string(),
                    required: format!("{base}^{exp}"),
                    cap,
                })
            }
        }
    }
    Ok(size)
}
