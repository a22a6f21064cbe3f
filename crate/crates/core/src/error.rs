use thiserror::Error;

use crate::kernel::KernelStatus;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// An input was outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// The convex subproblem solver did not converge.
    #[error("convex kernel stopped with status {status:?} at SCA iteration {iteration} (kkt residual {kkt_residual:.3e}, max violation {max_violation:.3e})")]
    Kernel {
        status: KernelStatus,
        iteration: usize,
        kkt_residual: f64,
        max_violation: f64,
    },

    #[error(transparent)]
    Config(#[from] crate::experiment::config::ConfigError),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
