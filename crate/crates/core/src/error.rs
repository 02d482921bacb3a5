use thiserror::Error;

use crate::signal_model::SupportSet;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("samples are already quantized ({0})")]
    AlreadyQuantized(String),

    #[error("Bussgang gain undefined: input has zero energy")]
    UndefinedGain,

    #[error("eigendecomposition did not converge after {sweeps} sweeps (off-diagonal norm {residual:e})")]
    Decomposition { sweeps: usize, residual: f64 },

    #[error("selected dictionary columns became rank deficient after {} of the requested iterations", partial.len())]
    RankDeficient { partial: SupportSet },

    #[error("trial {trial}: {source}")]
    Trial {
        trial: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
