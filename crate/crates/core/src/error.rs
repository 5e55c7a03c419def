use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("non-physical {name} = {value:e} at field value {at:e}")]
    NonPhysicalProperty { name: &'static str, value: f64, at: f64 },

    #[error("time {t} outside signal range [{start}, {end}]")]
    OutOfRange { t: f64, start: f64, end: f64 },

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("diverged at t* = {time} (stage {stage}): non-finite state")]
    Diverged { time: f64, stage: usize },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    /// Numerical divergence, as opposed to bad input or I/O.
    pub fn is_divergence(&self) -> bool {
        matches!(self, Error::Diverged { .. })
    }
}
