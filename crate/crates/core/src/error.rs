use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("distance {distance} lies outside the cell of radius {radius}")]
    OutOfCell { distance: f64, radius: f64 },

    #[error("channel gain {gain} on subchannel {index} is not positive")]
    InvalidChannel { index: usize, gain: f64 },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("access probability is zero, average delay is unbounded")]
    InfiniteDelay,

    #[error("instance needs {required} enumeration steps, budget is {budget}")]
    TooLargeInstance { required: u128, budget: u128 },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("work budget exceeded: {0}")]
    Budget(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
