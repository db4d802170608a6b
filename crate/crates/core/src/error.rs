use thiserror::Error;

/// Errors raised across the crate.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("time {t} outside of span [{start}, {end}]")]
    OutOfRange { t: f64, start: f64, end: f64 },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("propagation failed at t = {t}: {reason}")]
    Propagation { t: f64, reason: String },

    #[error("query time {t} precedes measurement time {t_meas}")]
    BeforeMeasurement { t: f64, t_meas: f64 },

    #[error("model singularity: {0}")]
    Singularity(String),

    #[error("degenerate geometry: {0}")]
    DegenerateGeometry(String),

    #[error("empty perceived safe set")]
    EmptySafeSet,

    #[error("usage error: {0}")]
    Usage(String),

    #[error("no valid initial commitment: {0}")]
    Startup(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
