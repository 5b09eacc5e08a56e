use thiserror::Error;

/// Errors produced by the simulator.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid wall motion: {0}")]
    InvalidWall(String),

    #[error("time {t} is outside the wall window [0, {end}]")]
    OutOfWindow { t: f64, end: f64 },

    #[error("wall length is non-positive ({length}) at t = {t}")]
    NonPositiveLength { t: f64, length: f64 },

    #[error("reparametrized time {tau} is outside the achievable range [0, {max}]")]
    TauOutOfRange { tau: f64, max: f64 },

    #[error("coordinate {value} is outside [{lo}, {hi}]")]
    OutOfDomain { value: f64, lo: f64, hi: f64 },

    #[error("invalid wave packet: {0}")]
    InvalidPacket(String),

    #[error("projection under-resolved: residual {residual:.3e} exceeds limit {limit:.3e} (raise n_max or shrink d)")]
    UnderResolved { residual: f64, limit: f64 },

    #[error("pair {n} norm drifted by {drift:.3e} in one step (limit {limit:.1e})")]
    NormDrift { n: usize, drift: f64, limit: f64 },

    #[error("degenerate point on the parameter loop at index {index}")]
    Degenerate { index: usize },

    #[error("invalid parameter loop: {0}")]
    InvalidCycle(String),

    #[error("grid too coarse: {points_per_wavelength:.2} points per shortest wavelength (need at least 8)")]
    GridTooCoarse { points_per_wavelength: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("configuration error: {0}")]
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
