use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("site index {index} out of range 0..={max}")]
    SiteOutOfRange { index: usize, max: usize },

    #[error("invalid hopping profile: {0}")]
    InvalidProfile(String),

    #[error("invalid drive waveform: {0}")]
    InvalidDrive(String),

    #[error("drive is not periodic: {0}")]
    NotPeriodic(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("no root found for F0/omega in [{lo}, {hi}]")]
    RootSearchFailed { lo: f64, hi: f64 },

    #[error("initial state occupies site {occupied}, needs n <= {limit} for headroom")]
    Headroom { occupied: usize, limit: usize },

    #[error("matrix is not unitary: deviation {deviation:e} exceeds {tolerance:e}")]
    NotUnitary { deviation: f64, tolerance: f64 },

    #[error("numerical failure: {0}")]
    Numerical(String),
}

pub type Result<T> = std::result::Result<T, Error>;
