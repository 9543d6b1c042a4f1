use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("invalid parameters: {constraint}")]
    InvalidParams { constraint: String },
    #[error("moment removal left the profile identically zero (shape lies in the polynomial span)")]
    DegenerateShape,
    #[error("packing error: {0}")]
    Packing(String),
    #[error("truncation insufficient: tail bound {tail:.3e} exceeds tolerance on value {value:.3e}; try t_max >= {suggested_t_max:.3e}")]
    TruncationInsufficient { tail: f64, value: f64, suggested_t_max: f64 },
    #[error("result sensitive to t_min: halving it moves the value by {change:.3e} (value {value:.3e})")]
    TminSensitive { change: f64, value: f64 },
    #[error("exterior tail diverges: (n+beta)p = {exponent} <= n = {n}")]
    TailDivergent { exponent: f64, n: usize },
    #[error("window too small: needs half-width >= {suggested:.3e}")]
    Window { suggested: f64 },
    #[error("cannot fit: {0}")]
    Fit(String),
    #[error("config error: {0}")]
    Config(String),
    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
