use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("filter design error: {0}")]
    Design(String),

    #[error("framing error: expected {expected} payload bits, got {got}")]
    Framing { expected: usize, got: usize },

    #[error("stream truncated: need {needed} samples from index {start}, have {available}")]
    Truncation {
        start: i64,
        needed: usize,
        available: usize,
    },

    #[error("active tap tuning error: {0}")]
    Tuning(String),

    #[error("synchronization failed: desired peak {desired_peak:.3}, SI peak {si_peak:.3}")]
    SyncFailure { desired_peak: f64, si_peak: f64 },

    #[error("channel estimation error: {0}")]
    Estimation(String),

    #[error("alignment error: {0}")]
    Alignment(String),

    #[error("undefined measurement: {0}")]
    Measurement(String),

    #[error("{path}:{line}:{column}: {message}")]
    Parse {
        path: String,
        line: usize,
        column: usize,
        message: String,
    },

    #[error("unknown {kind} strategy `{name}` (available: {available})")]
    UnknownStrategy {
        kind: &'static str,
        name: String,
        available: String,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
