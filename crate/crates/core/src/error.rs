use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}` = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    #[error("degenerate series: {0}")]
    DegenerateSeries(String),

    #[error("invalid mean estimate {0}: must be positive")]
    InvalidMean(f64),

    #[error("domain mismatch: {0}")]
    DomainMismatch(String),

    #[error("degenerate support at y = {y}: approximating probability underflows")]
    DegenerateSupport { y: usize },

    #[error("truncation did not reach tail {tail} within {cap} support points")]
    TruncationCap { tail: f64, cap: usize },

    #[error("optimizer did not converge after {iterations} iterations (best objective {best})")]
    NonConvergence { iterations: usize, best: f64 },

    #[error("singular design matrix")]
    SingularDesign,

    #[error("invalid index range: {0}")]
    InvalidRange(String),

    #[error("forecast {0} is not a non-negative integer")]
    NonIntegerForecast(f64),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("invalid value {value:?} at line {line}: {msg}")]
    InvalidValue {
        line: usize,
        value: String,
        msg: &'static str,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn invalid(name: &'static str, value: f64, reason: &'static str) -> Self {
        Error::InvalidParameter {
            name,
            value,
            reason,
        }
    }
}
