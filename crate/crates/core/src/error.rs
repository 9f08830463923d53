use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A parameter or input violated a documented precondition.
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("OPO pump parameter {0} is at or above threshold (must be < 1)")]
    AboveThreshold(f64),

    #[error("both OPOs squeeze the same quadrature; the EPR arrangement needs one X- and one P-squeezed input")]
    AmbiguousConfiguration,

    #[error("temporal mode is not unit-norm (norm² = {0})")]
    NotNormalized(f64),

    #[error("numerical integration did not converge: estimated error {error:e} after {intervals} intervals")]
    QuadratureNonConvergence { error: f64, intervals: usize },

    #[error("sample rate {fs} Hz too low: PSD deviates from vacuum by {deviation:.4} at Nyquist (limit 0.01)")]
    Aliasing { fs: f64, deviation: f64 },

    #[error("mismatched inputs: {0}")]
    Mismatch(String),

    #[error("vacuum calibration failure: {0}")]
    Calibration(String),

    #[error("search bracket failure: {reason}")]
    Bracket {
        reason: String,
        trace: Vec<(Vec<f64>, f64)>,
    },

    #[error("malformed record: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
