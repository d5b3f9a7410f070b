//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// All landmarks coincide, so translation/scale removal is undefined.
    #[error("degenerate configuration: centroid size {size:.3e} is numerically zero")]
    DegenerateConfiguration { size: f64 },

    /// Shapes coincide within tolerance; the geodesic direction is undefined.
    #[error("zero shape distance ({rho:.3e}); geodesic direction undefined")]
    ZeroDistance { rho: f64 },

    /// Distance reaches the cut-locus margin; the shortest geodesic is not unique.
    #[error("distance {rho:.8} reaches the cut-locus margin pi/2 - 1e-8")]
    CutLocus { rho: f64 },

    /// Exponential-map argument outside the injectivity bound.
    #[error("tangent vector norm {norm:.8} >= pi/2; exponential map not injective")]
    VectorTooLong { norm: f64 },

    /// Configuration rank dropped below m-1; transport and projections are undefined.
    #[error("rank-deficient point: {context}")]
    RankDeficient { context: String },

    #[error("time {t} outside the range [{t_start}, {t_end}]")]
    TimeOutOfRange { t: f64, t_start: f64, t_end: f64 },

    #[error("duplicate or non-increasing time at index {index} (t = {time})")]
    DuplicateTimes { index: usize, time: f64 },

    #[error("too few points: got {got}, need at least {need}")]
    TooFewPoints { got: usize, need: usize },

    #[error("singular design matrix: {context}")]
    SingularDesign { context: String },

    #[error("{what}: {message}")]
    InvalidInput { what: &'static str, message: String },

    #[error("parse error at {path}:{line}: {message}")]
    Parse {
        path: String,
        line: usize,
        message: String,
    },

    #[error("validation error: {message}")]
    Validation { message: String },

    /// Simulated-truth construction could not reach the requested distances.
    #[error("simulation construction failed: {message}")]
    Construction { message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(what: &'static str, message: impl Into<String>) -> Self {
        Error::InvalidInput {
            what,
            message: message.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
