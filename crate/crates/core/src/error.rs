use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("weak value undefined: pre- and postselected states are orthogonal (|<post|pre>| = {overlap:e})")]
    OrthogonalStates { overlap: f64 },

    #[error("degenerate distribution: delta = 0 and epsilon = 0 leave no photon in the postselected port")]
    DegenerateDistribution,

    #[error("frequency grid does not satisfy the Fourier sampling requirements: {0}")]
    GridTooCoarse(String),

    #[error("events are not ordered by absolute time (index {index})")]
    UnorderedEvents { index: usize },

    #[error("dead-time correction saturated at bin {bin}: dead probability {occupancy:.4} >= 0.99")]
    Saturation { bin: usize, occupancy: f64 },

    #[error("singular normal equations in {0}")]
    Singular(String),

    #[error("fit did not converge: {0}")]
    NonConvergence(String),

    #[error("reference measurements disagree: background amplitudes per shot differ by {relative:.2}% (limit 5%)")]
    Stability { relative: f64 },

    #[error("analysis window [{lo:e}, {hi:e}] s contains no usable bins")]
    EmptyWindow { lo: f64, hi: f64 },

    #[error("histograms are incompatible: {0}")]
    Incompatible(String),

    #[error("malformed {what} file {path:?}: {reason}")]
    Format { what: &'static str, path: PathBuf, reason: String },

    #[error("config parse error at line {line}: {message}")]
    ConfigParse { line: usize, message: String },

    #[error("config validation failed for `{key}`: {reason}")]
    Validation { key: String, reason: String },

    #[error("stage `{stage}` failed: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },

    #[error("I/O error on {path:?}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter { name, reason: reason.into() }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    /// Wraps `self` with the name of the pipeline stage that produced it.
    pub fn in_stage(self, stage: &'static str) -> Self {
        match self {
            e @ Error::Stage { .. } => e,
            e => Error::Stage { stage, source: Box::new(e) },
        }
    }
}
