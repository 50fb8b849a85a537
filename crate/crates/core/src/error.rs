use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid box: width={width}, height={height} (both must be finite and > 0)")]
    InvalidBox { width: f64, height: f64 },

    #[error("detection score {0} outside [0, 1]")]
    InvalidScore(f64),

    #[error("innovation covariance is numerically singular")]
    DegenerateFilter,

    #[error("kalman state has non-positive aspect ratio or height (a={aspect}, h={height})")]
    DegenerateState { aspect: f64, height: f64 },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("frame {got} received after frame {previous}; frames must be strictly increasing")]
    FrameOrder { previous: u32, got: u32 },

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("cannot access {path}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("training diverged at epoch {epoch} (loss is not finite)")]
    Divergence { epoch: usize },

    #[error("metric is undefined: {0}")]
    UndefinedMetric(&'static str),

    #[error("duplicate entry for frame {frame}, id {id}")]
    DuplicateEntry { frame: u32, id: i64 },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
