use std::path::PathBuf;

use thiserror::Error;

use crate::geometry::ProjectionError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Projection(#[from] ProjectionError),

    #[error("region at ({x}, {y}) of size {width}x{height} exceeds {plane_width}x{plane_height} plane")]
    RegionOutOfBounds {
        x: i64,
        y: i64,
        width: usize,
        height: usize,
        plane_width: usize,
        plane_height: usize,
    },

    #[error("block size mismatch: expected {expected} samples, got {actual}")]
    BlockSizeMismatch { expected: usize, actual: usize },

    #[error("loss pattern infeasible: {0}")]
    InfeasiblePattern(String),

    #[error("block at ({x}, {y}) cannot be concealed by equisolid re-projection")]
    InfeasibleBlock { x: usize, y: usize },

    #[error("loss set is empty")]
    EmptyLossSet,

    #[error("no frames to aggregate")]
    EmptyScores,

    #[error("plane dimensions differ: {0}x{1} vs {2}x{3}")]
    DimensionMismatch(usize, usize, usize, usize),

    #[error("{path}: truncated file ({len} bytes is not a multiple of the {frame_size}-byte frame)")]
    TruncatedFile {
        path: PathBuf,
        len: u64,
        frame_size: usize,
    },

    #[error("unknown input format '{0}'")]
    UnknownFormat(String),

    #[error("unknown engine '{0}'")]
    UnknownEngine(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Image {
        path: PathBuf,
        #[source]
        source: image::ImageError,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
