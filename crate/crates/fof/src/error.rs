use std::path::PathBuf;

/// Crate-wide error type.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },

    #[error("{path}:{line}: {msg}")]
    Parse {
        path: PathBuf,
        line: usize,
        msg: String,
    },

    #[error("face index {index} out of range (mesh has {vertices} vertices)")]
    FaceIndexOutOfRange { index: usize, vertices: usize },

    #[error("mesh is empty")]
    EmptyMesh,

    #[error("mesh bounding box is degenerate")]
    DegenerateBounds,

    #[error("mesh has zero surface area")]
    ZeroSurfaceArea,

    #[error("unknown shape `{0}`")]
    UnknownShape(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid coefficient field file: {0}")]
    Format(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("foreground mask selects no pixels")]
    EmptyMask,
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(path: impl Into<PathBuf>, line: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            line,
            msg: msg.into(),
        }
    }
}
