use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix data length {len} does not match shape {rows}x{cols}")]
    ShapeData { rows: usize, cols: usize, len: usize },
    #[error("matrix contains a non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("SVD did not converge after {sweeps} sweeps")]
    NonConvergence { sweeps: usize },
    #[error("subspace fills the ambient space (k = D = {0}); no orthogonal complement")]
    FullSpace(usize),
    #[error("feature batch is numerically zero")]
    ZeroMatrix,
    #[error("geodesic parameter {0} outside [0, 1]")]
    OutOfRange(f64),
    #[error("vector is annihilated by the guidance metric (z^T Q z = {0:e})")]
    DegenerateProjection(f64),
    #[error("vector norm {0:e} too small to normalize")]
    ZeroVector(f64),
    #[error("encoder activation norm {0:e} too small to normalize")]
    ZeroActivation(f64),
    #[error("crop box {top},{left} {height}x{width} does not fit in {image_height}x{image_width}")]
    BoxOutOfBounds {
        top: usize,
        left: usize,
        height: usize,
        width: usize,
        image_height: usize,
        image_width: usize,
    },
    #[error("source and target prompts give identical text features")]
    DegenerateDirection,
    #[error("every ensemble member reproduces the source features")]
    DegenerateEnsemble,
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("image side {0} is smaller than the {1}-pixel SSIM window")]
    TooSmall(usize, usize),
    #[error("empty batch")]
    EmptyBatch,
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("bad magic in {path}: expected EMB1")]
    BadMagic { path: PathBuf },
    #[error("truncated payload in {path}: expected {expected} bytes, found {found}")]
    TruncatedPayload { path: PathBuf, expected: usize, found: usize },
    #[error("ragged rows in {path}: line {line} has {found} fields, expected {expected}")]
    RaggedRows { path: PathBuf, line: usize, expected: usize, found: usize },
    #[error("parse error in {path} line {line}: {message}")]
    Parse { path: PathBuf, line: usize, message: String },
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("at iterate {iterate}: {source}")]
    AtIterate { iterate: usize, source: Box<Error> },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    pub(crate) fn at_iterate(self, iterate: usize) -> Self {
        Error::AtIterate { iterate, source: Box::new(self) }
    }

    /// Strips any iterate context and returns the underlying error.
    pub fn root(&self) -> &Error {
        match self {
            Error::AtIterate { source, .. } => source.root(),
            other => other,
        }
    }

    /// True for errors caused by unreadable, missing or malformed files.
    pub fn is_input_error(&self) -> bool {
        matches!(
            self.root(),
            Error::Io { .. }
                | Error::BadMagic { .. }
                | Error::TruncatedPayload { .. }
                | Error::RaggedRows { .. }
                | Error::Parse { .. }
                | Error::InvalidConfig(_)
        )
    }
}
