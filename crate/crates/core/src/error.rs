use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("column {0} is the zero vector; cosine similarity is undefined")]
    ZeroColumn(usize),

    #[error("knn = {knn} must lie in 1..={max} for a graph with {} nodes", max + 1)]
    KnnTooLarge { knn: usize, max: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("symmetric eigensolver did not converge within {0} iterations")]
    ConvergenceFailure(usize),

    #[error("|lambda|^{order} = {value:e} exceeds 1e150; enable spectrum normalization")]
    SpectralOverflow { order: usize, value: f64 },

    #[error("search direction is annihilated by the data (quadratic coefficient {0:e})")]
    DegenerateDirection(f64),

    #[error("non-finite value in {what} at iteration {iteration}")]
    NonFiniteValue {
        what: &'static str,
        iteration: usize,
    },

    #[error("model was trained on a different graph spectrum (fingerprint {expected:#010x}, got {found:#010x})")]
    FingerprintMismatch { expected: u32, found: u32 },

    #[error("corrupt model file: {0}")]
    CorruptFile(String),

    #[error("unsupported model file version {0}")]
    VersionMismatch(u32),

    #[error("bad IDX magic {found:#010x} in {path}, expected {expected:#010x}")]
    BadMagic {
        path: PathBuf,
        expected: u32,
        found: u32,
    },

    #[error("truncated file {0}")]
    TruncatedFile(PathBuf),

    #[error("{images} images but {labels} labels")]
    CountMismatch { images: usize, labels: usize },

    #[error("parse error at row {row}, column {col}: {msg}")]
    Parse { row: usize, col: usize, msg: String },

    #[error("class {class} has {available} images, {requested} requested")]
    InsufficientImages {
        class: u32,
        available: usize,
        requested: usize,
    },

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True for errors caused by the input data rather than by configuration.
    pub fn is_data_error(&self) -> bool {
        matches!(
            self,
            Error::ZeroColumn(_)
                | Error::BadMagic { .. }
                | Error::TruncatedFile(_)
                | Error::CountMismatch { .. }
                | Error::Parse { .. }
                | Error::InsufficientImages { .. }
                | Error::CorruptFile(_)
                | Error::VersionMismatch(_)
                | Error::FingerprintMismatch { .. }
                | Error::Io(_)
        )
    }
}

pub(crate) fn ensure_dims(ok: bool, msg: impl FnOnce() -> String) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(Error::DimensionMismatch(msg()))
    }
}
