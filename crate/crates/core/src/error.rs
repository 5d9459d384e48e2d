use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("png decode error in {path}: {message}")]
    Png { path: PathBuf, message: String },

    #[error("unsupported image encoding in {path}: {detail}")]
    UnsupportedEncoding { path: PathBuf, detail: String },

    #[error("invalid image: {0}")]
    InvalidImage(String),

    #[error("degenerate geometry: {0}")]
    DegenerateGeometry(String),

    #[error("{path}:{line}: {message}")]
    Manifest {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("duplicate sample id `{0}`")]
    DuplicateId(String),

    #[error("invariant violation: {0}")]
    InvariantViolation(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("template `{0}` is not enrolled")]
    NotEnrolled(String),

    #[error("insufficient mask overlap between templates (best common bits {0})")]
    InsufficientOverlap(usize),

    #[error("only {survivors} candidates survived leakage filtering, {required} required")]
    InsufficientSurvivors { survivors: usize, required: usize },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("wrong input size: expected {expected}, got {actual}")]
    WrongInputSize { expected: String, actual: String },

    #[error("leakage verification failed: {0} retained samples match the gallery")]
    VerificationFailed(usize),

    #[error("work directory {0} is locked by another invocation")]
    Locked(PathBuf),

    #[error("malformed {kind} file {path}: {message}")]
    Format {
        kind: &'static str,
        path: PathBuf,
        message: String,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
