use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("manifest error: {0}")]
    Manifest(String),

    #[error("world generation gave up at counter {counter} after {rejections} consecutive rejections")]
    GenerationFailed { counter: u64, rejections: u64 },

    #[error("world index {index} out of range for a manifest of {len} worlds")]
    WorldIndex { index: usize, len: usize },

    #[error("state belongs to a different machine geometry")]
    GeometryMismatch,

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("strategy process error: {0}")]
    Strategy(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
