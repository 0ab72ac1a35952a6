use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum BenchError {
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{}: bad magic number {observed:02x?}, expected {expected:#010x}", path.display())]
    BadMagic { path: PathBuf, observed: Vec<u8>, expected: u32 },
    #[error("{}: truncated {what}: expected {expected} bytes, found {actual}", path.display())]
    Truncated { path: PathBuf, what: &'static str, expected: usize, actual: usize },
    #[error("{}: {message}", path.display())]
    Format { path: PathBuf, message: String },
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("invalid record: {0}")]
    InvalidRecord(String),
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Core(#[from] entropic_ot::Error),
}

impl BenchError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        BenchError::Io { path: path.into(), source }
    }

    pub fn usage(msg: impl Into<String>) -> Self {
        BenchError::Usage(msg.into())
    }

    pub fn is_usage(&self) -> bool {
        matches!(self, BenchError::Usage(_))
    }
}

pub type Result<T> = std::result::Result<T, BenchError>;
