use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A configuration value violates its documented range.
    #[error("configuration error: {0}")]
    Config(String),

    /// A function argument is malformed (empty input, unknown attribute, length mismatch).
    #[error("invalid argument: {0}")]
    Argument(String),

    /// A window is too short for the trimmed average.
    #[error("window has {len} samples, at least 3 are required")]
    WindowSize { len: usize },

    /// The data make the statistic undefined (zero variance).
    #[error("degenerate data: {0}")]
    Degenerate(String),

    /// Error raised while processing a specific analysis window.
    #[error("window {window_id}: {source}")]
    InWindow {
        window_id: usize,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub(crate) fn argument(msg: impl Into<String>) -> Self {
        Error::Argument(msg.into())
    }

    /// Strips window context, returning the underlying error.
    pub fn root(&self) -> &Error {
        match self {
            Error::InWindow { source, .. } => source.root(),
            other => other,
        }
    }
}
