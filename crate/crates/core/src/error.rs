use std::fmt;

/// Crate-wide error type.
#[derive(Debug)]
pub enum Error {
    /// A search task violated the session contract (empty action set,
    /// missing loss declaration, non-increasing tags, ...).
    Contract(String),
    /// Invalid or inconsistent run configuration.
    Config(String),
    /// Malformed input data. `line` is 1-based within the offending file.
    Corpus { line: usize, message: String },
    /// Model file could not be read or has an incompatible layout.
    Model(String),
    /// A gradient or weight became NaN/Inf during an update.
    Numeric { role: usize, coordinate: u64, detail: String },
    Io(std::io::Error),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Contract(m) => write!(f, "task contract violation: {m}"),
            Error::Config(m) => write!(f, "invalid configuration: {m}"),
            Error::Corpus { line, message } => write!(f, "line {line}: {message}"),
            Error::Model(m) => write!(f, "model file error: {m}"),
            Error::Numeric { role, coordinate, detail } => {
                write!(f, "numeric fault at role {role}, coordinate {coordinate}: {detail}")
            }
            Error::Io(e) => write!(f, "io error: {e}"),
        }
    }
}

impl std::error::Error for Error {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        match self {
            Error::Io(e) => Some(e),
            _ => None,
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e)
    }
}

pub type Result<T> = std::result::Result<T, Error>;
