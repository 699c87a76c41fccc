use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("singular kernel: source and observation points coincide at {0:?}")]
    Singular([f64; 3]),

    #[error("geometry error: {0}")]
    Geometry(String),

    #[error("numerical conditioning error: {0}")]
    Conditioning(String),

    #[error("degenerate channel: {0}")]
    DegenerateChannel(String),

    #[error("degenerate mode {index}: radiated field is identically zero")]
    DegenerateMode { index: usize },

    #[error("framing error: {0}")]
    Framing(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("bad file format in {path}: {reason}")]
    Format { path: PathBuf, reason: String },
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Io { .. } | Error::Format { .. } => 3,
            Error::Conditioning(_) | Error::DegenerateChannel(_) | Error::DegenerateMode { .. } => {
                4
            }
            _ => 2,
        }
    }
}
