use std::io;
use std::path::{Path, PathBuf};

use ciupath_core::{ChatError, DictionaryError, EvalError, MapError, NeuralError, StatsError, SynthError};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CheckpointError {
    #[error("not a checkpoint file (bad magic bytes)")]
    BadMagic,
    #[error("unsupported checkpoint version {found} (expected {expected})")]
    VersionMismatch { found: u32, expected: u32 },
    #[error("checkpoint header truncated in {0}")]
    Truncated(&'static str),
    #[error("tensor `{name}`: {message}")]
    CorruptTensor { name: String, message: String },
    #[error("checkpoint {0} is not valid UTF-8")]
    Utf8(&'static str),
    #[error("checkpoint config: {0}")]
    Config(NeuralError),
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: io::Error },
    /// A problem at a specific line of a file.
    #[error("{}:{line}: {message}", path.display())]
    Record { path: PathBuf, line: usize, message: String },
    #[error("{}: {message}", path.display())]
    File { path: PathBuf, message: String },
    #[error("{}: {source}", path.display())]
    Checkpoint { path: PathBuf, source: CheckpointError },
    #[error(transparent)]
    Neural(#[from] NeuralError),
    #[error(transparent)]
    Stats(#[from] StatsError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Synth(#[from] SynthError),
    #[error("{0}")]
    Config(String),
    /// Invalid flag combination detected after argument parsing.
    #[error("{0}")]
    Usage(String),
}

impl Error {
    pub fn io(path: &Path, source: io::Error) -> Self {
        Error::Io { path: path.to_path_buf(), source }
    }

    pub fn file(path: &Path, message: impl ToString) -> Self {
        Error::File { path: path.to_path_buf(), message: message.to_string() }
    }

    /// 2 for usage errors, 1 for everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Usage(_) => 2,
            _ => 1,
        }
    }
}

/// Attaches the offending path to a core parse error.
pub trait AtPath<T> {
    fn at(self, path: &Path) -> Result<T, Error>;
}

macro_rules! at_path {
    ($($t:ty),*) => {$(
        impl<T> AtPath<T> for Result<T, $t> {
            fn at(self, path: &Path) -> Result<T, Error> {
                self.map_err(|e| Error::file(path, e))
            }
        }
    )*};
}

at_path!(ChatError, DictionaryError, MapError);

impl<T> AtPath<T> for Result<T, CheckpointError> {
    fn at(self, path: &Path) -> Result<T, Error> {
        self.map_err(|source| Error::Checkpoint { path: path.to_path_buf(), source })
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn read_to_string(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

pub(crate) fn write(path: &Path, contents: impl AsRef<[u8]>) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    std::fs::write(path, contents).map_err(|e| Error::io(path, e))
}
