use std::io;
use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid attack model: {0}")]
    InvalidModel(String),

    #[error("{what} out of range: {value}")]
    Domain { what: &'static str, value: String },

    #[error("invalid stopping policy: {0}")]
    InvalidPolicy(String),

    #[error("enumeration over {n}! orderings refused (limit is n <= {limit})")]
    EnumerationTooLarge { n: u32, limit: u32 },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
}

impl Error {
    pub(crate) fn domain(what: &'static str, value: impl ToString) -> Self {
        Error::Domain {
            what,
            value: value.to_string(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
