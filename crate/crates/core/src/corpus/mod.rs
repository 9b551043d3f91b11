//! Corpus ingestion and persistence.

pub mod db;
pub mod files;
mod records;
pub mod rpc;

use std::path::{Path, PathBuf};

use thiserror::Error;

pub use db::{load_db, read_db, save_db, write_db, FingerprintRecord};
pub use records::{import_records, parse_records, write_records, CorpusManifest, ImportError, ImportReport};
pub use rpc::{fetch_code, FetchedCode, RpcConfig};

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("read failed: {0}")]
    Read(#[source] std::io::Error),
    #[error("line {line}: {message}")]
    Format { line: usize, message: String },
    #[error("fingerprint format version {found} does not match supported version {expected}")]
    Version { found: u32, expected: u32 },
    #[error("rpc: {0}")]
    Rpc(String),
    #[error("malformed rpc response: {0}")]
    Protocol(String),
}

impl CorpusError {
    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        CorpusError::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    pub(crate) fn format(line: usize, message: impl Into<String>) -> Self {
        CorpusError::Format {
            line,
            message: message.into(),
        }
    }
}
