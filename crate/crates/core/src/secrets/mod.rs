//! Secret formats, deterministic secret generation, corpus ingestion and
//! regex scanning.

mod corpus;
mod generate;
mod pattern;
mod scan;

use std::path::PathBuf;

pub use corpus::{ingest, Corpus, CorpusManifest, Document, FileEntry, IngestOptions, DEFAULT_MAX_DOCUMENT_BYTES};
pub use generate::{generate, generate_mixed};
pub use pattern::{
    bundled_pattern_json, bundled_patterns, load_pattern_file, parse_pattern_file, PatternSpec, SecretPattern,
    Segment,
};
pub use scan::{scan, SecretRecord, SecretSource};

#[derive(Debug, thiserror::Error)]
pub enum SecretError {
    #[error("unsupported regex construct `{construct}` at offset {position}")]
    UnsupportedConstruct { construct: String, position: usize },
    #[error("invalid class range {from:?}-{to:?}")]
    InvalidRange { from: char, to: char },
    #[error("empty character class")]
    EmptyClass,
    #[error("empty pattern")]
    EmptyPattern,
    #[error("path does not exist: {0}")]
    MissingPath(PathBuf),
    #[error("no readable documents under the given paths")]
    NoDocuments,
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed pattern file: {0}")]
    Json(#[from] serde_json::Error),
}
