//! BPE vocabulary construction, segmentation, decoding and (de)serialization,
//! including import of model-hub `tokenizer.json` files.

mod bytes;
mod encode;
mod hub;
mod io;
mod pretoken;
mod train;
mod vocab;

use std::path::PathBuf;

pub use bytes::{byte_to_char, byte_token_name, char_to_byte};
pub use encode::TokenSequence;
pub use hub::{import_hub_file, import_hub_json, HubImport};
pub use io::FORMAT_VERSION;
pub use pretoken::{Piece, PreTokenMode, PreTokenRules};
pub use train::{train, TrainOptions};
pub use vocab::{MergeRule, SymbolMode, Vocabulary, VocabularyParts};

#[derive(Debug, thiserror::Error)]
pub enum TokenizerError {
    #[error("training corpus is empty")]
    EmptyCorpus,
    #[error("target size {target} is below the base alphabet size {alphabet}")]
    TargetTooSmall { target: usize, alphabet: usize },
    #[error("symbol {symbol:?} at byte offset {offset} is not in the base alphabet")]
    UnknownSymbol { offset: usize, symbol: char },
    #[error("unknown token id {0}")]
    UnknownId(u32),
    #[error("invalid vocabulary: {0}")]
    InvalidVocabulary(String),
    #[error("unsupported tokenizer file: {0}")]
    UnsupportedFormat(String),
    #[error("vocabulary format version {found} is not supported (expected {expected})")]
    VersionMismatch { found: u64, expected: u32 },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed JSON: {0}")]
    Json(#[from] serde_json::Error),
}
