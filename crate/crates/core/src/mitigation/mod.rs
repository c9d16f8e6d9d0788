//! Countermeasures against gibberish bias: finding tokens that mostly serve
//! random strings, deleting them from a vocabulary, and encoding matched
//! secrets one character per token.

mod gibberish;
mod guard;
mod strip;

use crate::analysis::AnalysisError;
use crate::tokenizer::TokenizerError;

pub use gibberish::{identify_gibberish, vocab_difference, GibberishCandidates, GibberishScore, DEFAULT_GIBBERISH_EPSILON};
pub use guard::{guard_encode, GuardedEncoding, GuardedSpan};
pub use strip::{strip_tokens, StripSet};

#[derive(Debug, thiserror::Error)]
pub enum MitigationError {
    #[error("{0} corpus is empty")]
    EmptyCorpus(&'static str),
    #[error("smoothing epsilon must be positive, got {0}")]
    NonPositiveEpsilon(f64),
    #[error("token id {0} is not in the vocabulary")]
    UnknownId(u32),
    #[error("token {0:?} is not in the vocabulary")]
    UnknownToken(String),
    #[error("cannot strip base symbol {token:?} (id {id})")]
    BaseSymbol { id: u32, token: String },
    #[error("strip set lists {ids} ids but {tokens} tokens")]
    MismatchedStripSet { ids: usize, tokens: usize },
    #[error(transparent)]
    Tokenizer(#[from] TokenizerError),
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
    #[error("malformed strip set: {0}")]
    Json(#[from] serde_json::Error),
}
