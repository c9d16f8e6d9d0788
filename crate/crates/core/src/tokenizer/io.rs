//! Native vocabulary file.
//!
//! ```json
//! {"format_version": 1, "base_alphabet": [..], "merges": [["l", "r"], ..],
//!  "vocab": {"token": id, ..}, "pretoken": {..}, "symbols": "chars"}
//! ```
//!
//! Merge rank is the list index. Keys are written in sorted order so the
//! output is canonical; the fingerprint is a hash of the compact form.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::pretoken::PreTokenRules;
use super::vocab::{SymbolMode, Vocabulary, VocabularyParts};
use super::TokenizerError;

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub(crate) struct NativeFile {
    format_version: u32,
    base_alphabet: Vec<String>,
    merges: Vec<(String, String)>,
    vocab: BTreeMap<String, u32>,
    pretoken: PreTokenRules,
    #[serde(default)]
    symbols: SymbolMode,
}

impl From<&Vocabulary> for NativeFile {
    fn from(v: &Vocabulary) -> Self {
        Self {
            format_version: FORMAT_VERSION,
            base_alphabet: v.base_alphabet().to_vec(),
            merges: v.merges().iter().map(|m| (m.left.clone(), m.right.clone())).collect(),
            vocab: v.token_map().into_iter().map(|(t, id)| (t.to_owned(), id)).collect(),
            pretoken: v.pretoken(),
            symbols: v.symbols(),
        }
    }
}

impl Vocabulary {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(&NativeFile::from(self)).expect("native file serializes");
        s.push('\n');
        s
    }

    pub fn from_json(json: &str) -> Result<Self, TokenizerError> {
        let value: serde_json::Value = serde_json::from_str(json)?;
        let found = value.get("format_version").and_then(|v| v.as_u64());
        match found {
            Some(v) if v == u64::from(FORMAT_VERSION) => {}
            Some(v) => return Err(TokenizerError::VersionMismatch { found: v, expected: FORMAT_VERSION }),
            None => return Err(TokenizerError::InvalidVocabulary("missing format_version".into())),
        }
        let file: NativeFile = serde_json::from_value(value)?;
        Vocabulary::from_parts(VocabularyParts {
            base_alphabet: file.base_alphabet,
            merges: file.merges,
            vocab: file.vocab.into_iter().collect(),
            symbols: file.symbols,
            pretoken: file.pretoken,
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), TokenizerError> {
        let path = path.as_ref();
        fs::write(path, self.to_json()).map_err(|source| TokenizerError::Io { path: path.to_owned(), source })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, TokenizerError> {
        let path = path.as_ref();
        let json = fs::read_to_string(path).map_err(|source| TokenizerError::Io { path: path.to_owned(), source })?;
        Self::from_json(&json)
    }
}
