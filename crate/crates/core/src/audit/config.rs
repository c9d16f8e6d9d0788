use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::AuditError;
use crate::analysis::{ProbeMode, DEFAULT_KL_EPSILON, DEFAULT_PROBE_ALPHABET, DEFAULT_RANK_TOP_K};
use crate::mitigation::DEFAULT_GIBBERISH_EPSILON;
use crate::secrets::{load_pattern_file, IngestOptions, DEFAULT_MAX_DOCUMENT_BYTES};
use crate::tokenizer::{PreTokenRules, SymbolMode};

pub const DEFAULT_OUTPUT_DIR: &str = "tokaudit-out";

/// Where the audited vocabulary comes from.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum TokenizerSource {
    /// Train on the audited corpus itself.
    Train {
        vocab_size: usize,
        #[serde(default)]
        pretoken: PreTokenRules,
        #[serde(default = "default_train_symbols")]
        symbols: SymbolMode,
        #[serde(default = "default_min_pair_count")]
        min_pair_count: u64,
    },
    /// A model-hub `tokenizer.json`.
    Import { path: PathBuf },
    /// A vocabulary file written by this tool.
    Native { path: PathBuf },
}

fn default_train_symbols() -> SymbolMode {
    SymbolMode::ByteFallback
}

fn default_min_pair_count() -> u64 {
    2
}

impl Default for TokenizerSource {
    fn default() -> Self {
        TokenizerSource::Train {
            vocab_size: 4096,
            pretoken: PreTokenRules::default(),
            symbols: default_train_symbols(),
            min_pair_count: default_min_pair_count(),
        }
    }
}

/// Everything a run depends on. Echoed verbatim into the report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AuditConfig {
    pub corpus_paths: Vec<PathBuf>,
    pub tokenizer: TokenizerSource,
    /// JSON pattern list; the bundled set when absent.
    pub pattern_file: Option<PathBuf>,
    pub secret_count: usize,
    pub probe_alphabet: String,
    pub probe_mode: ProbeMode,
    pub kl_epsilon: f64,
    pub rank_top_k: usize,
    pub gibberish_top_k: usize,
    pub gibberish_epsilon: f64,
    /// Strip the gibberish candidates and measure the effect.
    pub strip: bool,
    pub output_dir: PathBuf,
    pub seed: u64,
    pub text_field: String,
    pub max_document_bytes: usize,
    /// File extensions picked up when a corpus path is a directory.
    pub extensions: Vec<String>,
}

impl Default for AuditConfig {
    fn default() -> Self {
        Self {
            corpus_paths: Vec::new(),
            tokenizer: TokenizerSource::default(),
            pattern_file: None,
            secret_count: 10_000,
            probe_alphabet: DEFAULT_PROBE_ALPHABET.to_owned(),
            probe_mode: ProbeMode::Raw,
            kl_epsilon: DEFAULT_KL_EPSILON,
            rank_top_k: DEFAULT_RANK_TOP_K,
            gibberish_top_k: 50,
            gibberish_epsilon: DEFAULT_GIBBERISH_EPSILON,
            strip: true,
            output_dir: PathBuf::from(DEFAULT_OUTPUT_DIR),
            seed: 42,
            text_field: "text".to_owned(),
            max_document_bytes: DEFAULT_MAX_DOCUMENT_BYTES,
            extensions: IngestOptions::default().extensions,
        }
    }
}

fn invalid(msg: impl Into<String>) -> AuditError {
    AuditError::Validation(msg.into())
}

fn must_exist(path: &Path, what: &str) -> Result<(), AuditError> {
    if path.exists() {
        Ok(())
    } else {
        Err(invalid(format!("{what} {} does not exist", path.display())))
    }
}

impl AuditConfig {
    pub fn from_json(json: &str) -> Result<Self, AuditError> {
        serde_json::from_str(json).map_err(|e| invalid(format!("config: {e}")))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, AuditError> {
        let path = path.as_ref();
        let json = fs::read_to_string(path).map_err(|e| invalid(format!("config {}: {e}", path.display())))?;
        Self::from_json(&json)
    }

    /// Checks the whole configuration without touching the output directory.
    pub fn validate(&self) -> Result<(), AuditError> {
        if self.corpus_paths.is_empty() {
            return Err(invalid("no corpus paths given"));
        }
        for p in &self.corpus_paths {
            must_exist(p, "corpus path")?;
        }
        match &self.tokenizer {
            TokenizerSource::Train { vocab_size, min_pair_count, .. } => {
                if *vocab_size == 0 {
                    return Err(invalid("tokenizer.vocab_size must be positive"));
                }
                if *min_pair_count == 0 {
                    return Err(invalid("tokenizer.min_pair_count must be at least 1"));
                }
            }
            TokenizerSource::Import { path } => must_exist(path, "tokenizer file")?,
            TokenizerSource::Native { path } => must_exist(path, "vocabulary file")?,
        }
        if let Some(p) = &self.pattern_file {
            must_exist(p, "pattern file")?;
            let pats = load_pattern_file(p).map_err(|e| invalid(format!("pattern file: {e}")))?;
            if pats.is_empty() {
                return Err(invalid("pattern file lists no patterns"));
            }
        }
        if self.secret_count == 0 {
            return Err(invalid("secret_count must be positive"));
        }
        let chars: Vec<char> = self.probe_alphabet.chars().collect();
        if chars.is_empty() {
            return Err(invalid("probe_alphabet is empty"));
        }
        if chars.iter().collect::<BTreeSet<_>>().len() != chars.len() {
            return Err(invalid("probe_alphabet repeats a character"));
        }
        for (name, v) in [("kl_epsilon", self.kl_epsilon), ("gibberish_epsilon", self.gibberish_epsilon)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(invalid(format!("{name} must be positive, got {v}")));
            }
        }
        if self.rank_top_k == 0 {
            return Err(invalid("rank_top_k must be positive"));
        }
        if self.text_field.is_empty() {
            return Err(invalid("text_field is empty"));
        }
        if self.extensions.is_empty() {
            return Err(invalid("extensions is empty"));
        }
        if self.max_document_bytes == 0 {
            return Err(invalid("max_document_bytes must be positive"));
        }
        if self.output_dir.as_os_str().is_empty() {
            return Err(invalid("output_dir is empty"));
        }
        if self.output_dir.exists() && !self.output_dir.is_dir() {
            return Err(invalid(format!("output_dir {} is not a directory", self.output_dir.display())));
        }
        Ok(())
    }
}
