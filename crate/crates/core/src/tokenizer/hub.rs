//! Import of the widely used model-hub `tokenizer.json` layout: a top-level
//! `"model"` object with `"vocab"` (token -> id) and `"merges"` (either
//! `"left right"` strings or `[left, right]` pairs).
//!
//! Merges and ids are taken verbatim. The upstream pre-tokenizer (usually a
//! regex pipeline) is approximated by [`PreTokenRules::default`], which is
//! recorded as a caveat on the import.

use std::collections::HashMap;
use std::fs;
use std::path::Path;

use serde_json::Value;

use super::bytes::{byte_to_char, byte_token_name};
use super::pretoken::PreTokenRules;
use super::vocab::{SymbolMode, Vocabulary, VocabularyParts};
use super::TokenizerError;

#[derive(Debug, Clone)]
pub struct HubImport {
    pub vocab: Vocabulary,
    /// Names of the upstream pre-tokenizer components, outermost first.
    pub upstream_pre_tokenizer: Vec<String>,
    pub caveats: Vec<String>,
}

pub fn import_hub_file(path: impl AsRef<Path>) -> Result<HubImport, TokenizerError> {
    let path = path.as_ref();
    let json = fs::read_to_string(path).map_err(|source| TokenizerError::Io { path: path.to_owned(), source })?;
    import_hub_json(&json)
}

fn unsupported(msg: impl Into<String>) -> TokenizerError {
    TokenizerError::UnsupportedFormat(msg.into())
}

fn collect_types(v: &Value, out: &mut Vec<String>) {
    match v {
        Value::Object(map) => {
            if let Some(Value::String(t)) = map.get("type") {
                out.push(t.clone());
            }
            for (k, child) in map {
                if k != "type" {
                    collect_types(child, out);
                }
            }
        }
        Value::Array(items) => items.iter().for_each(|c| collect_types(c, out)),
        _ => {}
    }
}

pub fn import_hub_json(json: &str) -> Result<HubImport, TokenizerError> {
    let root: Value = serde_json::from_str(json)?;
    let model = root
        .get("model")
        .and_then(Value::as_object)
        .ok_or_else(|| unsupported("no \"model\" object"))?;
    if let Some(kind) = model.get("type").and_then(Value::as_str) {
        if kind != "BPE" {
            return Err(unsupported(format!("model type {kind:?} has no merge list")));
        }
    }
    let raw_merges = model
        .get("merges")
        .and_then(Value::as_array)
        .ok_or_else(|| unsupported("model has no merge list"))?;
    let raw_vocab = model
        .get("vocab")
        .and_then(Value::as_object)
        .ok_or_else(|| unsupported("model has no vocab map"))?;

    let mut vocab: HashMap<String, u32> = HashMap::with_capacity(raw_vocab.len());
    for (token, id) in raw_vocab {
        let id = id
            .as_u64()
            .and_then(|i| u32::try_from(i).ok())
            .ok_or_else(|| TokenizerError::InvalidVocabulary(format!("token {token:?} has a non-integer id")))?;
        vocab.insert(token.clone(), id);
    }

    let mut merges = Vec::with_capacity(raw_merges.len());
    for (i, m) in raw_merges.iter().enumerate() {
        let pair = match m {
            Value::String(s) => s.split_once(' ').map(|(l, r)| (l.to_owned(), r.to_owned())),
            Value::Array(items) => match items.as_slice() {
                [Value::String(l), Value::String(r)] => Some((l.clone(), r.clone())),
                _ => None,
            },
            _ => None,
        };
        merges.push(pair.ok_or_else(|| TokenizerError::InvalidVocabulary(format!("merge #{i} is malformed: {m}")))?);
    }

    let mut pre_types = Vec::new();
    if let Some(p) = root.get("pre_tokenizer") {
        collect_types(p, &mut pre_types);
    }
    let mut decoder_types = Vec::new();
    if let Some(d) = root.get("decoder") {
        collect_types(d, &mut decoder_types);
    }
    let byte_level = pre_types.iter().chain(&decoder_types).any(|t| t == "ByteLevel");
    let has_byte_tokens = (0..=255u8).all(|b| vocab.contains_key(&byte_token_name(b)));
    let symbols = if byte_level {
        SymbolMode::ByteLevel
    } else if has_byte_tokens {
        SymbolMode::ByteFallback
    } else {
        SymbolMode::Chars
    };

    let mut by_id: Vec<(&String, u32)> = vocab.iter().map(|(t, &id)| (t, id)).collect();
    by_id.sort_unstable_by_key(|&(_, id)| id);
    let base_alphabet: Vec<String> = match symbols {
        SymbolMode::ByteLevel => (0..=255u8).map(|b| byte_to_char(b).to_string()).collect(),
        mode => {
            let mut base: Vec<String> =
                by_id.iter().filter(|(t, _)| t.chars().count() == 1).map(|(t, _)| (*t).clone()).collect();
            if mode == SymbolMode::ByteFallback {
                base.extend((0..=255u8).map(byte_token_name));
            }
            base
        }
    };

    let mut caveats = Vec::new();
    // Tokens that are neither base symbols nor spelled by base symbols
    // (e.g. "<unk>" in a vocabulary without '<') cannot be produced by
    // segmentation; they are left out.
    let known: std::collections::HashSet<char> =
        base_alphabet.iter().filter_map(|s| s.chars().next().filter(|_| s.chars().count() == 1)).collect();
    let base_set: std::collections::HashSet<&String> = base_alphabet.iter().collect();
    let orphans: Vec<String> = vocab
        .keys()
        .filter(|t| !base_set.contains(t) && !t.chars().all(|c| known.contains(&c)))
        .cloned()
        .collect();
    if !orphans.is_empty() {
        let mut shown = orphans.clone();
        shown.sort();
        shown.truncate(5);
        caveats.push(format!(
            "{} token(s) not spelled by the base alphabet were skipped (e.g. {shown:?})",
            orphans.len()
        ));
        for t in &orphans {
            vocab.remove(t);
        }
    }

    let pretoken = PreTokenRules::default();
    caveats.push(format!(
        "upstream pre-tokenizer [{}] approximated by whitespace splitting with a leading space; \
         segmentation of multi-word text may differ from the original tokenizer",
        if pre_types.is_empty() { "none".to_string() } else { pre_types.join(", ") }
    ));
    if pre_types.iter().any(|t| t == "Metaspace") {
        caveats.push("Metaspace space replacement is not emulated".to_string());
    }

    let vocab = Vocabulary::from_parts(VocabularyParts { base_alphabet, merges, vocab, symbols, pretoken })?;
    Ok(HubImport { vocab, upstream_pre_tokenizer: pre_types, caveats })
}
