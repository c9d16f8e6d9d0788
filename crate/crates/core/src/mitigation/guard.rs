use serde::{Deserialize, Serialize};

use super::MitigationError;
use crate::secrets::SecretPattern;
use crate::tokenizer::Vocabulary;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GuardedSpan {
    /// Byte offset of the match in the input.
    pub start: usize,
    /// Byte length of the match.
    pub length: usize,
    pub pattern: String,
    /// Index of the span's first token in `ids`.
    pub token_start: usize,
    pub token_count: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GuardedEncoding {
    pub ids: Vec<u32>,
    pub spans: Vec<GuardedSpan>,
}

/// Encodes `text` normally except inside pattern matches, where each
/// character becomes its own token (or its byte tokens if the vocabulary
/// has no single token for it).
///
/// Overlapping matches are resolved by taking the earliest start, then the
/// longest match. The text between spans is encoded as independent pieces.
pub fn guard_encode(vocab: &Vocabulary, text: &str, patterns: &[SecretPattern]) -> Result<GuardedEncoding, MitigationError> {
    let mut matches: Vec<(usize, usize, usize)> = Vec::new();
    for (pi, p) in patterns.iter().enumerate() {
        for m in p.compile().find_iter(text) {
            matches.push((m.start(), m.end(), pi));
        }
    }
    matches.sort_by(|a, b| a.0.cmp(&b.0).then(b.1.cmp(&a.1)).then(a.2.cmp(&b.2)));

    let lowercase = vocab.pretoken().lowercase;
    let mut ids = Vec::new();
    let mut spans = Vec::new();
    let mut cursor = 0;
    for (start, end, pi) in matches {
        if start < cursor {
            continue;
        }
        ids.extend(vocab.encode_ids(&text[cursor..start])?);
        let token_start = ids.len();
        for (i, c) in text[start..end].char_indices() {
            if lowercase {
                for lc in c.to_lowercase() {
                    ids.extend(vocab.char_tokens(lc, start + i)?);
                }
            } else {
                ids.extend(vocab.char_tokens(c, start + i)?);
            }
        }
        spans.push(GuardedSpan {
            start,
            length: end - start,
            pattern: patterns[pi].name().to_owned(),
            token_start,
            token_count: ids.len() - token_start,
        });
        cursor = end;
    }
    ids.extend(vocab.encode_ids(&text[cursor..])?);
    Ok(GuardedEncoding { ids, spans })
}
