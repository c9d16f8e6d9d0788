//! Pre-tokenization: deterministic partitioning of raw text into pieces that
//! segmentation treats independently.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PreTokenMode {
    /// Split on whitespace and attach a single leading space to the word that
    /// follows it, so `"a  b"` becomes `["a", " ", " b"]`.
    #[default]
    WhitespaceLeadingSpace,
    /// The whole text is one piece.
    None,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PreTokenRules {
    pub mode: PreTokenMode,
    #[serde(default)]
    pub lowercase: bool,
}

/// A piece of the input together with its byte offset in the original text.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Piece {
    pub offset: usize,
    pub text: String,
}

impl PreTokenRules {
    pub const fn new(mode: PreTokenMode) -> Self {
        Self { mode, lowercase: false }
    }

    /// Partitions `text` into pieces. Concatenating the pieces gives back the
    /// input (lowercased when `lowercase` is set).
    pub fn split(&self, text: &str) -> Vec<Piece> {
        let spans = match self.mode {
            PreTokenMode::None if text.is_empty() => Vec::new(),
            PreTokenMode::None => vec![(0, text.len())],
            PreTokenMode::WhitespaceLeadingSpace => whitespace_spans(text),
        };
        spans
            .into_iter()
            .map(|(start, end)| {
                let slice = &text[start..end];
                Piece {
                    offset: start,
                    text: if self.lowercase { slice.to_lowercase() } else { slice.to_owned() },
                }
            })
            .collect()
    }
}

fn whitespace_spans(text: &str) -> Vec<(usize, usize)> {
    let chars: Vec<(usize, char)> = text.char_indices().collect();
    let n = chars.len();
    let byte_at = |i: usize| if i < n { chars[i].0 } else { text.len() };
    let run_end = |mut i: usize, ws: bool| {
        while i < n && chars[i].1.is_whitespace() == ws {
            i += 1;
        }
        i
    };

    let mut spans = Vec::new();
    let mut i = 0;
    while i < n {
        if chars[i].1.is_whitespace() {
            let j = run_end(i, true);
            if j < n && chars[j - 1].1 == ' ' {
                if j - 1 > i {
                    spans.push((byte_at(i), byte_at(j - 1)));
                }
                let k = run_end(j, false);
                spans.push((byte_at(j - 1), byte_at(k)));
                i = k;
            } else {
                spans.push((byte_at(i), byte_at(j)));
                i = j;
            }
        } else {
            let k = run_end(i, false);
            spans.push((byte_at(i), byte_at(k)));
            i = k;
        }
    }
    spans
}
