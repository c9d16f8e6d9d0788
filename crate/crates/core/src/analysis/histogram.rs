use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{count_tokens, AnalysisError};
use crate::tokenizer::Vocabulary;

/// Token occurrences bucketed by the decoded character length of the token.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LengthHistogram {
    pub counts: BTreeMap<usize, u64>,
    pub total_tokens: u64,
}

impl LengthHistogram {
    pub fn count(&self, length: usize) -> u64 {
        self.counts.get(&length).copied().unwrap_or(0)
    }

    /// Occurrences of tokens at least `length` characters long.
    pub fn tail(&self, length: usize) -> u64 {
        self.counts.range(length..).map(|(_, c)| c).sum()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("length,count\n");
        for (n, c) in &self.counts {
            out.push_str(&format!("{n},{c}\n"));
        }
        out
    }
}

pub fn length_histogram<S>(vocab: &Vocabulary, texts: &[S]) -> Result<LengthHistogram, AnalysisError>
where
    S: AsRef<str> + Sync,
{
    let mut hist = LengthHistogram::default();
    for (id, count) in count_tokens(vocab, texts)? {
        let n = vocab.token_char_length(id)?;
        *hist.counts.entry(n).or_insert(0) += count;
        hist.total_tokens += count;
    }
    Ok(hist)
}
