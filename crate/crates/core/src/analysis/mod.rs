//! Diagnostics for how a vocabulary treats secret-like strings: the
//! two-character probe grid, token length histograms, rank-frequency tables
//! and KL divergence between token distributions.

mod grid;
mod histogram;
mod kl;
mod rank;

use std::collections::{BTreeMap, HashMap};

use rayon::prelude::*;

use crate::tokenizer::{TokenizerError, Vocabulary};

pub use grid::{probe_pairs, GridProbe, GridSummary, ProbeMode, DEFAULT_PROBE_ALPHABET};
pub use histogram::{length_histogram, LengthHistogram};
pub use kl::{kl_divergence, smooth_pair, DEFAULT_KL_EPSILON};
pub use rank::{rank_frequency, token_distribution, RankFrequencyTable, RankRow, DEFAULT_RANK_TOP_K};

#[derive(Debug, thiserror::Error)]
pub enum AnalysisError {
    #[error("{0} corpus is empty")]
    EmptyCorpus(&'static str),
    #[error("epsilon must be positive, got {0}")]
    NonPositiveEpsilon(f64),
    #[error("probe alphabet is empty")]
    EmptyAlphabet,
    #[error(transparent)]
    Tokenizer(#[from] TokenizerError),
}

/// Token id occurrence counts over all `texts`, tokenized in parallel.
pub fn count_tokens<S>(vocab: &Vocabulary, texts: &[S]) -> Result<BTreeMap<u32, u64>, TokenizerError>
where
    S: AsRef<str> + Sync,
{
    let merged = texts
        .par_iter()
        .map(|t| vocab.encode_ids(t.as_ref()))
        .try_fold(HashMap::new, |mut acc: HashMap<u32, u64>, ids| {
            for id in ids? {
                *acc.entry(id).or_insert(0) += 1;
            }
            Ok::<_, TokenizerError>(acc)
        })
        .try_reduce(HashMap::new, |mut a, b| {
            for (k, v) in b {
                *a.entry(k).or_insert(0) += v;
            }
            Ok(a)
        })?;
    Ok(merged.into_iter().collect())
}
