use serde::{Deserialize, Serialize};

use super::{count_tokens, smooth_pair, AnalysisError};
use crate::entropy::DistributionTable;
use crate::tokenizer::Vocabulary;

pub const DEFAULT_RANK_TOP_K: usize = 150;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankRow {
    pub rank: usize,
    pub token: String,
    pub id: u32,
    pub p_proportion: f64,
    pub q_proportion: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankFrequencyTable {
    pub top_k: usize,
    pub epsilon: f64,
    pub rows: Vec<RankRow>,
}

impl RankFrequencyTable {
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["rank", "token", "id", "p_proportion", "q_proportion"]).expect("in-memory write");
        for r in &self.rows {
            w.write_record([
                r.rank.to_string(),
                r.token.clone(),
                r.id.to_string(),
                format!("{:.9e}", r.p_proportion),
                format!("{:.9e}", r.q_proportion),
            ])
            .expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv output is utf-8")
    }
}

/// Empirical distribution of token ids over all texts.
pub fn token_distribution<S>(vocab: &Vocabulary, texts: &[S], which: &'static str) -> Result<DistributionTable<u32>, AnalysisError>
where
    S: AsRef<str> + Sync,
{
    if texts.is_empty() {
        return Err(AnalysisError::EmptyCorpus(which));
    }
    DistributionTable::from_counts(count_tokens(vocab, texts)?.into_iter().collect())
        .map_err(|_| AnalysisError::EmptyCorpus(which))
}

/// The `top_k` most frequent tokens of `p_texts` with their proportions in
/// both corpora. Proportions come from the smoothed distributions used by
/// [`super::kl_divergence`], so a token absent from Q shows the floor value.
pub fn rank_frequency<S, U>(
    vocab: &Vocabulary,
    p_texts: &[S],
    q_texts: &[U],
    top_k: usize,
    epsilon: f64,
) -> Result<RankFrequencyTable, AnalysisError>
where
    S: AsRef<str> + Sync,
    U: AsRef<str> + Sync,
{
    let p = token_distribution(vocab, p_texts, "P")?;
    let q = token_distribution(vocab, q_texts, "Q")?;
    let (ps, qs) = smooth_pair(&p, &q, epsilon)?;
    let token = |id: u32| vocab.token(id).unwrap_or_default().to_owned();
    let mut ranked: Vec<(u64, String, u32)> = p.counts().iter().map(|(&id, &c)| (c, token(id), id)).collect();
    ranked.sort_by(|a, b| b.0.cmp(&a.0).then_with(|| a.1.cmp(&b.1)));
    let rows = ranked
        .into_iter()
        .take(top_k)
        .enumerate()
        .map(|(i, (_, token, id))| RankRow { rank: i + 1, token, id, p_proportion: ps[&id], q_proportion: qs[&id] })
        .collect();
    Ok(RankFrequencyTable { top_k, epsilon, rows })
}
