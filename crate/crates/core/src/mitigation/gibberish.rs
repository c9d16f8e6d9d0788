use serde::{Deserialize, Serialize};

use super::MitigationError;
use crate::analysis::count_tokens;
use crate::tokenizer::Vocabulary;

pub const DEFAULT_GIBBERISH_EPSILON: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GibberishScore {
    pub token: String,
    pub id: u32,
    pub freq_secret: u64,
    pub freq_normal: u64,
    /// `(freq_secret + ε) / (freq_normal + ε)`.
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GibberishCandidates {
    pub epsilon: f64,
    pub top_k: usize,
    pub candidates: Vec<GibberishScore>,
}

impl GibberishCandidates {
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["token", "id", "freq_secret", "freq_normal", "score"]).expect("in-memory write");
        for c in &self.candidates {
            w.write_record([
                c.token.clone(),
                c.id.to_string(),
                c.freq_secret.to_string(),
                c.freq_normal.to_string(),
                format!("{:.6}", c.score),
            ])
            .expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv output is utf-8")
    }
}

/// Ranks non-base tokens by how much more often they occur when tokenizing
/// secrets than when tokenizing normal text. Tokens seen in neither corpus
/// are left out. Ties are broken by token string.
pub fn identify_gibberish<S, U>(
    vocab: &Vocabulary,
    normal_texts: &[S],
    secret_texts: &[U],
    top_k: usize,
    epsilon: f64,
) -> Result<GibberishCandidates, MitigationError>
where
    S: AsRef<str> + Sync,
    U: AsRef<str> + Sync,
{
    if normal_texts.is_empty() {
        return Err(MitigationError::EmptyCorpus("normal"));
    }
    if secret_texts.is_empty() {
        return Err(MitigationError::EmptyCorpus("secret"));
    }
    if !(epsilon > 0.0) {
        return Err(MitigationError::NonPositiveEpsilon(epsilon));
    }
    let normal = count_tokens(vocab, normal_texts)?;
    let secret = count_tokens(vocab, secret_texts)?;
    let mut ids: Vec<u32> = normal.keys().chain(secret.keys()).copied().filter(|&id| !vocab.is_base(id)).collect();
    ids.sort_unstable();
    ids.dedup();
    let mut scores: Vec<GibberishScore> = ids
        .into_iter()
        .map(|id| {
            let fs = secret.get(&id).copied().unwrap_or(0);
            let fn_ = normal.get(&id).copied().unwrap_or(0);
            GibberishScore {
                token: vocab.token(id).unwrap_or_default().to_owned(),
                id,
                freq_secret: fs,
                freq_normal: fn_,
                score: (fs as f64 + epsilon) / (fn_ as f64 + epsilon),
            }
        })
        .collect();
    scores.sort_by(|a, b| b.score.total_cmp(&a.score).then_with(|| a.token.cmp(&b.token)));
    scores.truncate(top_k);
    Ok(GibberishCandidates { epsilon, top_k, candidates: scores })
}

/// Tokens of `secret_vocab` that `normal_vocab` lacks, in id order. An
/// alternative to scoring when two separately trained vocabularies exist.
pub fn vocab_difference(secret_vocab: &Vocabulary, normal_vocab: &Vocabulary) -> Vec<String> {
    secret_vocab
        .iter()
        .filter(|&(id, t)| !secret_vocab.is_base(id) && normal_vocab.token_id(t).is_none())
        .map(|(_, t)| t.to_owned())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy() -> Vocabulary {
        Vocabulary::from_merges(&[" ", "a", "b", "x", "y"], &[("a", "b"), ("x", "y"), (" ", "ab")]).unwrap()
    }

    #[test]
    fn zero_k_is_empty() {
        let c = identify_gibberish(&toy(), &["ab"], &["xy"], 0, 0.5).unwrap();
        assert!(c.candidates.is_empty());
    }

    #[test]
    fn secret_only_token_ranks_first() {
        let c = identify_gibberish(&toy(), &["ab ab ab"], &["xyxy ab"], 10, 0.5).unwrap();
        assert_eq!(c.candidates[0].token, "xy");
        assert_eq!(c.candidates[0].freq_secret, 2);
        assert_eq!(c.candidates[0].freq_normal, 0);
        assert!((c.candidates[0].score - 5.0).abs() < 1e-12);
        // "ab" and " ab" appear; base symbols never do.
        assert!(c.candidates.iter().all(|s| s.token.len() > 1));
        assert_eq!(c.candidates.len(), 3);
    }

    #[test]
    fn errors() {
        assert!(matches!(identify_gibberish::<&str, &str>(&toy(), &[], &["a"], 1, 0.5), Err(MitigationError::EmptyCorpus("normal"))));
        assert!(matches!(identify_gibberish(&toy(), &["a"], &["a"], 1, 0.0), Err(MitigationError::NonPositiveEpsilon(_))));
    }

    #[test]
    fn difference_mode() {
        let secret = Vocabulary::from_merges(&["a", "b", "x", "y"], &[("x", "y"), ("a", "b")]).unwrap();
        let normal = Vocabulary::from_merges(&["a", "b"], &[("a", "b")]).unwrap();
        assert_eq!(vocab_difference(&secret, &normal), ["xy"]);
    }
}
