use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{GibberishCandidates, MitigationError};
use crate::tokenizer::{TokenizerError, Vocabulary};

/// Token ids to delete from a vocabulary, with the tokens spelled out and a
/// free-form record of how the set was produced.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct StripSet {
    pub ids: BTreeSet<u32>,
    pub tokens: Vec<String>,
    #[serde(default)]
    pub provenance: BTreeMap<String, serde_json::Value>,
}

impl StripSet {
    pub fn from_ids(
        vocab: &Vocabulary,
        ids: impl IntoIterator<Item = u32>,
        provenance: BTreeMap<String, serde_json::Value>,
    ) -> Result<Self, MitigationError> {
        let ids: BTreeSet<u32> = ids.into_iter().collect();
        let tokens = ids
            .iter()
            .map(|&id| vocab.token(id).map(str::to_owned).ok_or(MitigationError::UnknownId(id)))
            .collect::<Result<_, _>>()?;
        let set = Self { ids, tokens, provenance };
        set.validate(vocab)?;
        Ok(set)
    }

    pub fn from_tokens<S: AsRef<str>>(
        vocab: &Vocabulary,
        tokens: &[S],
        provenance: BTreeMap<String, serde_json::Value>,
    ) -> Result<Self, MitigationError> {
        let ids = tokens
            .iter()
            .map(|t| vocab.token_id(t.as_ref()).ok_or_else(|| MitigationError::UnknownToken(t.as_ref().to_owned())))
            .collect::<Result<Vec<_>, _>>()?;
        Self::from_ids(vocab, ids, provenance)
    }

    /// Every scored candidate, with the scoring parameters as provenance.
    pub fn from_candidates(vocab: &Vocabulary, candidates: &GibberishCandidates) -> Result<Self, MitigationError> {
        let provenance = BTreeMap::from([
            ("method".to_owned(), serde_json::json!("identify_gibberish")),
            ("epsilon".to_owned(), serde_json::json!(candidates.epsilon)),
            ("top_k".to_owned(), serde_json::json!(candidates.top_k)),
            ("vocab_fingerprint".to_owned(), serde_json::json!(vocab.fingerprint())),
        ]);
        Self::from_ids(vocab, candidates.candidates.iter().map(|c| c.id), provenance)
    }

    /// Checks that every id exists in `vocab`, is not a base symbol, and
    /// matches the listed token when tokens are given.
    pub fn validate(&self, vocab: &Vocabulary) -> Result<(), MitigationError> {
        if !self.tokens.is_empty() && self.tokens.len() != self.ids.len() {
            return Err(MitigationError::MismatchedStripSet { ids: self.ids.len(), tokens: self.tokens.len() });
        }
        for &id in &self.ids {
            let token = vocab.token(id).ok_or(MitigationError::UnknownId(id))?;
            if vocab.is_base(id) {
                return Err(MitigationError::BaseSymbol { id, token: token.to_owned() });
            }
        }
        for t in &self.tokens {
            match vocab.token_id(t) {
                Some(id) if self.ids.contains(&id) => {}
                _ => return Err(MitigationError::UnknownToken(t.clone())),
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("strip sets serialize");
        s.push('\n');
        s
    }

    pub fn from_json(json: &str) -> Result<Self, MitigationError> {
        Ok(serde_json::from_str(json)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, MitigationError> {
        let path = path.as_ref();
        let json = fs::read_to_string(path)
            .map_err(|source| TokenizerError::Io { path: path.to_owned(), source })?;
        Self::from_json(&json)
    }
}

/// Deletes the listed tokens and every merge that can no longer fire.
///
/// Merges are replayed in rank order; a merge survives only if both of its
/// sides are still producible and its product is not stripped. Tokens that
/// were merge products but lost all producing merges go too. Surviving
/// tokens keep their original ids, so the id space may become sparse.
pub fn strip_tokens(vocab: &Vocabulary, strip: &StripSet) -> Result<Vocabulary, MitigationError> {
    strip.validate(vocab)?;
    let stripped: HashSet<&str> = strip.ids.iter().filter_map(|&id| vocab.token(id)).collect();

    let mut reachable: HashSet<String> = vocab.base_alphabet().iter().cloned().collect();
    let mut products: HashSet<String> = HashSet::new();
    let mut kept = Vec::new();
    for m in vocab.merges() {
        let merged = m.merged();
        products.insert(merged.clone());
        if reachable.contains(&m.left) && reachable.contains(&m.right) && !stripped.contains(merged.as_str()) {
            kept.push((m.left.clone(), m.right.clone()));
            reachable.insert(merged);
        }
    }

    let mut parts = vocab.to_parts();
    parts.vocab.retain(|t, _| !stripped.contains(t.as_str()) && (reachable.contains(t) || !products.contains(t)));
    parts.merges = kept;
    Ok(Vocabulary::from_parts(parts)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn strip_by_token(v: &Vocabulary, tokens: &[&str]) -> Vocabulary {
        strip_tokens(v, &StripSet::from_tokens(v, tokens, BTreeMap::new()).unwrap()).unwrap()
    }

    #[test]
    fn empty_strip_is_identity() {
        let v = Vocabulary::from_merges(&["a", "b"], &[("a", "b"), ("ab", "a")]).unwrap();
        assert_eq!(strip_by_token(&v, &[]), v);
    }

    #[test]
    fn strip_aa() {
        let v = Vocabulary::from_merges(&["a"], &[("a", "a")]).unwrap();
        let s = strip_by_token(&v, &["aa"]);
        assert_eq!(s.encode_ids("aaaa").unwrap(), vec![0, 0, 0, 0]);
        assert_eq!(s.token_id("aa"), None);
    }

    #[test]
    fn cascade() {
        let v = Vocabulary::from_merges(&["a", "b", "c"], &[("a", "b"), ("ab", "c")]).unwrap();
        let s = strip_by_token(&v, &["ab"]);
        assert_eq!(s.encode_ids("abc").unwrap(), vec![0, 1, 2]);
        assert_eq!(s.token_id("abc"), None);
        assert!(s.merges().is_empty());
    }

    #[test]
    fn ids_stay_put() {
        let v = Vocabulary::from_merges(&["a", "b", "c"], &[("a", "b"), ("b", "c"), ("c", "c")]).unwrap();
        let s = strip_by_token(&v, &["bc"]);
        assert_eq!(s.token_id("ab"), Some(3));
        assert_eq!(s.token_id("cc"), Some(5));
        assert!(!s.contains_id(4));
        assert_eq!(s.encode_ids("abcc").unwrap(), vec![3, 5]);
    }

    #[test]
    fn base_symbols_are_protected() {
        let v = Vocabulary::from_merges(&["a", "b"], &[("a", "b")]).unwrap();
        let set = StripSet { ids: BTreeSet::from([0]), tokens: vec![], provenance: BTreeMap::new() };
        assert!(matches!(strip_tokens(&v, &set), Err(MitigationError::BaseSymbol { id: 0, .. })));
        let set = StripSet { ids: BTreeSet::from([9]), tokens: vec![], provenance: BTreeMap::new() };
        assert!(matches!(strip_tokens(&v, &set), Err(MitigationError::UnknownId(9))));
    }

    #[test]
    fn json_round_trip() {
        let v = Vocabulary::from_merges(&["a", "b"], &[("a", "b")]).unwrap();
        let set = StripSet::from_tokens(&v, &["ab"], BTreeMap::from([("note".into(), serde_json::json!("x"))])).unwrap();
        let back = StripSet::from_json(&set.to_json()).unwrap();
        assert_eq!(back, set);
        assert!(set.to_json().contains("\"ids\""));
    }
}
