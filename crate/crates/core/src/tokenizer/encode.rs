//! Segmentation (text -> ids) and decoding (ids -> text).

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

use super::pretoken::PreTokenRules;
use super::vocab::{SymbolMode, Vocabulary};
use super::TokenizerError;

/// Ids produced by one encoder, tagged with the fingerprint of its vocabulary.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenSequence {
    pub ids: Vec<u32>,
    pub vocab_fingerprint: String,
}

impl TokenSequence {
    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }
}

const NONE: usize = usize::MAX;

impl Vocabulary {
    /// Encodes `text` with the vocabulary's own pre-tokenization rules.
    pub fn encode(&self, text: &str) -> Result<TokenSequence, TokenizerError> {
        self.encode_with(text, &self.pretoken())
    }

    pub fn encode_with(&self, text: &str, rules: &PreTokenRules) -> Result<TokenSequence, TokenizerError> {
        let mut ids = Vec::with_capacity(text.len() / 2);
        for piece in rules.split(text) {
            let symbols = self.initial_symbols(&piece.text, piece.offset)?;
            ids.extend(self.segment(&symbols));
        }
        Ok(TokenSequence { ids, vocab_fingerprint: self.fingerprint().to_owned() })
    }

    pub fn encode_ids(&self, text: &str) -> Result<Vec<u32>, TokenizerError> {
        self.encode(text).map(|s| s.ids)
    }

    /// Encodes `piece` as a single pre-token, skipping pre-tokenization.
    pub fn encode_piece(&self, piece: &str) -> Result<Vec<u32>, TokenizerError> {
        Ok(self.segment(&self.initial_symbols(piece, 0)?))
    }

    /// Base-alphabet ids of `piece` before any merge is applied. `offset` is
    /// added to error positions.
    pub fn initial_symbols(&self, piece: &str, offset: usize) -> Result<Vec<u32>, TokenizerError> {
        let mut out = Vec::with_capacity(piece.len());
        match self.symbols() {
            SymbolMode::ByteLevel => {
                for b in piece.bytes() {
                    out.push(self.byte_id(b).expect("byte-level vocabularies cover every byte"));
                }
            }
            mode => {
                for (i, c) in piece.char_indices() {
                    if let Some(id) = self.char_id(c) {
                        out.push(id);
                    } else if mode == SymbolMode::ByteFallback {
                        for b in c.encode_utf8(&mut [0; 4]).bytes() {
                            out.push(self.byte_id(b).expect("byte-fallback vocabularies cover every byte"));
                        }
                    } else {
                        return Err(TokenizerError::UnknownSymbol { offset: offset + i, symbol: c });
                    }
                }
            }
        }
        Ok(out)
    }

    /// Ids spelling the single character `c`: its own token when the
    /// vocabulary has one, otherwise its base symbols (bytes in the byte
    /// modes).
    pub fn char_tokens(&self, c: char, offset: usize) -> Result<Vec<u32>, TokenizerError> {
        let mut buf = [0; 4];
        let name = match self.symbols() {
            SymbolMode::ByteLevel => c.encode_utf8(&mut buf).bytes().map(super::byte_to_char).collect(),
            _ => c.to_string(),
        };
        match self.token_id(&name) {
            Some(id) => Ok(vec![id]),
            None => self.initial_symbols(c.encode_utf8(&mut buf), offset),
        }
    }

    /// Applies merges to a symbol sequence, always taking the lowest-ranked
    /// applicable pair next and the leftmost occurrence among equal ranks.
    pub fn segment(&self, symbols: &[u32]) -> Vec<u32> {
        let n = symbols.len();
        if n < 2 {
            return symbols.to_vec();
        }
        let mut ids = symbols.to_vec();
        let mut next: Vec<usize> = (1..=n).map(|i| if i == n { NONE } else { i }).collect();
        let mut prev: Vec<usize> = (0..n).map(|i| if i == 0 { NONE } else { i - 1 }).collect();
        let mut alive = vec![true; n];
        let mut heap = BinaryHeap::with_capacity(n);
        for i in 0..n - 1 {
            if let Some((rank, _)) = self.merge_for(ids[i], ids[i + 1]) {
                heap.push(Reverse((rank, i)));
            }
        }

        while let Some(Reverse((rank, pos))) = heap.pop() {
            let nx = next[pos];
            if !alive[pos] || nx == NONE {
                continue;
            }
            let Some((current, merged)) = self.merge_for(ids[pos], ids[nx]) else {
                continue;
            };
            if current != rank {
                continue;
            }
            ids[pos] = merged;
            alive[nx] = false;
            let after = next[nx];
            next[pos] = after;
            if after != NONE {
                prev[after] = pos;
                if let Some((r, _)) = self.merge_for(merged, ids[after]) {
                    heap.push(Reverse((r, pos)));
                }
            }
            let before = prev[pos];
            if before != NONE {
                if let Some((r, _)) = self.merge_for(ids[before], merged) {
                    heap.push(Reverse((r, before)));
                }
            }
        }

        let mut out = Vec::new();
        let mut i = 0;
        while i != NONE {
            out.push(ids[i]);
            i = next[i];
        }
        out
    }

    pub fn decode(&self, ids: &[u32]) -> Result<String, TokenizerError> {
        let mut buf = Vec::with_capacity(ids.len() * 3);
        for &id in ids {
            buf.extend_from_slice(self.bytes_of(id).ok_or(TokenizerError::UnknownId(id))?);
        }
        Ok(match String::from_utf8(buf) {
            Ok(s) => s,
            Err(e) => String::from_utf8_lossy(e.as_bytes()).into_owned(),
        })
    }

    /// Decodes a sequence, refusing one produced by a different vocabulary.
    pub fn decode_sequence(&self, seq: &TokenSequence) -> Result<String, TokenizerError> {
        if seq.vocab_fingerprint != self.fingerprint() {
            return Err(TokenizerError::InvalidVocabulary(format!(
                "sequence was encoded with vocabulary {}",
                seq.vocab_fingerprint
            )));
        }
        self.decode(&seq.ids)
    }

    /// Character count of the decoded token. Tokens holding a partial UTF-8
    /// sequence count each undecodable run as one replacement character.
    pub fn token_char_length(&self, id: u32) -> Result<usize, TokenizerError> {
        let bytes = self.bytes_of(id).ok_or(TokenizerError::UnknownId(id))?;
        Ok(String::from_utf8_lossy(bytes).chars().count())
    }

    /// Decoded text of a single token.
    pub fn token_text(&self, id: u32) -> Result<String, TokenizerError> {
        self.decode(&[id])
    }
}

#[cfg(test)]
mod tests {
    use std::collections::HashMap;

    use super::*;
    use crate::tokenizer::{PreTokenMode, VocabularyParts};

    fn toy(alphabet: &str, merges: &[(&str, &str)]) -> Vocabulary {
        let mut vocab = HashMap::new();
        let base: Vec<String> = alphabet.chars().map(String::from).collect();
        for t in &base {
            let id = vocab.len() as u32;
            vocab.insert(t.clone(), id);
        }
        for (l, r) in merges {
            let id = vocab.len() as u32;
            vocab.entry(format!("{l}{r}")).or_insert(id);
        }
        Vocabulary::from_parts(VocabularyParts {
            base_alphabet: base,
            merges: merges.iter().map(|(l, r)| (l.to_string(), r.to_string())).collect(),
            vocab,
            symbols: SymbolMode::Chars,
            pretoken: PreTokenRules::default(),
        })
        .unwrap()
    }

    fn tokens(v: &Vocabulary, text: &str) -> Vec<String> {
        v.encode_ids(text).unwrap().into_iter().map(|id| v.token(id).unwrap().to_owned()).collect()
    }

    #[test]
    fn empty_text_is_empty_sequence() {
        let v = toy("ab", &[("a", "b")]);
        assert!(v.encode("").unwrap().is_empty());
        assert_eq!(v.decode(&[]).unwrap(), "");
    }

    #[test]
    fn single_merge_hand_trace() {
        let v = toy("ab", &[("a", "b")]);
        assert_eq!(tokens(&v, "ab"), ["ab"]);
        assert_eq!(tokens(&v, "ba"), ["b", "a"]);
        assert_eq!(v.decode(&v.encode_ids("ab").unwrap()).unwrap(), "ab");
    }

    #[test]
    fn merges_apply_in_rank_order() {
        // "abc": (b,c) outranks (a,b), so the result is a + bc even though
        // (a,b) appears first in the text.
        let v = toy("abc", &[("b", "c"), ("a", "b")]);
        assert_eq!(tokens(&v, "abc"), ["a", "bc"]);
        let v = toy("abc", &[("a", "b"), ("b", "c")]);
        assert_eq!(tokens(&v, "abc"), ["ab", "c"]);
    }

    #[test]
    fn equal_rank_occurrences_merge_left_to_right() {
        let v = toy("a", &[("a", "a")]);
        assert_eq!(tokens(&v, "aaa"), ["aa", "a"]);
        assert_eq!(tokens(&v, "aaaa"), ["aa", "aa"]);
        let v = toy("a", &[("a", "a"), ("aa", "aa")]);
        assert_eq!(tokens(&v, "aaaaa"), ["aaaa", "a"]);
    }

    #[test]
    fn pre_tokens_are_segmented_separately() {
        let v = toy("ab ", &[("a", "b"), ("b", " ")]);
        // "b " never forms: the space belongs to the next piece.
        assert_eq!(tokens(&v, "ab ab"), ["ab", " ", "ab"]);
        let whole = PreTokenRules::new(PreTokenMode::None);
        let ids = v.encode_with("ab ab", &whole).unwrap().ids;
        let got: Vec<_> = ids.iter().map(|&i| v.token(i).unwrap()).collect();
        assert_eq!(got, ["ab", " ", "ab"]);
    }

    #[test]
    fn unknown_symbol_reports_offset() {
        let v = toy("ab ", &[]);
        match v.encode("ab az") {
            Err(TokenizerError::UnknownSymbol { offset, symbol }) => {
                assert_eq!((offset, symbol), (4, 'z'));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn unknown_id_fails_decode() {
        let v = toy("ab", &[]);
        assert!(matches!(v.decode(&[7]), Err(TokenizerError::UnknownId(7))));
        assert!(matches!(v.token_char_length(7), Err(TokenizerError::UnknownId(7))));
    }

    #[test]
    fn token_char_lengths() {
        let v = toy("-ademno", &[("-", "d"), ("-d", "a"), ("e", "m"), ("o", "n"), ("em", "on")]);
        assert_eq!(v.token_char_length(v.token_id("a").unwrap()).unwrap(), 1);
        assert_eq!(v.token_char_length(v.token_id("-da").unwrap()).unwrap(), 3);
        assert_eq!(v.token_char_length(v.token_id("emon").unwrap()).unwrap(), 4);
        assert_eq!(tokens(&v, "-daemon"), ["-da", "emon"]);
    }

    #[test]
    fn decode_sequence_checks_fingerprint() {
        let a = toy("ab", &[("a", "b")]);
        let b = toy("ab", &[]);
        let seq = a.encode("ab").unwrap();
        assert_eq!(a.decode_sequence(&seq).unwrap(), "ab");
        assert!(b.decode_sequence(&seq).is_err());
    }
}
