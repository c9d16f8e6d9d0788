use std::collections::{BTreeMap, HashMap, HashSet};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::bytes::{byte_to_char, byte_token_name, char_to_byte, parse_byte_token};
use super::io::NativeFile;
use super::pretoken::PreTokenRules;
use super::TokenizerError;

/// How raw text maps onto the atomic symbols that merges operate on.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SymbolMode {
    /// Unicode scalars. Characters outside the base alphabet are an error.
    #[default]
    Chars,
    /// Unicode scalars, with unknown characters decomposed into `<0xHH>`
    /// byte tokens that are part of the base alphabet.
    ByteFallback,
    /// Every UTF-8 byte is one symbol, written with the printable stand-ins
    /// of [`super::bytes`]. This is the layout of most hub BPE files.
    ByteLevel,
}

/// One learned merge. `rank` is its position in the merge list.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct MergeRule {
    pub left: String,
    pub right: String,
    pub rank: u32,
}

impl MergeRule {
    pub fn merged(&self) -> String {
        format!("{}{}", self.left, self.right)
    }
}

/// Raw ingredients of a [`Vocabulary`], checked by [`Vocabulary::from_parts`].
#[derive(Debug, Clone, Default)]
pub struct VocabularyParts {
    pub base_alphabet: Vec<String>,
    /// Merge list in rank order.
    pub merges: Vec<(String, String)>,
    pub vocab: HashMap<String, u32>,
    pub symbols: SymbolMode,
    pub pretoken: PreTokenRules,
}

/// An immutable BPE vocabulary: base alphabet, ranked merges and the
/// token/id maps. Ids may be sparse (see `mitigation::strip_tokens`).
#[derive(Debug, Clone)]
pub struct Vocabulary {
    alphabet: Vec<String>,
    merges: Vec<MergeRule>,
    token_to_id: HashMap<String, u32>,
    id_to_token: Vec<Option<String>>,
    // (left id, right id) -> (rank, merged id)
    merge_lookup: HashMap<(u32, u32), (u32, u32)>,
    char_ids: HashMap<char, u32>,
    byte_ids: Option<Box<[u32; 256]>>,
    token_bytes: Vec<Option<Vec<u8>>>,
    base_ids: HashSet<u32>,
    symbols: SymbolMode,
    pretoken: PreTokenRules,
    fingerprint: String,
}

impl PartialEq for Vocabulary {
    fn eq(&self, other: &Self) -> bool {
        self.alphabet == other.alphabet
            && self.merges == other.merges
            && self.token_to_id == other.token_to_id
            && self.symbols == other.symbols
            && self.pretoken == other.pretoken
    }
}

impl Eq for Vocabulary {}

fn invalid(msg: impl Into<String>) -> TokenizerError {
    TokenizerError::InvalidVocabulary(msg.into())
}

impl Vocabulary {
    pub fn from_parts(parts: VocabularyParts) -> Result<Self, TokenizerError> {
        let VocabularyParts { base_alphabet, merges: raw_merges, vocab, symbols, pretoken } = parts;

        let max_id = vocab.values().copied().max().unwrap_or(0) as usize;
        let mut id_to_token: Vec<Option<String>> = vec![None; if vocab.is_empty() { 0 } else { max_id + 1 }];
        for (token, &id) in &vocab {
            if token.is_empty() {
                return Err(invalid("empty token string"));
            }
            let slot = &mut id_to_token[id as usize];
            if let Some(other) = slot {
                return Err(invalid(format!("id {id} assigned to both {other:?} and {token:?}")));
            }
            *slot = Some(token.clone());
        }

        let mut base_ids = HashSet::new();
        let mut char_ids = HashMap::new();
        let mut byte_ids: Option<Box<[u32; 256]>> = None;
        let mut byte_seen = [false; 256];
        for symbol in &base_alphabet {
            let id = *vocab
                .get(symbol)
                .ok_or_else(|| invalid(format!("base symbol {symbol:?} has no id")))?;
            if !base_ids.insert(id) {
                return Err(invalid(format!("base symbol {symbol:?} listed twice")));
            }
            let mut chars = symbol.chars();
            let single = match (chars.next(), chars.next()) {
                (Some(c), None) => Some(c),
                _ => None,
            };
            match (symbols, single) {
                (SymbolMode::ByteLevel, Some(c)) => {
                    let b = char_to_byte(c)
                        .ok_or_else(|| invalid(format!("{symbol:?} is not a byte-level symbol")))?;
                    byte_ids.get_or_insert_with(|| Box::new([u32::MAX; 256]))[b as usize] = id;
                    byte_seen[b as usize] = true;
                    char_ids.insert(c, id);
                }
                (SymbolMode::ByteFallback, None) => {
                    let b = parse_byte_token(symbol)
                        .ok_or_else(|| invalid(format!("base symbol {symbol:?} is not a single character")))?;
                    byte_ids.get_or_insert_with(|| Box::new([u32::MAX; 256]))[b as usize] = id;
                    byte_seen[b as usize] = true;
                }
                (_, Some(c)) => {
                    char_ids.insert(c, id);
                }
                (_, None) => {
                    return Err(invalid(format!("base symbol {symbol:?} is not a single character")));
                }
            }
        }
        if matches!(symbols, SymbolMode::ByteLevel | SymbolMode::ByteFallback) {
            if let Some(b) = byte_seen.iter().position(|seen| !seen) {
                return Err(invalid(format!("byte {b:#04x} missing from the base alphabet")));
            }
        }

        let mut merges = Vec::with_capacity(raw_merges.len());
        let mut merge_lookup = HashMap::with_capacity(raw_merges.len());
        for (rank, (left, right)) in raw_merges.into_iter().enumerate() {
            let rank = rank as u32;
            if left.is_empty() || right.is_empty() {
                return Err(invalid(format!("merge #{rank} has an empty side")));
            }
            let lookup = |t: &str| {
                vocab
                    .get(t)
                    .copied()
                    .ok_or_else(|| invalid(format!("merge #{rank} refers to unknown token {t:?}")))
            };
            let (l, r) = (lookup(&left)?, lookup(&right)?);
            let merged = lookup(&format!("{left}{right}"))?;
            if merge_lookup.insert((l, r), (rank, merged)).is_some() {
                return Err(invalid(format!("duplicate merge ({left:?}, {right:?})")));
            }
            merges.push(MergeRule { left, right, rank });
        }

        let token_bytes = id_to_token
            .iter()
            .map(|t| t.as_deref().map(|t| token_to_bytes(symbols, t)))
            .collect();

        let mut v = Self {
            alphabet: base_alphabet,
            merges,
            token_to_id: vocab,
            id_to_token,
            merge_lookup,
            char_ids,
            byte_ids,
            token_bytes,
            base_ids,
            symbols,
            pretoken,
            fingerprint: String::new(),
        };
        v.check_decomposition()?;
        v.fingerprint = v.compute_fingerprint();
        Ok(v)
    }

    fn check_decomposition(&self) -> Result<(), TokenizerError> {
        for (token, id) in &self.token_to_id {
            if self.base_ids.contains(id) {
                continue;
            }
            if let Some(c) = token.chars().find(|c| !self.char_ids.contains_key(c)) {
                return Err(invalid(format!("token {token:?} contains {c:?}, which is not a base symbol")));
            }
        }
        Ok(())
    }

    fn compute_fingerprint(&self) -> String {
        let canonical = serde_json::to_vec(&NativeFile::from(self)).expect("native file serializes");
        hex::encode(Sha256::digest(&canonical))
    }

    /// Character-mode vocabulary with default pre-tokenization. Base symbols
    /// get ids `0..n` in the given order and each new merge product the next
    /// free id.
    ///
    /// ```
    /// use tokaudit::tokenizer::Vocabulary;
    ///
    /// let v = Vocabulary::from_merges(&["a", "b"], &[("a", "b")]).unwrap();
    /// assert_eq!(v.token_id("ab"), Some(2));
    /// assert_eq!(v.encode_ids("abab").unwrap(), vec![2, 2]);
    /// ```
    pub fn from_merges(alphabet: &[&str], merges: &[(&str, &str)]) -> Result<Self, TokenizerError> {
        let mut vocab = HashMap::new();
        for s in alphabet {
            let next = vocab.len() as u32;
            vocab.entry(s.to_string()).or_insert(next);
        }
        for (l, r) in merges {
            let next = vocab.len() as u32;
            vocab.entry(format!("{l}{r}")).or_insert(next);
        }
        Self::from_parts(VocabularyParts {
            base_alphabet: alphabet.iter().map(|s| s.to_string()).collect(),
            merges: merges.iter().map(|(l, r)| (l.to_string(), r.to_string())).collect(),
            vocab,
            symbols: SymbolMode::Chars,
            pretoken: PreTokenRules::default(),
        })
    }

    pub fn base_alphabet(&self) -> &[String] {
        &self.alphabet
    }

    pub fn merges(&self) -> &[MergeRule] {
        &self.merges
    }

    /// Number of tokens (not the largest id; ids can be sparse).
    pub fn len(&self) -> usize {
        self.token_to_id.len()
    }

    pub fn is_empty(&self) -> bool {
        self.token_to_id.is_empty()
    }

    pub fn symbols(&self) -> SymbolMode {
        self.symbols
    }

    pub fn pretoken(&self) -> PreTokenRules {
        self.pretoken
    }

    /// SHA-256 over the canonical native serialization.
    pub fn fingerprint(&self) -> &str {
        &self.fingerprint
    }

    pub fn token_id(&self, token: &str) -> Option<u32> {
        self.token_to_id.get(token).copied()
    }

    pub fn token(&self, id: u32) -> Option<&str> {
        self.id_to_token.get(id as usize)?.as_deref()
    }

    pub fn contains_id(&self, id: u32) -> bool {
        self.token(id).is_some()
    }

    pub fn is_base(&self, id: u32) -> bool {
        self.base_ids.contains(&id)
    }

    /// One past the largest id in use.
    pub fn id_bound(&self) -> usize {
        self.id_to_token.len()
    }

    /// `(id, token)` pairs in ascending id order.
    pub fn iter(&self) -> impl Iterator<Item = (u32, &str)> {
        self.id_to_token
            .iter()
            .enumerate()
            .filter_map(|(id, t)| t.as_deref().map(|t| (id as u32, t)))
    }

    pub fn token_map(&self) -> BTreeMap<&str, u32> {
        self.token_to_id.iter().map(|(t, &id)| (t.as_str(), id)).collect()
    }

    pub(crate) fn merge_for(&self, left: u32, right: u32) -> Option<(u32, u32)> {
        self.merge_lookup.get(&(left, right)).copied()
    }

    pub(crate) fn char_id(&self, c: char) -> Option<u32> {
        self.char_ids.get(&c).copied()
    }

    pub(crate) fn byte_id(&self, b: u8) -> Option<u32> {
        self.byte_ids.as_ref().map(|t| t[b as usize])
    }

    pub(crate) fn bytes_of(&self, id: u32) -> Option<&[u8]> {
        self.token_bytes.get(id as usize)?.as_deref()
    }

    /// Components used by `strip_tokens` and serialization.
    pub fn to_parts(&self) -> VocabularyParts {
        VocabularyParts {
            base_alphabet: self.alphabet.clone(),
            merges: self.merges.iter().map(|m| (m.left.clone(), m.right.clone())).collect(),
            vocab: self.token_to_id.clone(),
            symbols: self.symbols,
            pretoken: self.pretoken,
        }
    }
}

/// Raw bytes a token stands for when decoded.
pub(crate) fn token_to_bytes(mode: SymbolMode, token: &str) -> Vec<u8> {
    match mode {
        SymbolMode::Chars => token.as_bytes().to_vec(),
        SymbolMode::ByteFallback => match parse_byte_token(token) {
            Some(b) => vec![b],
            None => token.as_bytes().to_vec(),
        },
        SymbolMode::ByteLevel => {
            let mut out = Vec::with_capacity(token.len());
            for c in token.chars() {
                match char_to_byte(c) {
                    Some(b) => out.push(b),
                    None => out.extend_from_slice(c.encode_utf8(&mut [0; 4]).as_bytes()),
                }
            }
            out
        }
    }
}

/// The base alphabet every vocabulary in `mode` must contain regardless of
/// the training data.
pub(crate) fn mandatory_symbols(mode: SymbolMode) -> Vec<String> {
    match mode {
        SymbolMode::Chars => Vec::new(),
        SymbolMode::ByteFallback => (0..=255u8).map(byte_token_name).collect(),
        SymbolMode::ByteLevel => (0..=255u8).map(|b| byte_to_char(b).to_string()).collect(),
    }
}
