//! BPE vocabulary construction.
//!
//! Pair counts are maintained incrementally: after each merge only the words
//! that contained the merged pair are rescanned. The best pair is kept in a
//! lazy max-heap ordered by count, then by the lexicographically smallest
//! `(left, right)` strings, so the merge list is a pure function of the
//! input.

use std::cmp::Ordering;
use std::collections::{BTreeSet, BinaryHeap, HashMap, HashSet};
use std::sync::Arc;

use rayon::prelude::*;

use super::bytes::{byte_to_char, parse_byte_token};
use super::pretoken::PreTokenRules;
use super::vocab::{mandatory_symbols, SymbolMode, Vocabulary, VocabularyParts};
use super::TokenizerError;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrainOptions {
    /// Desired number of tokens, base alphabet included.
    pub target_size: usize,
    pub rules: PreTokenRules,
    pub symbols: SymbolMode,
    /// Pairs seen fewer times than this are never merged.
    pub min_pair_count: u64,
}

impl TrainOptions {
    pub fn new(target_size: usize) -> Self {
        Self { target_size, rules: PreTokenRules::default(), symbols: SymbolMode::Chars, min_pair_count: 2 }
    }
}

type Pair = (u32, u32);

#[derive(Debug, PartialEq, Eq)]
struct Candidate {
    count: u64,
    left: Arc<str>,
    right: Arc<str>,
    pair: Pair,
}

impl Ord for Candidate {
    fn cmp(&self, other: &Self) -> Ordering {
        self.count
            .cmp(&other.count)
            .then_with(|| other.left.cmp(&self.left))
            .then_with(|| other.right.cmp(&self.right))
    }
}

impl PartialOrd for Candidate {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

fn symbolize(mode: SymbolMode, piece: &str) -> Vec<String> {
    match mode {
        SymbolMode::ByteLevel => piece.bytes().map(|b| byte_to_char(b).to_string()).collect(),
        SymbolMode::Chars | SymbolMode::ByteFallback => piece.chars().map(String::from).collect(),
    }
}

fn pairs_of(word: &[u32]) -> impl Iterator<Item = Pair> + '_ {
    word.windows(2).map(|w| (w[0], w[1]))
}

fn apply_merge(word: &mut Vec<u32>, pair: Pair, merged: u32) {
    let mut out = Vec::with_capacity(word.len());
    let mut i = 0;
    while i < word.len() {
        if i + 1 < word.len() && word[i] == pair.0 && word[i + 1] == pair.1 {
            out.push(merged);
            i += 2;
        } else {
            out.push(word[i]);
            i += 1;
        }
    }
    *word = out;
}

/// Learns a vocabulary of at most `opts.target_size` tokens from `corpus`.
///
/// Training stops early once no remaining pair occurs `min_pair_count` times.
/// A pair that has been merged once is never selected again.
pub fn train<I, S>(corpus: I, opts: &TrainOptions) -> Result<Vocabulary, TokenizerError>
where
    I: IntoIterator<Item = S>,
    S: AsRef<str>,
{
    let mut piece_counts: HashMap<String, u64> = HashMap::new();
    for doc in corpus {
        for piece in opts.rules.split(doc.as_ref()) {
            *piece_counts.entry(piece.text).or_insert(0) += 1;
        }
    }
    if piece_counts.is_empty() {
        return Err(TokenizerError::EmptyCorpus);
    }
    let mut pieces: Vec<(String, u64)> = piece_counts.into_iter().collect();
    pieces.sort_unstable();

    let observed: BTreeSet<String> =
        pieces.iter().flat_map(|(p, _)| symbolize(opts.symbols, p)).collect();
    let mut alphabet: Vec<String> = match opts.symbols {
        SymbolMode::ByteLevel => mandatory_symbols(SymbolMode::ByteLevel),
        mode => observed.iter().cloned().chain(mandatory_symbols(mode)).collect(),
    };
    alphabet.dedup();
    if opts.target_size < alphabet.len() {
        return Err(TokenizerError::TargetTooSmall { target: opts.target_size, alphabet: alphabet.len() });
    }

    let mut tokens: Vec<Arc<str>> = alphabet.iter().map(|s| Arc::from(s.as_str())).collect();
    let mut token_ids: HashMap<Arc<str>, u32> =
        tokens.iter().enumerate().map(|(i, t)| (t.clone(), i as u32)).collect();

    let mut words: Vec<Vec<u32>> = pieces
        .iter()
        .map(|(p, _)| symbolize(opts.symbols, p).iter().map(|s| token_ids[s.as_str()]).collect())
        .collect();
    let freqs: Vec<u64> = pieces.iter().map(|(_, f)| *f).collect();

    let (mut pair_counts, mut locations) = words
        .par_iter()
        .enumerate()
        .fold(
            || (HashMap::<Pair, u64>::new(), HashMap::<Pair, HashSet<usize>>::new()),
            |(mut counts, mut locs), (w, word)| {
                for pair in pairs_of(word) {
                    *counts.entry(pair).or_insert(0) += freqs[w];
                    locs.entry(pair).or_default().insert(w);
                }
                (counts, locs)
            },
        )
        .reduce(
            || (HashMap::new(), HashMap::new()),
            |(mut ca, mut la), (cb, lb)| {
                for (k, v) in cb {
                    *ca.entry(k).or_insert(0) += v;
                }
                for (k, v) in lb {
                    la.entry(k).or_default().extend(v);
                }
                (ca, la)
            },
        );

    let candidate = |tokens: &[Arc<str>], pair: Pair, count: u64| Candidate {
        count,
        left: tokens[pair.0 as usize].clone(),
        right: tokens[pair.1 as usize].clone(),
        pair,
    };
    let mut heap: BinaryHeap<Candidate> =
        pair_counts.iter().map(|(&pair, &count)| candidate(&tokens, pair, count)).collect();

    let mut merges: Vec<(String, String)> = Vec::new();
    let mut retired: HashSet<Pair> = HashSet::new();

    while tokens.len() < opts.target_size {
        let Some(top) = heap.pop() else { break };
        let current = pair_counts.get(&top.pair).copied().unwrap_or(0);
        if retired.contains(&top.pair) || current == 0 {
            continue;
        }
        if current != top.count {
            heap.push(candidate(&tokens, top.pair, current));
            continue;
        }
        if current < opts.min_pair_count {
            break;
        }
        let merged_text = format!("{}{}", top.left, top.right);
        retired.insert(top.pair);
        // A merged string that spells a byte-fallback token name would alias it.
        if opts.symbols == SymbolMode::ByteFallback && parse_byte_token(&merged_text).is_some() {
            continue;
        }
        let merged = match token_ids.get(merged_text.as_str()) {
            Some(&id) => id,
            None => {
                let id = tokens.len() as u32;
                let text: Arc<str> = Arc::from(merged_text.as_str());
                tokens.push(text.clone());
                token_ids.insert(text, id);
                id
            }
        };
        merges.push((top.left.to_string(), top.right.to_string()));

        let mut affected: Vec<usize> = locations.remove(&top.pair).unwrap_or_default().into_iter().collect();
        affected.sort_unstable();
        let mut delta: HashMap<Pair, i64> = HashMap::new();
        for w in affected {
            let f = freqs[w] as i64;
            for p in pairs_of(&words[w]) {
                *delta.entry(p).or_insert(0) -= f;
            }
            apply_merge(&mut words[w], top.pair, merged);
            for p in pairs_of(&words[w]) {
                *delta.entry(p).or_insert(0) += f;
                if p != top.pair {
                    locations.entry(p).or_default().insert(w);
                }
            }
        }
        pair_counts.remove(&top.pair);
        let mut changed: Vec<(Pair, i64)> = delta.into_iter().filter(|(p, d)| *d != 0 && *p != top.pair).collect();
        changed.sort_unstable();
        for (p, d) in changed {
            let entry = pair_counts.entry(p).or_insert(0);
            *entry = (*entry as i64 + d) as u64;
            if *entry == 0 {
                pair_counts.remove(&p);
                locations.remove(&p);
            } else if d > 0 && !retired.contains(&p) {
                heap.push(candidate(&tokens, p, *entry));
            }
        }
    }

    let vocab = tokens.iter().enumerate().map(|(i, t)| (t.to_string(), i as u32)).collect();
    Vocabulary::from_parts(VocabularyParts {
        base_alphabet: alphabet,
        merges,
        vocab,
        symbols: opts.symbols,
        pretoken: opts.rules,
    })
}
