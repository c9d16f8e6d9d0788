//! Slow reference implementations used to cross-check the library.
//!
//! The trainer recounts every adjacent pair from scratch on each iteration
//! and the segmenter repeatedly scans for the lowest-ranked pair. Neither
//! shares code with the crate under test.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};

/// Whitespace runs stand alone, except that a single trailing space of a run
/// is glued to the word after it.
pub fn split_pieces(text: &str) -> Vec<String> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let ws = chars[i].is_whitespace();
        let mut j = i;
        while j < chars.len() && chars[j].is_whitespace() == ws {
            j += 1;
        }
        if ws && j < chars.len() && chars[j - 1] == ' ' {
            if j - 1 > i {
                out.push(chars[i..j - 1].iter().collect());
            }
            let mut k = j;
            while k < chars.len() && !chars[k].is_whitespace() {
                k += 1;
            }
            out.push(chars[j - 1..k].iter().collect());
            i = k;
        } else {
            out.push(chars[i..j].iter().collect());
            i = j;
        }
    }
    out
}

fn merge_word(word: &[String], left: &str, right: &str) -> Vec<String> {
    let mut out = Vec::with_capacity(word.len());
    let mut i = 0;
    while i < word.len() {
        if i + 1 < word.len() && word[i] == left && word[i + 1] == right {
            out.push(format!("{left}{right}"));
            i += 2;
        } else {
            out.push(word[i].clone());
            i += 1;
        }
    }
    out
}

/// Character-mode BPE training by exhaustive recounting. Returns the merge
/// list and the base alphabet.
pub fn train_merges(corpus: &[&str], target: usize, min_count: u64) -> (Vec<(String, String)>, Vec<String>) {
    let mut words: Vec<Vec<String>> = Vec::new();
    for doc in corpus {
        for piece in split_pieces(doc) {
            words.push(piece.chars().map(|c| c.to_string()).collect());
        }
    }
    let alphabet: Vec<String> = words.iter().flatten().cloned().collect::<BTreeSet<_>>().into_iter().collect();
    let mut vocab: HashSet<String> = alphabet.iter().cloned().collect();
    let mut merges = Vec::new();
    while vocab.len() < target {
        let mut counts: BTreeMap<(String, String), u64> = BTreeMap::new();
        for w in &words {
            for p in w.windows(2) {
                *counts.entry((p[0].clone(), p[1].clone())).or_insert(0) += 1;
            }
        }
        let mut best: Option<(&(String, String), u64)> = None;
        for (pair, &c) in &counts {
            if best.map_or(true, |(_, bc)| c > bc) {
                best = Some((pair, c));
            }
        }
        let Some(((l, r), c)) = best else { break };
        if c < min_count {
            break;
        }
        let (l, r) = (l.clone(), r.clone());
        vocab.insert(format!("{l}{r}"));
        for w in words.iter_mut() {
            *w = merge_word(w, &l, &r);
        }
        merges.push((l, r));
    }
    (merges, alphabet)
}

/// Segments one piece: find the lowest-ranked adjacent pair, merge all of its
/// non-overlapping occurrences left to right, repeat.
pub fn segment_piece(piece: &str, merges: &[(String, String)]) -> Vec<String> {
    let ranks: HashMap<(&str, &str), usize> =
        merges.iter().enumerate().map(|(i, (l, r))| ((l.as_str(), r.as_str()), i)).collect();
    let mut word: Vec<String> = piece.chars().map(|c| c.to_string()).collect();
    loop {
        let best = word
            .windows(2)
            .filter_map(|p| ranks.get(&(p[0].as_str(), p[1].as_str())).map(|&r| (r, p[0].clone(), p[1].clone())))
            .min();
        let Some((_, l, r)) = best else { return word };
        word = merge_word(&word, &l, &r);
    }
}

/// Full-text segmentation into token strings.
pub fn segment_text(text: &str, merges: &[(String, String)]) -> Vec<String> {
    split_pieces(text).iter().flat_map(|p| segment_piece(p, merges)).collect()
}
