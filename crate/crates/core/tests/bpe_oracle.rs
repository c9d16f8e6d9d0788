mod support;

use proptest::prelude::*;
use support::oracle;
use tokaudit::tokenizer::{train, SymbolMode, TrainOptions, Vocabulary};

fn merges_of(v: &Vocabulary) -> Vec<(String, String)> {
    v.merges().iter().map(|m| (m.left.clone(), m.right.clone())).collect()
}

fn corpus_strategy() -> impl Strategy<Value = Vec<String>> {
    prop::collection::vec("[abcd ]{0,60}( [ab]{1,4}\n)?", 1..8)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn merges_match_brute_force(corpus in corpus_strategy(), extra in 0usize..40, min in 1u64..3) {
        let refs: Vec<&str> = corpus.iter().map(String::as_str).collect();
        prop_assume!(refs.iter().any(|d| !d.is_empty()));
        let (expected, alphabet) = oracle::train_merges(&refs, alphabet_len(&refs) + extra, min);
        let opts = TrainOptions { min_pair_count: min, ..TrainOptions::new(alphabet.len() + extra) };
        let v = train(&refs, &opts).unwrap();
        prop_assert_eq!(v.base_alphabet(), alphabet.as_slice());
        prop_assert_eq!(merges_of(&v), expected);
    }

    #[test]
    fn segmentation_matches_brute_force(corpus in corpus_strategy(), text in "[abcd \n]{0,80}") {
        let refs: Vec<&str> = corpus.iter().map(String::as_str).collect();
        let joined: String = refs.concat() + "abcd \n";
        let v = train([joined.as_str()].into_iter().chain(refs.iter().copied()), &TrainOptions::new(40)).unwrap();
        let ids = v.encode_ids(&text).unwrap();
        let got: Vec<&str> = ids.iter().map(|&i| v.token(i).unwrap()).collect();
        prop_assert_eq!(got, oracle::segment_text(&text, &merges_of(&v)));
    }

    #[test]
    fn larger_targets_extend_the_merge_list(corpus in corpus_strategy(), a in 0usize..20, b in 0usize..20) {
        let refs: Vec<&str> = corpus.iter().map(String::as_str).collect();
        prop_assume!(refs.iter().any(|d| !d.is_empty()));
        let base = alphabet_len(&refs);
        let (lo, hi) = (base + a.min(b), base + a.max(b));
        let small = merges_of(&train(&refs, &TrainOptions::new(lo)).unwrap());
        let large = merges_of(&train(&refs, &TrainOptions::new(hi)).unwrap());
        prop_assert_eq!(&large[..small.len()], small.as_slice());
    }

    #[test]
    fn byte_level_round_trip(text in "\\PC{0,40}") {
        let v = train(["hello world, hello tokens"], &TrainOptions { symbols: SymbolMode::ByteLevel, ..TrainOptions::new(280) }).unwrap();
        prop_assert_eq!(v.decode(&v.encode_ids(&text).unwrap()).unwrap(), text);
    }

    #[test]
    fn byte_fallback_round_trip(text in "\\PC{0,40}") {
        let v = train(["hello world, hello tokens"], &TrainOptions { symbols: SymbolMode::ByteFallback, ..TrainOptions::new(300) }).unwrap();
        prop_assert_eq!(v.decode(&v.encode_ids(&text).unwrap()).unwrap(), text);
    }

    #[test]
    fn merge_ranks_are_consecutive(corpus in corpus_strategy()) {
        let refs: Vec<&str> = corpus.iter().map(String::as_str).collect();
        prop_assume!(refs.iter().any(|d| !d.is_empty()));
        let v = train(&refs, &TrainOptions::new(60)).unwrap();
        for (i, m) in v.merges().iter().enumerate() {
            prop_assert_eq!(m.rank as usize, i);
            prop_assert!(v.token_id(&m.merged()).is_some());
        }
    }
}

fn alphabet_len(corpus: &[&str]) -> usize {
    corpus.iter().flat_map(|d| d.chars()).collect::<std::collections::BTreeSet<_>>().len()
}

#[test]
fn chars_round_trip_over_alphabet() {
    let v = train(["the quick brown fox jumps over the lazy dog\n"], &TrainOptions::new(60)).unwrap();
    let alphabet: Vec<char> = "the quick brown fox jumps over the lazy dog\n".chars().collect();
    let mut state = 0x2545_f491_4f6c_dd1du64;
    for _ in 0..2000 {
        let len = (state % 30) as usize;
        let s: String = (0..len)
            .map(|_| {
                state ^= state << 13;
                state ^= state >> 7;
                state ^= state << 17;
                alphabet[(state % alphabet.len() as u64) as usize]
            })
            .collect();
        assert_eq!(v.decode(&v.encode_ids(&s).unwrap()).unwrap(), s);
    }
}
