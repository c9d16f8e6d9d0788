use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{SecretPattern, Segment};

fn draw(pattern: &SecretPattern, rng: &mut ChaCha8Rng) -> String {
    let mut s = String::with_capacity(pattern.len());
    for seg in pattern.segments() {
        match seg {
            Segment::Literal(t) => s.push_str(t),
            Segment::Class { charset, repeat } => {
                for _ in 0..*repeat {
                    // `random_range` rejects out-of-zone draws, so indices are unbiased.
                    s.push(charset[rng.random_range(0..charset.len())]);
                }
            }
        }
    }
    s
}

/// `count` strings drawn uniformly from the pattern's language. The same
/// `(pattern, count, seed)` always yields the same list.
pub fn generate(pattern: &SecretPattern, count: usize, seed: u64) -> Vec<String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count).map(|_| draw(pattern, &mut rng)).collect()
}

/// `count` secrets cycling through `patterns` in order, paired with the
/// pattern name.
pub fn generate_mixed(patterns: &[SecretPattern], count: usize, seed: u64) -> Vec<(String, String)> {
    if patterns.is_empty() {
        return Vec::new();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|i| {
            let p = &patterns[i % patterns.len()];
            (p.name().to_owned(), draw(p, &mut rng))
        })
        .collect()
}
