//! Shannon entropy and normalized entropy over empirical element
//! distributions, at character and token level.
//!
//! All logarithms are base 2. The outcome space used for normalization is the
//! set of distinct elements actually observed in the analyzed sequence or
//! dataset, and dataset figures pool every element of the set into a single
//! frequency table.

use std::collections::BTreeMap;
use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::secrets::{SecretPattern, Segment};
use crate::tokenizer::{TokenizerError, Vocabulary};

/// Tolerance used when checking that probabilities sum to one.
pub const PROBABILITY_TOLERANCE: f64 = 1e-9;

/// Describes how the outcome space is built; echoed into reports.
pub const OUTCOME_SPACE_NOTE: &str =
    "outcome space = distinct elements observed in the analyzed set (empirical construction)";

#[derive(Debug, thiserror::Error)]
pub enum EntropyError {
    #[error("cannot build a distribution from zero observations")]
    Empty,
    #[error("outcome space must contain at least one element")]
    ZeroOutcomes,
    #[error("invalid probability {value} for outcome {outcome}")]
    InvalidProbability { outcome: String, value: f64 },
    #[error("probabilities sum to {0}, not 1")]
    NotNormalized(f64),
    #[error("pattern generates the empty string")]
    EmptyPattern,
    #[error("labeled set {0:?} is empty")]
    EmptySet(String),
    #[error(transparent)]
    Tokenizer(#[from] TokenizerError),
}

/// Empirical distribution over outcomes of type `T`. Only outcomes with
/// positive probability are stored.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DistributionTable<T: Ord> {
    probabilities: BTreeMap<T, f64>,
    counts: BTreeMap<T, u64>,
    total_observations: u64,
}

impl<T: Ord + Clone> DistributionTable<T> {
    /// `p(x) = count(x) / n`.
    pub fn from_elements<I: IntoIterator<Item = T>>(elements: I) -> Result<Self, EntropyError> {
        let mut counts = BTreeMap::new();
        for e in elements {
            *counts.entry(e).or_insert(0u64) += 1;
        }
        Self::from_counts(counts)
    }

    /// Zero counts are dropped.
    pub fn from_counts(mut counts: BTreeMap<T, u64>) -> Result<Self, EntropyError> {
        counts.retain(|_, c| *c > 0);
        let total: u64 = counts.values().sum();
        if total == 0 {
            return Err(EntropyError::Empty);
        }
        let probabilities = counts.iter().map(|(k, &c)| (k.clone(), c as f64 / total as f64)).collect();
        Ok(Self { probabilities, counts, total_observations: total })
    }

    /// Builds a table from explicit probabilities. Zero entries are dropped;
    /// the table then reports `total_observations == 0`.
    pub fn from_probabilities<I>(entries: I) -> Result<Self, EntropyError>
    where
        I: IntoIterator<Item = (T, f64)>,
        T: fmt::Debug,
    {
        let mut probabilities = BTreeMap::new();
        for (k, p) in entries {
            if !(0.0..=1.0 + PROBABILITY_TOLERANCE).contains(&p) || !p.is_finite() {
                return Err(EntropyError::InvalidProbability { outcome: format!("{k:?}"), value: p });
            }
            if p > 0.0 {
                *probabilities.entry(k).or_insert(0.0) += p;
            }
        }
        let sum: f64 = probabilities.values().sum();
        if probabilities.is_empty() {
            return Err(EntropyError::Empty);
        }
        if (sum - 1.0).abs() > PROBABILITY_TOLERANCE {
            return Err(EntropyError::NotNormalized(sum));
        }
        Ok(Self { probabilities, counts: BTreeMap::new(), total_observations: 0 })
    }

    pub fn probability(&self, outcome: &T) -> f64 {
        self.probabilities.get(outcome).copied().unwrap_or(0.0)
    }

    pub fn probabilities(&self) -> &BTreeMap<T, f64> {
        &self.probabilities
    }

    /// Raw counts; empty for tables built from probabilities.
    pub fn counts(&self) -> &BTreeMap<T, u64> {
        &self.counts
    }

    pub fn support_size(&self) -> usize {
        self.probabilities.len()
    }

    pub fn total_observations(&self) -> u64 {
        self.total_observations
    }
}

/// `-Σ p(x) log₂ p(x)` in bits.
pub fn entropy<T: Ord>(dist: &DistributionTable<T>) -> f64 {
    let h: f64 = dist.probabilities.values().filter(|&&p| p > 0.0).map(|&p| -p * p.log2()).sum();
    // -0.0 for the degenerate distribution reads badly in reports.
    h.max(0.0)
}

/// `entropy / log₂(unique_count)`, with a single-outcome space defined as 1.0.
pub fn normalized_entropy(entropy_bits: f64, unique_count: usize) -> Result<f64, EntropyError> {
    match unique_count {
        0 => Err(EntropyError::ZeroOutcomes),
        1 => Ok(1.0),
        n => Ok(entropy_bits / (n as f64).log2()),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Level {
    Char,
    Token,
}

impl fmt::Display for Level {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Level::Char => "char",
            Level::Token => "token",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scope {
    Sequence,
    Dataset,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntropyReport {
    pub level: Level,
    pub scope: Scope,
    pub unique_count: usize,
    pub entropy_bits: f64,
    pub max_entropy_bits: f64,
    pub normalized: f64,
}

impl EntropyReport {
    pub fn from_distribution<T: Ord + Clone>(level: Level, scope: Scope, dist: &DistributionTable<T>) -> Self {
        let unique_count = dist.support_size();
        let entropy_bits = entropy(dist);
        Self {
            level,
            scope,
            unique_count,
            entropy_bits,
            max_entropy_bits: (unique_count as f64).log2(),
            normalized: normalized_entropy(entropy_bits, unique_count).expect("tables are never empty"),
        }
    }
}

/// Character-level report for one string.
pub fn char_entropy(text: &str) -> Result<EntropyReport, EntropyError> {
    let dist = DistributionTable::from_elements(text.chars())?;
    Ok(EntropyReport::from_distribution(Level::Char, Scope::Sequence, &dist))
}

/// Token-level report for one string.
pub fn token_entropy(vocab: &Vocabulary, text: &str) -> Result<EntropyReport, EntropyError> {
    let dist = DistributionTable::from_elements(vocab.encode_ids(text)?)?;
    Ok(EntropyReport::from_distribution(Level::Token, Scope::Sequence, &dist))
}

/// Character entropy implied by a pattern's expected symbol counts.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PatternEntropyReport {
    pub pattern: String,
    /// Expected occurrences of each symbol in one generated string.
    pub expected_counts: BTreeMap<char, f64>,
    pub length: usize,
    pub entropy_bits: f64,
    pub max_entropy_bits: f64,
    pub normalized: f64,
}

/// Analytical character entropy of strings drawn from `pattern`.
///
/// Every literal character contributes one expected occurrence and every
/// class position contributes `1/|class|` to each of its members. The
/// expected counts are normalized by the string length and fed to the usual
/// entropy formula; the outcome space is every symbol with a positive
/// expected count. For `ghp_[a-zA-Z0-9]{36}` that is 63 symbols and
/// 5.915 of a possible 5.977 bits.
pub fn pattern_char_entropy(pattern: &SecretPattern) -> Result<PatternEntropyReport, EntropyError> {
    let mut expected: BTreeMap<char, f64> = BTreeMap::new();
    for segment in pattern.segments() {
        match segment {
            Segment::Literal(text) => {
                for c in text.chars() {
                    *expected.entry(c).or_insert(0.0) += 1.0;
                }
            }
            Segment::Class { charset, repeat } => {
                let share = f64::from(*repeat) / charset.len() as f64;
                for &c in charset {
                    *expected.entry(c).or_insert(0.0) += share;
                }
            }
        }
    }
    let length = pattern.len();
    if length == 0 {
        return Err(EntropyError::EmptyPattern);
    }
    let entropy_bits = expected
        .values()
        .map(|&n| n / length as f64)
        .filter(|&p| p > 0.0)
        .map(|p| -p * p.log2())
        .sum::<f64>()
        .max(0.0);
    let unique = expected.len();
    Ok(PatternEntropyReport {
        pattern: pattern.source_regex().to_owned(),
        expected_counts: expected,
        length,
        entropy_bits,
        max_entropy_bits: (unique as f64).log2(),
        normalized: normalized_entropy(entropy_bits, unique)?,
    })
}

/// One row of a dataset statistics table: the same labeled set measured at
/// character and at token level.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StatsRow {
    pub label: String,
    pub sequences: usize,
    pub char_level: EntropyReport,
    pub token_level: EntropyReport,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DatasetStats {
    pub outcome_space: &'static str,
    pub rows: Vec<StatsRow>,
}

impl DatasetStats {
    pub fn row(&self, label: &str) -> Option<&StatsRow> {
        self.rows.iter().find(|r| r.label == label)
    }

    /// `label,level,unique,entropy_bits,max_entropy_bits,normalized`, one row
    /// per label and level.
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["label", "level", "unique", "entropy_bits", "max_entropy_bits", "normalized"])
            .expect("in-memory write");
        for row in &self.rows {
            for r in [&row.char_level, &row.token_level] {
                w.write_record([
                    row.label.clone(),
                    r.level.to_string(),
                    r.unique_count.to_string(),
                    format!("{:.6}", r.entropy_bits),
                    format!("{:.6}", r.max_entropy_bits),
                    format!("{:.6}", r.normalized),
                ])
                .expect("in-memory write");
            }
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv output is utf-8")
    }
}

/// Pooled char- and token-level statistics for each labeled set.
pub fn dataset_stats<S>(labeled_sets: &BTreeMap<String, Vec<S>>, vocab: &Vocabulary) -> Result<DatasetStats, EntropyError>
where
    S: AsRef<str> + Sync,
{
    let mut rows = Vec::with_capacity(labeled_sets.len());
    for (label, seqs) in labeled_sets {
        if seqs.is_empty() {
            return Err(EntropyError::EmptySet(label.clone()));
        }
        let chars = DistributionTable::from_elements(seqs.iter().flat_map(|s| s.as_ref().chars()))
            .map_err(|_| EntropyError::EmptySet(label.clone()))?;
        let encoded = seqs
            .par_iter()
            .map(|s| vocab.encode_ids(s.as_ref()))
            .collect::<Result<Vec<_>, _>>()?;
        let tokens = DistributionTable::from_elements(encoded.into_iter().flatten())
            .map_err(|_| EntropyError::EmptySet(label.clone()))?;
        rows.push(StatsRow {
            label: label.clone(),
            sequences: seqs.len(),
            char_level: EntropyReport::from_distribution(Level::Char, Scope::Dataset, &chars),
            token_level: EntropyReport::from_distribution(Level::Token, Scope::Dataset, &tokens),
        });
    }
    Ok(DatasetStats { outcome_space: OUTCOME_SPACE_NOTE, rows })
}
