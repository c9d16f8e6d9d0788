use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{Corpus, SecretPattern};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SecretSource {
    pub document_id: String,
    /// Byte offset into the document text.
    pub offset: usize,
    /// Byte length of the match.
    pub length: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SecretRecord {
    pub value: String,
    pub pattern_name: String,
    pub source: SecretSource,
}

/// Leftmost non-overlapping matches of each pattern in every document.
/// Matches of different patterns may overlap. Records follow corpus order,
/// then offset, then pattern order.
pub fn scan(corpus: &Corpus, patterns: &[SecretPattern]) -> Vec<SecretRecord> {
    let compiled: Vec<_> = patterns.iter().map(|p| p.compile()).collect();
    let mut hits: Vec<(usize, usize, usize, SecretRecord)> = corpus
        .documents()
        .par_iter()
        .enumerate()
        .flat_map_iter(|(di, doc)| {
            let mut local = Vec::new();
            for (pi, re) in compiled.iter().enumerate() {
                for m in re.find_iter(&doc.text) {
                    let record = SecretRecord {
                        value: m.as_str().to_owned(),
                        pattern_name: patterns[pi].name().to_owned(),
                        source: SecretSource { document_id: doc.id.clone(), offset: m.start(), length: m.len() },
                    };
                    local.push((di, m.start(), pi, record));
                }
            }
            local
        })
        .collect();
    hits.sort_by_key(|h| (h.0, h.1, h.2));
    hits.into_iter().map(|h| h.3).collect()
}
