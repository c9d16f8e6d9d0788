//! The end-to-end audit: ingest a corpus, obtain a vocabulary, generate
//! secrets and matching corpus snippets, then run every analysis and the
//! strip mitigation, writing one JSON report plus CSV sidecars.

mod config;

use std::collections::BTreeMap;
use std::fs::{self, File, OpenOptions};
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

pub use config::{AuditConfig, TokenizerSource, DEFAULT_OUTPUT_DIR};

use crate::analysis::{
    kl_divergence, length_histogram, probe_pairs, rank_frequency, token_distribution, GridProbe, GridSummary,
    LengthHistogram, RankFrequencyTable,
};
use crate::entropy::{dataset_stats, DatasetStats, EntropyReport, Level, Scope};
use crate::mitigation::{identify_gibberish, strip_tokens, GibberishCandidates, StripSet};
use crate::secrets::{bundled_patterns, generate_mixed, ingest, load_pattern_file, scan, Corpus, IngestOptions};
use crate::tokenizer::{import_hub_file, train, TrainOptions, Vocabulary, FORMAT_VERSION};

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");
pub const LOCK_FILE: &str = ".tokaudit.lock";
pub const REPORT_FILE: &str = "report.json";

type BoxError = Box<dyn std::error::Error + Send + Sync>;

#[derive(Debug, thiserror::Error)]
pub enum AuditError {
    #[error("invalid configuration: {0}")]
    Validation(String),
    #[error("stage `{stage}` failed: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: BoxError,
    },
    #[error("output directory is locked by another run ({0} exists)")]
    Locked(PathBuf),
}

fn stage<T, E: Into<BoxError>>(name: &'static str, r: Result<T, E>) -> Result<T, AuditError> {
    r.map_err(|e| AuditError::Stage { stage: name, source: e.into() })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorpusSummary {
    pub document_count: usize,
    pub byte_total: u64,
    pub file_count: usize,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TokenizerSummary {
    pub fingerprint: String,
    pub size: usize,
    pub base_alphabet_size: usize,
    pub merges: usize,
    pub symbols: crate::tokenizer::SymbolMode,
    pub caveats: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SecretsSummary {
    pub generated: usize,
    pub per_pattern: BTreeMap<String, usize>,
    /// Matches of each pattern found by scanning the corpus.
    pub corpus_matches: BTreeMap<String, usize>,
    pub snippets: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KlSummary {
    pub direction: &'static str,
    pub epsilon: f64,
    pub bits: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProbeSummary {
    #[serde(flatten)]
    pub grid: GridSummary,
    /// Alphabet characters the vocabulary cannot encode, left out of the grid.
    pub skipped: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StripSummary {
    pub stripped_tokens: usize,
    pub vocabulary_size_after: usize,
    pub fingerprint_after: String,
    pub secret_tokens_before: u64,
    pub secret_tokens_after: u64,
    pub secrets_token_level_before: EntropyReport,
    pub secrets_token_level_after: EntropyReport,
    pub snippets_token_level_before: EntropyReport,
    pub snippets_token_level_after: EntropyReport,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AuditReport {
    pub tool_version: &'static str,
    pub vocabulary_format_version: u32,
    pub config: AuditConfig,
    pub corpus: CorpusSummary,
    pub tokenizer: TokenizerSummary,
    pub secrets: SecretsSummary,
    pub dataset_stats: DatasetStats,
    pub length_histogram: LengthHistogram,
    pub rank_frequency: RankFrequencyTable,
    pub kl_divergence: KlSummary,
    pub probe_grid: ProbeSummary,
    pub gibberish: GibberishCandidates,
    pub strip: Option<StripSummary>,
}

impl AuditReport {
    /// Pretty JSON with object keys in sorted order.
    pub fn to_json(&self) -> String {
        let value = serde_json::to_value(self).expect("reports serialize");
        let mut s = serde_json::to_string_pretty(&value).expect("values serialize");
        s.push('\n');
        s
    }
}

/// The report together with every sidecar file, keyed by file name.
#[derive(Debug, Clone)]
pub struct AuditOutput {
    pub report: AuditReport,
    pub files: BTreeMap<String, String>,
    pub vocabulary: Vocabulary,
    pub secrets: Vec<String>,
    pub snippets: Vec<String>,
}

/// Random character windows from the corpus, one per requested length.
/// Start positions are uniform over every position where a window fits.
pub fn sample_snippets(corpus: &Corpus, lengths: &[usize], seed: u64) -> Result<Vec<String>, AuditError> {
    let docs: Vec<Vec<usize>> = corpus
        .documents()
        .iter()
        .map(|d| d.text.char_indices().map(|(i, _)| i).chain([d.text.len()]).collect())
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut cache: BTreeMap<usize, (Vec<u64>, u64)> = BTreeMap::new();
    let mut out = Vec::with_capacity(lengths.len());
    for &len in lengths {
        let (cumulative, total) = cache.entry(len).or_insert_with(|| {
            let mut acc = 0u64;
            let cum = docs
                .iter()
                .map(|b| {
                    let chars = b.len() - 1;
                    acc += (chars + 1).saturating_sub(len.max(1)) as u64;
                    acc
                })
                .collect();
            (cum, acc)
        });
        if *total == 0 {
            return Err(AuditError::Stage {
                stage: "snippets",
                source: format!("no document has {len} characters").into(),
            });
        }
        let pick = rng.random_range(0..*total);
        let di = cumulative.partition_point(|&c| c <= pick);
        let before = if di == 0 { 0 } else { cumulative[di - 1] };
        let start = (pick - before) as usize;
        let bounds = &docs[di];
        out.push(corpus.documents()[di].text[bounds[start]..bounds[start + len]].to_owned());
    }
    Ok(out)
}

fn token_report(vocab: &Vocabulary, texts: &[String]) -> Result<(EntropyReport, u64), AuditError> {
    let dist = stage("strip", token_distribution(vocab, texts, "secret"))?;
    Ok((EntropyReport::from_distribution(Level::Token, Scope::Dataset, &dist), dist.total_observations()))
}

/// Runs every stage in memory. Nothing is written.
pub fn compute_audit(config: &AuditConfig) -> Result<AuditOutput, AuditError> {
    config.validate()?;
    let mut files = BTreeMap::new();

    let opts = IngestOptions {
        text_field: config.text_field.clone(),
        max_document_bytes: config.max_document_bytes,
        extensions: config.extensions.clone(),
    };
    let corpus = stage("ingest", ingest(&config.corpus_paths, &opts))?;
    let manifest = corpus.manifest();
    let corpus_summary = CorpusSummary {
        document_count: manifest.document_count,
        byte_total: manifest.byte_total,
        file_count: manifest.files.len(),
        warnings: manifest.warnings.clone(),
    };
    let corpus_texts: Vec<&str> = corpus.texts().collect();

    let (vocab, caveats) = match &config.tokenizer {
        TokenizerSource::Train { vocab_size, pretoken, symbols, min_pair_count } => {
            let opts = TrainOptions {
                target_size: *vocab_size,
                rules: *pretoken,
                symbols: *symbols,
                min_pair_count: *min_pair_count,
            };
            (stage("tokenizer", train(corpus_texts.iter().copied(), &opts))?, Vec::new())
        }
        TokenizerSource::Import { path } => {
            let imp = stage("tokenizer", import_hub_file(path))?;
            (imp.vocab, imp.caveats)
        }
        TokenizerSource::Native { path } => (stage("tokenizer", Vocabulary::load(path))?, Vec::new()),
    };
    let tokenizer = TokenizerSummary {
        fingerprint: vocab.fingerprint().to_owned(),
        size: vocab.len(),
        base_alphabet_size: vocab.base_alphabet().len(),
        merges: vocab.merges().len(),
        symbols: vocab.symbols(),
        caveats,
    };
    files.insert("vocabulary.json".to_owned(), vocab.to_json());

    let patterns = match &config.pattern_file {
        Some(p) => stage("secrets", load_pattern_file(p))?,
        None => bundled_patterns(),
    };
    let labeled = generate_mixed(&patterns, config.secret_count, config.seed);
    let mut per_pattern = BTreeMap::new();
    for (name, _) in &labeled {
        *per_pattern.entry(name.clone()).or_insert(0) += 1;
    }
    let secrets: Vec<String> = labeled.into_iter().map(|(_, s)| s).collect();
    let mut corpus_matches: BTreeMap<String, usize> = patterns.iter().map(|p| (p.name().to_owned(), 0)).collect();
    for r in scan(&corpus, &patterns) {
        *corpus_matches.entry(r.pattern_name).or_insert(0) += 1;
    }

    let lengths: Vec<usize> = secrets.iter().map(|s| s.chars().count()).collect();
    let snippets = sample_snippets(&corpus, &lengths, config.seed.wrapping_add(1))?;
    files.insert("secrets.txt".to_owned(), lines(&secrets));
    files.insert("snippets.txt".to_owned(), lines(&snippets));

    let sets = BTreeMap::from([("secrets".to_owned(), secrets.clone()), ("snippets".to_owned(), snippets.clone())]);
    let stats = stage("dataset_stats", dataset_stats(&sets, &vocab))?;
    files.insert("dataset_stats.csv".to_owned(), stats.to_csv());

    let hist = stage("length_histogram", length_histogram(&vocab, &secrets))?;
    files.insert("length_histogram.csv".to_owned(), hist.to_csv());

    let ranks = stage(
        "rank_frequency",
        rank_frequency(&vocab, &secrets, &corpus_texts, config.rank_top_k, config.kl_epsilon),
    )?;
    files.insert("rank_frequency.csv".to_owned(), ranks.to_csv());

    let p = stage("kl_divergence", token_distribution(&vocab, &secrets, "secret"))?;
    let q = stage("kl_divergence", token_distribution(&vocab, &corpus_texts, "corpus"))?;
    let kl = KlSummary {
        direction: "secrets||corpus",
        epsilon: config.kl_epsilon,
        bits: stage("kl_divergence", kl_divergence(&p, &q, config.kl_epsilon))?,
    };

    let (probe_chars, skipped): (Vec<char>, Vec<char>) =
        config.probe_alphabet.chars().partition(|c| vocab.encode_ids(&c.to_string()).is_ok());
    let grid: GridProbe = stage("probe_grid", probe_pairs(&vocab, &probe_chars, config.probe_mode))?;
    files.insert("probe_grid.csv".to_owned(), grid.to_csv());
    files.insert("probe_grid.svg".to_owned(), grid.to_svg());
    files.insert("probe_grid.pgm".to_owned(), grid.to_pgm());
    let probe = ProbeSummary { grid: grid.summary(), skipped: skipped.into_iter().collect() };

    let gibberish = stage(
        "gibberish",
        identify_gibberish(&vocab, &corpus_texts, &secrets, config.gibberish_top_k, config.gibberish_epsilon),
    )?;
    files.insert("gibberish.csv".to_owned(), gibberish.to_csv());

    let strip = if config.strip {
        let set = stage("strip", StripSet::from_candidates(&vocab, &gibberish))?;
        let stripped = stage("strip", strip_tokens(&vocab, &set))?;
        let (sb, nb) = token_report(&vocab, &secrets)?;
        let (sa, na) = token_report(&stripped, &secrets)?;
        let (pb, _) = token_report(&vocab, &snippets)?;
        let (pa, _) = token_report(&stripped, &snippets)?;
        files.insert("strip_set.json".to_owned(), set.to_json());
        files.insert("stripped_vocabulary.json".to_owned(), stripped.to_json());
        Some(StripSummary {
            stripped_tokens: set.ids.len(),
            vocabulary_size_after: stripped.len(),
            fingerprint_after: stripped.fingerprint().to_owned(),
            secret_tokens_before: nb,
            secret_tokens_after: na,
            secrets_token_level_before: sb,
            secrets_token_level_after: sa,
            snippets_token_level_before: pb,
            snippets_token_level_after: pa,
        })
    } else {
        None
    };

    let report = AuditReport {
        tool_version: TOOL_VERSION,
        vocabulary_format_version: FORMAT_VERSION,
        config: config.clone(),
        corpus: corpus_summary,
        tokenizer,
        secrets: SecretsSummary {
            generated: secrets.len(),
            per_pattern,
            corpus_matches,
            snippets: snippets.len(),
        },
        dataset_stats: stats,
        length_histogram: hist,
        rank_frequency: ranks,
        kl_divergence: kl,
        probe_grid: probe,
        gibberish,
        strip,
    };
    Ok(AuditOutput { report, files, vocabulary: vocab, secrets, snippets })
}

fn lines(items: &[String]) -> String {
    let mut s = String::new();
    for i in items {
        s.push_str(i);
        s.push('\n');
    }
    s
}

struct Lock(PathBuf);

impl Lock {
    fn acquire(dir: &Path) -> Result<Self, AuditError> {
        let path = dir.join(LOCK_FILE);
        match OpenOptions::new().write(true).create_new(true).open(&path) {
            Ok(_) => Ok(Lock(path)),
            Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => Err(AuditError::Locked(path)),
            Err(e) => Err(AuditError::Stage { stage: "output", source: e.into() }),
        }
    }
}

impl Drop for Lock {
    fn drop(&mut self) {
        let _ = fs::remove_file(&self.0);
    }
}

struct Staging(PathBuf);

impl Drop for Staging {
    fn drop(&mut self) {
        let _ = fs::remove_dir_all(&self.0);
    }
}

fn write_outputs(dir: &Path, output: &AuditOutput) -> Result<(), AuditError> {
    let staging = Staging(dir.join(format!(".staging-{}", std::process::id())));
    let io = |r: std::io::Result<()>| stage("output", r);
    io(fs::create_dir_all(&staging.0))?;
    let report = output.report.to_json();
    for (name, body) in output.files.iter().map(|(k, v)| (k.as_str(), v)).chain([(REPORT_FILE, &report)]) {
        io(fs::write(staging.0.join(name), body))?;
    }
    for name in output.files.keys() {
        io(fs::rename(staging.0.join(name), dir.join(name)))?;
    }
    // The report goes last so its presence means the run completed.
    io(fs::rename(staging.0.join(REPORT_FILE), dir.join(REPORT_FILE)))?;
    io(File::open(dir).and_then(|d| d.sync_all()).or(Ok(())))
}

/// Validates the configuration, runs the audit and writes every output into
/// `config.output_dir`. Files are staged first and moved into place only
/// after all stages succeed, with `report.json` last.
pub fn run_audit(config: &AuditConfig) -> Result<AuditReport, AuditError> {
    config.validate()?;
    stage("output", fs::create_dir_all(&config.output_dir))?;
    let _lock = Lock::acquire(&config.output_dir)?;
    let output = compute_audit(config)?;
    write_outputs(&config.output_dir, &output)?;
    Ok(output.report)
}
