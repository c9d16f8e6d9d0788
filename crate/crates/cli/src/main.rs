use std::collections::BTreeMap;
use std::fmt::Display;
use std::io::{self, Read, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, CommandFactory, FromArgMatches, Parser, Subcommand, ValueEnum};
use serde_json::json;

use tokaudit::analysis::{
    kl_divergence, length_histogram, probe_pairs, rank_frequency, token_distribution, ProbeMode,
    DEFAULT_KL_EPSILON, DEFAULT_PROBE_ALPHABET, DEFAULT_RANK_TOP_K,
};
use tokaudit::audit::{run_audit, AuditConfig, AuditError, TokenizerSource, DEFAULT_OUTPUT_DIR, TOOL_VERSION};
use tokaudit::entropy::{char_entropy, dataset_stats, pattern_char_entropy, token_entropy, DistributionTable};
use tokaudit::mitigation::{
    guard_encode, identify_gibberish, strip_tokens, vocab_difference, StripSet, DEFAULT_GIBBERISH_EPSILON,
};
use tokaudit::scaling::{suggest_vocab_size, VocabScalingModel};
use tokaudit::secrets::{
    bundled_patterns, generate, generate_mixed, ingest, load_pattern_file, scan, IngestOptions, SecretPattern,
};
use tokaudit::tokenizer::{
    import_hub_file, train, PreTokenMode, PreTokenRules, SymbolMode, TrainOptions, Vocabulary, FORMAT_VERSION,
};

const OUTPUT_DIR_ENV: &str = "TOKAUDIT_OUTPUT_DIR";

#[derive(Parser)]
#[command(name = "tokaudit", about = "Audit BPE tokenizers for gibberish bias on secret-like strings")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train a BPE vocabulary on a corpus
    Train(TrainArgs),
    /// Convert a model-hub tokenizer.json into a native vocabulary file
    Import(ImportArgs),
    /// Encode text (argument or stdin) into token ids
    Encode(EncodeArgs),
    /// Token count of every two-character string over an alphabet
    ProbeGrid(ProbeArgs),
    /// Character- and token-level entropy of one text
    Entropy(EntropyArgs),
    /// Analytical character entropy of a secret pattern
    PatternEntropy(PatternEntropyArgs),
    /// Generate secrets from patterns
    GenSecrets(GenArgs),
    /// Scan a corpus for secrets
    Scan(ScanArgs),
    /// KL divergence between two token distributions
    Kl(KlArgs),
    /// Histogram of token occurrences by character length
    HistLengths(HistArgs),
    /// Rank-frequency table of P tokens against Q
    RankFreq(RankArgs),
    /// Score tokens by secret versus normal usage
    IdentifyGibberish(GibberishArgs),
    /// Delete tokens from a vocabulary
    Strip(StripArgs),
    /// Vocabulary size suggested by the scaling law
    SuggestVocab(SuggestArgs),
    /// Pooled entropy statistics for labeled sets of lines
    Stats(StatsArgs),
    /// Run the full audit pipeline
    Audit(AuditArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Symbols {
    Chars,
    ByteFallback,
    ByteLevel,
}

impl From<Symbols> for SymbolMode {
    fn from(s: Symbols) -> Self {
        match s {
            Symbols::Chars => SymbolMode::Chars,
            Symbols::ByteFallback => SymbolMode::ByteFallback,
            Symbols::ByteLevel => SymbolMode::ByteLevel,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Pretoken {
    Whitespace,
    None,
}

#[derive(Args)]
struct CorpusArgs {
    /// Files or directories (.txt read whole, .jsonl one document per line)
    #[arg(long = "input", num_args = 1.., required = true)]
    input: Vec<PathBuf>,
    /// JSON field holding the text in .jsonl records
    #[arg(long, default_value = "text")]
    text_field: String,
    /// Extensions read when recursing into directories
    #[arg(long = "ext", value_delimiter = ',', default_value = "txt,jsonl")]
    extensions: Vec<String>,
}

#[derive(Args)]
struct TrainArgs {
    #[command(flatten)]
    corpus: CorpusArgs,
    #[arg(long)]
    vocab_size: usize,
    #[arg(long, short)]
    output: PathBuf,
    #[arg(long, value_enum, default_value = "chars")]
    symbols: Symbols,
    #[arg(long, value_enum, default_value = "whitespace")]
    pretoken: Pretoken,
    #[arg(long)]
    lowercase: bool,
    #[arg(long, default_value_t = 2)]
    min_pair_count: u64,
}

#[derive(Args)]
struct ImportArgs {
    /// tokenizer.json
    #[arg(long)]
    input: PathBuf,
    #[arg(long, short)]
    output: PathBuf,
}

#[derive(Args)]
struct EncodeArgs {
    #[arg(long)]
    vocab: PathBuf,
    /// Text to encode; stdin when absent
    #[arg(long)]
    text: Option<String>,
    /// Encode pattern matches one character per token
    #[arg(long)]
    guard: bool,
    #[arg(long)]
    patterns: Option<PathBuf>,
}

#[derive(Args)]
struct ProbeArgs {
    #[arg(long)]
    vocab: PathBuf,
    #[arg(long, default_value = DEFAULT_PROBE_ALPHABET)]
    alphabet: String,
    /// Prefix every pair with a space
    #[arg(long)]
    space_prefix: bool,
    /// Directory for probe_grid.csv/.pgm/.svg
    #[arg(long)]
    output_dir: PathBuf,
}

#[derive(Args)]
struct EntropyArgs {
    #[arg(long)]
    text: Option<String>,
    /// Adds the token-level figures
    #[arg(long)]
    vocab: Option<PathBuf>,
}

#[derive(Args)]
struct PatternEntropyArgs {
    #[arg(long)]
    regex: String,
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct GenArgs {
    /// Regex to generate from; overrides --patterns
    #[arg(long)]
    regex: Option<String>,
    #[arg(long)]
    patterns: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    count: usize,
    #[arg(long, default_value_t = 42)]
    seed: u64,
}

#[derive(Args)]
struct ScanArgs {
    #[command(flatten)]
    corpus: CorpusArgs,
    #[arg(long)]
    patterns: Option<PathBuf>,
}

#[derive(Args)]
struct KlArgs {
    /// JSON object of outcome weights for P
    #[arg(long, requires = "q_dist", conflicts_with_all = ["vocab", "p_lines"])]
    p_dist: Option<PathBuf>,
    #[arg(long)]
    q_dist: Option<PathBuf>,
    #[arg(long, requires_all = ["p_lines", "q_input"])]
    vocab: Option<PathBuf>,
    /// One P text per line
    #[arg(long)]
    p_lines: Option<PathBuf>,
    /// Q corpus paths
    #[arg(long, num_args = 1..)]
    q_input: Vec<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_KL_EPSILON)]
    epsilon: f64,
    /// Extensions read when recursing into directories
    #[arg(long = "ext", value_delimiter = ',', default_value = "txt,jsonl")]
    extensions: Vec<String>,
}

#[derive(Args)]
struct HistArgs {
    #[arg(long)]
    vocab: PathBuf,
    /// One text per line
    #[arg(long)]
    lines: PathBuf,
}

#[derive(Args)]
struct RankArgs {
    #[arg(long)]
    vocab: PathBuf,
    #[arg(long)]
    p_lines: PathBuf,
    #[arg(long, num_args = 1.., required = true)]
    q_input: Vec<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_RANK_TOP_K)]
    top_k: usize,
    #[arg(long, default_value_t = DEFAULT_KL_EPSILON)]
    epsilon: f64,
    /// Extensions read when recursing into directories
    #[arg(long = "ext", value_delimiter = ',', default_value = "txt,jsonl")]
    extensions: Vec<String>,
}

#[derive(Args)]
struct GibberishArgs {
    #[arg(long, required_unless_present = "secret_vocab")]
    vocab: Option<PathBuf>,
    /// Normal corpus paths
    #[arg(long, num_args = 1.., requires = "vocab")]
    normal: Vec<PathBuf>,
    /// One secret per line
    #[arg(long, requires = "vocab")]
    secret_lines: Option<PathBuf>,
    #[arg(long, default_value_t = 50)]
    top_k: usize,
    #[arg(long, default_value_t = DEFAULT_GIBBERISH_EPSILON)]
    epsilon: f64,
    /// Also write the candidates as a strip set
    #[arg(long)]
    strip_set_out: Option<PathBuf>,
    /// Difference mode: vocabulary trained on secrets
    #[arg(long, requires = "normal_vocab", conflicts_with = "vocab")]
    secret_vocab: Option<PathBuf>,
    /// Difference mode: vocabulary trained on normal text
    #[arg(long)]
    normal_vocab: Option<PathBuf>,
    /// Extensions read when recursing into directories
    #[arg(long = "ext", value_delimiter = ',', default_value = "txt,jsonl")]
    extensions: Vec<String>,
}

#[derive(Args)]
struct StripArgs {
    #[arg(long)]
    vocab: PathBuf,
    #[arg(long)]
    strip_set: PathBuf,
    #[arg(long, short)]
    output: PathBuf,
}

#[derive(Args)]
struct SuggestArgs {
    /// Non-embedding parameter count, e.g. 7e9
    #[arg(long)]
    params: f64,
    /// Model file {a, b, anchors}; the bundled model when absent
    #[arg(long)]
    model: Option<PathBuf>,
}

#[derive(Args)]
struct StatsArgs {
    #[arg(long)]
    vocab: PathBuf,
    /// label=FILE with one sequence per line; repeatable
    #[arg(long = "set", required = true)]
    sets: Vec<String>,
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct AuditArgs {
    /// JSON config; flags override its fields
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long = "corpus", num_args = 1..)]
    corpus: Vec<PathBuf>,
    /// Extensions read when recursing into directories
    #[arg(long = "ext", value_delimiter = ',')]
    extensions: Vec<String>,
    /// Train a vocabulary of this size on the corpus
    #[arg(long, conflicts_with_all = ["import", "native"])]
    vocab_size: Option<usize>,
    /// Audit a model-hub tokenizer.json
    #[arg(long, conflicts_with = "native")]
    import: Option<PathBuf>,
    /// Audit a native vocabulary file
    #[arg(long)]
    native: Option<PathBuf>,
    #[arg(long)]
    patterns: Option<PathBuf>,
    #[arg(long)]
    secret_count: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    output_dir: Option<PathBuf>,
    #[arg(long)]
    probe_alphabet: Option<String>,
    #[arg(long)]
    space_prefix: bool,
    #[arg(long)]
    kl_epsilon: Option<f64>,
    #[arg(long)]
    rank_top_k: Option<usize>,
    #[arg(long)]
    gibberish_top_k: Option<usize>,
    #[arg(long)]
    gibberish_epsilon: Option<f64>,
    #[arg(long)]
    no_strip: bool,
}

enum Failure {
    Validation(String),
    Runtime(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Validation(_) => 1,
            Failure::Runtime(_) => 2,
        }
    }
}

type Outcome = Result<(), Failure>;

fn rt<E: Display>(e: E) -> Failure {
    Failure::Runtime(e.to_string())
}

fn bad<E: Display>(e: E) -> Failure {
    Failure::Validation(e.to_string())
}

fn existing(path: &Path) -> Result<&Path, Failure> {
    if path.exists() {
        Ok(path)
    } else {
        Err(bad(format!("{} does not exist", path.display())))
    }
}

fn load_vocab(path: &Path) -> Result<Vocabulary, Failure> {
    Vocabulary::load(existing(path)?).map_err(rt)
}

fn load_patterns(path: Option<&Path>) -> Result<Vec<SecretPattern>, Failure> {
    match path {
        Some(p) => load_pattern_file(existing(p)?).map_err(rt),
        None => Ok(bundled_patterns()),
    }
}

fn read_lines(path: &Path) -> Result<Vec<String>, Failure> {
    let text = std::fs::read_to_string(existing(path)?).map_err(rt)?;
    Ok(text.lines().filter(|l| !l.is_empty()).map(str::to_owned).collect())
}

fn corpus_texts(paths: &[PathBuf], text_field: &str, extensions: &[String]) -> Result<Vec<String>, Failure> {
    for p in paths {
        existing(p)?;
    }
    let opts = IngestOptions {
        text_field: text_field.to_owned(),
        extensions: extensions.to_vec(),
        ..IngestOptions::default()
    };
    let corpus = ingest(paths, &opts).map_err(rt)?;
    for w in &corpus.manifest().warnings {
        eprintln!("warning: {w}");
    }
    Ok(corpus.documents().iter().map(|d| d.text.clone()).collect())
}

fn stdin_or(text: Option<String>) -> Result<String, Failure> {
    match text {
        Some(t) => Ok(t),
        None => {
            let mut s = String::new();
            io::stdin().read_to_string(&mut s).map_err(rt)?;
            Ok(s)
        }
    }
}

fn print_json(value: &serde_json::Value) {
    println!("{}", serde_json::to_string_pretty(value).expect("values serialize"));
}

fn cmd_train(a: TrainArgs) -> Outcome {
    let texts = corpus_texts(&a.corpus.input, &a.corpus.text_field, &a.corpus.extensions)?;
    let mode = match a.pretoken {
        Pretoken::Whitespace => PreTokenMode::WhitespaceLeadingSpace,
        Pretoken::None => PreTokenMode::None,
    };
    if a.min_pair_count == 0 {
        return Err(bad("--min-pair-count must be at least 1"));
    }
    let opts = TrainOptions {
        target_size: a.vocab_size,
        rules: PreTokenRules { mode, lowercase: a.lowercase },
        symbols: a.symbols.into(),
        min_pair_count: a.min_pair_count,
    };
    let vocab = train(&texts, &opts).map_err(rt)?;
    vocab.save(&a.output).map_err(rt)?;
    print_json(&json!({
        "fingerprint": vocab.fingerprint(),
        "size": vocab.len(),
        "merges": vocab.merges().len(),
        "output": a.output,
    }));
    Ok(())
}

fn cmd_import(a: ImportArgs) -> Outcome {
    let imp = import_hub_file(existing(&a.input)?).map_err(rt)?;
    for c in &imp.caveats {
        eprintln!("caveat: {c}");
    }
    imp.vocab.save(&a.output).map_err(rt)?;
    print_json(&json!({
        "fingerprint": imp.vocab.fingerprint(),
        "size": imp.vocab.len(),
        "symbols": imp.vocab.symbols(),
        "upstream_pre_tokenizer": imp.upstream_pre_tokenizer,
        "caveats": imp.caveats,
    }));
    Ok(())
}

fn cmd_encode(a: EncodeArgs) -> Outcome {
    let vocab = load_vocab(&a.vocab)?;
    let patterns = if a.guard { load_patterns(a.patterns.as_deref())? } else { Vec::new() };
    let text = stdin_or(a.text)?;
    let tokens = |ids: &[u32]| -> Vec<String> { ids.iter().map(|&i| vocab.token(i).unwrap_or("").to_owned()).collect() };
    if a.guard {
        let g = guard_encode(&vocab, &text, &patterns).map_err(rt)?;
        print_json(&json!({ "ids": g.ids, "tokens": tokens(&g.ids), "spans": g.spans }));
    } else {
        let ids = vocab.encode_ids(&text).map_err(rt)?;
        print_json(&json!({ "ids": ids, "tokens": tokens(&ids) }));
    }
    Ok(())
}

fn cmd_probe(a: ProbeArgs) -> Outcome {
    let vocab = load_vocab(&a.vocab)?;
    let alphabet: Vec<char> = a.alphabet.chars().collect();
    let mode = if a.space_prefix { ProbeMode::SpacePrefixed } else { ProbeMode::Raw };
    let grid = probe_pairs(&vocab, &alphabet, mode).map_err(rt)?;
    std::fs::create_dir_all(&a.output_dir).map_err(rt)?;
    for (name, body) in [("probe_grid.csv", grid.to_csv()), ("probe_grid.pgm", grid.to_pgm()), ("probe_grid.svg", grid.to_svg())] {
        std::fs::write(a.output_dir.join(name), body).map_err(rt)?;
    }
    print_json(&serde_json::to_value(grid.summary()).expect("summaries serialize"));
    Ok(())
}

fn cmd_entropy(a: EntropyArgs) -> Outcome {
    let vocab = a.vocab.as_deref().map(load_vocab).transpose()?;
    let text = stdin_or(a.text)?;
    let char_level = char_entropy(&text).map_err(rt)?;
    let mut out = json!({ "char_level": char_level });
    if let Some(v) = vocab {
        out["token_level"] = serde_json::to_value(token_entropy(&v, &text).map_err(rt)?).expect("reports serialize");
    }
    print_json(&out);
    Ok(())
}

fn cmd_pattern_entropy(a: PatternEntropyArgs) -> Outcome {
    let pattern = SecretPattern::parse(&a.regex, "cli").map_err(bad)?;
    let r = pattern_char_entropy(&pattern).map_err(rt)?;
    if a.json {
        print_json(&serde_json::to_value(&r).expect("reports serialize"));
    } else {
        println!("entropy_bits: {:.6}", r.entropy_bits);
        println!("max_entropy_bits: {:.6}", r.max_entropy_bits);
        println!("normalized: {:.6}", r.normalized);
    }
    Ok(())
}

fn cmd_gen(a: GenArgs) -> Outcome {
    let stdout = io::stdout();
    let mut out = io::BufWriter::new(stdout.lock());
    let secrets: Vec<String> = match a.regex {
        Some(r) => generate(&SecretPattern::parse(&r, "cli").map_err(bad)?, a.count, a.seed),
        None => generate_mixed(&load_patterns(a.patterns.as_deref())?, a.count, a.seed)
            .into_iter()
            .map(|(_, s)| s)
            .collect(),
    };
    for s in secrets {
        writeln!(out, "{s}").map_err(rt)?;
    }
    out.flush().map_err(rt)
}

fn cmd_scan(a: ScanArgs) -> Outcome {
    let patterns = load_patterns(a.patterns.as_deref())?;
    for p in &a.corpus.input {
        existing(p)?;
    }
    let opts = IngestOptions {
        text_field: a.corpus.text_field,
        extensions: a.corpus.extensions,
        ..IngestOptions::default()
    };
    let corpus = ingest(&a.corpus.input, &opts).map_err(rt)?;
    let records = scan(&corpus, &patterns);
    print_json(&json!({ "records": records, "manifest": corpus.manifest() }));
    Ok(())
}

fn read_dist(path: &Path) -> Result<DistributionTable<String>, Failure> {
    let text = std::fs::read_to_string(existing(path)?).map_err(rt)?;
    let weights: BTreeMap<String, f64> = serde_json::from_str(&text).map_err(rt)?;
    let total: f64 = weights.values().sum();
    if !(total > 0.0) || weights.values().any(|&w| !(w >= 0.0)) {
        return Err(rt(format!("{}: weights must be non-negative with a positive sum", path.display())));
    }
    DistributionTable::from_probabilities(weights.into_iter().map(|(k, w)| (k, w / total))).map_err(rt)
}

fn cmd_kl(a: KlArgs) -> Outcome {
    if !(a.epsilon > 0.0) {
        return Err(bad(format!("--epsilon must be positive, got {}", a.epsilon)));
    }
    let bits = match (&a.p_dist, &a.q_dist, &a.vocab, &a.p_lines) {
        (Some(p), Some(q), _, _) => kl_divergence(&read_dist(p)?, &read_dist(q)?, a.epsilon).map_err(rt)?,
        (None, None, Some(v), Some(pl)) => {
            let vocab = load_vocab(v)?;
            let p = token_distribution(&vocab, &read_lines(pl)?, "P").map_err(rt)?;
            let q = token_distribution(&vocab, &corpus_texts(&a.q_input, "text", &a.extensions)?, "Q").map_err(rt)?;
            kl_divergence(&p, &q, a.epsilon).map_err(rt)?
        }
        _ => return Err(bad("give either --p-dist and --q-dist, or --vocab, --p-lines and --q-input")),
    };
    print_json(&json!({ "epsilon": a.epsilon, "bits": bits }));
    Ok(())
}

fn cmd_hist(a: HistArgs) -> Outcome {
    let vocab = load_vocab(&a.vocab)?;
    let h = length_histogram(&vocab, &read_lines(&a.lines)?).map_err(rt)?;
    print!("{}", h.to_csv());
    Ok(())
}

fn cmd_rank(a: RankArgs) -> Outcome {
    let vocab = load_vocab(&a.vocab)?;
    let p = read_lines(&a.p_lines)?;
    let q = corpus_texts(&a.q_input, "text", &a.extensions)?;
    let t = rank_frequency(&vocab, &p, &q, a.top_k, a.epsilon).map_err(rt)?;
    print!("{}", t.to_csv());
    Ok(())
}

fn cmd_gibberish(a: GibberishArgs) -> Outcome {
    if let (Some(sv), Some(nv)) = (&a.secret_vocab, &a.normal_vocab) {
        let diff = vocab_difference(&load_vocab(sv)?, &load_vocab(nv)?);
        print_json(&json!({ "mode": "vocab_difference", "tokens": diff }));
        return Ok(());
    }
    let (Some(v), Some(sl)) = (&a.vocab, &a.secret_lines) else {
        return Err(bad("--vocab needs --normal and --secret-lines"));
    };
    if a.normal.is_empty() {
        return Err(bad("--normal is required with --vocab"));
    }
    let vocab = load_vocab(v)?;
    let normal = corpus_texts(&a.normal, "text", &a.extensions)?;
    let secrets = read_lines(sl)?;
    let c = identify_gibberish(&vocab, &normal, &secrets, a.top_k, a.epsilon).map_err(rt)?;
    if let Some(out) = &a.strip_set_out {
        let set = StripSet::from_candidates(&vocab, &c).map_err(rt)?;
        std::fs::write(out, set.to_json()).map_err(rt)?;
    }
    print!("{}", c.to_csv());
    Ok(())
}

fn cmd_strip(a: StripArgs) -> Outcome {
    let vocab = load_vocab(&a.vocab)?;
    let set = StripSet::load(existing(&a.strip_set)?).map_err(rt)?;
    let stripped = strip_tokens(&vocab, &set).map_err(rt)?;
    stripped.save(&a.output).map_err(rt)?;
    print_json(&json!({
        "removed": vocab.len() - stripped.len(),
        "size": stripped.len(),
        "fingerprint": stripped.fingerprint(),
    }));
    Ok(())
}

fn cmd_suggest(a: SuggestArgs) -> Outcome {
    let model = match &a.model {
        Some(p) => VocabScalingModel::load(existing(p)?).map_err(rt)?,
        None => VocabScalingModel::bundled(),
    };
    println!("{}", suggest_vocab_size(&model, a.params).map_err(bad)?);
    Ok(())
}

fn cmd_stats(a: StatsArgs) -> Outcome {
    let vocab = load_vocab(&a.vocab)?;
    let mut sets = BTreeMap::new();
    for s in &a.sets {
        let (label, path) = s.split_once('=').ok_or_else(|| bad(format!("--set expects label=FILE, got {s}")))?;
        sets.insert(label.to_owned(), read_lines(Path::new(path))?);
    }
    let stats = dataset_stats(&sets, &vocab).map_err(rt)?;
    if a.json {
        print_json(&serde_json::to_value(&stats).expect("stats serialize"));
    } else {
        print!("{}", stats.to_csv());
    }
    Ok(())
}

fn audit_config(a: AuditArgs) -> Result<AuditConfig, Failure> {
    let env_dir = std::env::var_os(OUTPUT_DIR_ENV).map(PathBuf::from);
    let mut cfg = match &a.config {
        Some(path) => {
            let text = std::fs::read_to_string(existing(path)?).map_err(bad)?;
            let raw: serde_json::Value = serde_json::from_str(&text).map_err(|e| bad(format!("config: {e}")))?;
            let mut cfg = AuditConfig::from_json(&text).map_err(bad)?;
            if raw.get("output_dir").is_none() {
                if let Some(d) = &env_dir {
                    cfg.output_dir = d.clone();
                }
            }
            cfg
        }
        None => AuditConfig {
            output_dir: env_dir.unwrap_or_else(|| PathBuf::from(DEFAULT_OUTPUT_DIR)),
            ..AuditConfig::default()
        },
    };
    if !a.corpus.is_empty() {
        cfg.corpus_paths = a.corpus;
    }
    if !a.extensions.is_empty() {
        cfg.extensions = a.extensions;
    }
    if let Some(n) = a.vocab_size {
        cfg.tokenizer = match cfg.tokenizer {
            TokenizerSource::Train { pretoken, symbols, min_pair_count, .. } => {
                TokenizerSource::Train { vocab_size: n, pretoken, symbols, min_pair_count }
            }
            _ => {
                let (_, pretoken, symbols, min_pair_count) = default_train();
                TokenizerSource::Train { vocab_size: n, pretoken, symbols, min_pair_count }
            }
        };
    }
    if let Some(p) = a.import {
        cfg.tokenizer = TokenizerSource::Import { path: p };
    }
    if let Some(p) = a.native {
        cfg.tokenizer = TokenizerSource::Native { path: p };
    }
    if a.patterns.is_some() {
        cfg.pattern_file = a.patterns;
    }
    cfg.secret_count = a.secret_count.unwrap_or(cfg.secret_count);
    cfg.seed = a.seed.unwrap_or(cfg.seed);
    cfg.output_dir = a.output_dir.unwrap_or(cfg.output_dir);
    cfg.probe_alphabet = a.probe_alphabet.unwrap_or(cfg.probe_alphabet);
    if a.space_prefix {
        cfg.probe_mode = ProbeMode::SpacePrefixed;
    }
    cfg.kl_epsilon = a.kl_epsilon.unwrap_or(cfg.kl_epsilon);
    cfg.rank_top_k = a.rank_top_k.unwrap_or(cfg.rank_top_k);
    cfg.gibberish_top_k = a.gibberish_top_k.unwrap_or(cfg.gibberish_top_k);
    cfg.gibberish_epsilon = a.gibberish_epsilon.unwrap_or(cfg.gibberish_epsilon);
    if a.no_strip {
        cfg.strip = false;
    }
    Ok(cfg)
}

fn default_train() -> (usize, PreTokenRules, SymbolMode, u64) {
    match TokenizerSource::default() {
        TokenizerSource::Train { vocab_size, pretoken, symbols, min_pair_count } => {
            (vocab_size, pretoken, symbols, min_pair_count)
        }
        _ => unreachable!("the default source trains"),
    }
}

fn cmd_audit(a: AuditArgs) -> Outcome {
    let cfg = audit_config(a)?;
    let report = run_audit(&cfg).map_err(|e| match e {
        AuditError::Validation(_) => bad(e),
        other => rt(other),
    })?;
    let secrets = report.dataset_stats.row("secrets");
    print_json(&json!({
        "output_dir": cfg.output_dir,
        "fingerprint": report.tokenizer.fingerprint,
        "kl_bits": report.kl_divergence.bits,
        "secrets_token_normalized": secrets.map(|r| r.token_level.normalized),
        "secrets_char_normalized": secrets.map(|r| r.char_level.normalized),
    }));
    Ok(())
}

fn run(cli: Cli) -> Outcome {
    match cli.command {
        Command::Train(a) => cmd_train(a),
        Command::Import(a) => cmd_import(a),
        Command::Encode(a) => cmd_encode(a),
        Command::ProbeGrid(a) => cmd_probe(a),
        Command::Entropy(a) => cmd_entropy(a),
        Command::PatternEntropy(a) => cmd_pattern_entropy(a),
        Command::GenSecrets(a) => cmd_gen(a),
        Command::Scan(a) => cmd_scan(a),
        Command::Kl(a) => cmd_kl(a),
        Command::HistLengths(a) => cmd_hist(a),
        Command::RankFreq(a) => cmd_rank(a),
        Command::IdentifyGibberish(a) => cmd_gibberish(a),
        Command::Strip(a) => cmd_strip(a),
        Command::SuggestVocab(a) => cmd_suggest(a),
        Command::Stats(a) => cmd_stats(a),
        Command::Audit(a) => cmd_audit(a),
    }
}

fn main() -> ExitCode {
    let version: &'static str =
        Box::leak(format!("{TOOL_VERSION} (vocabulary format {FORMAT_VERSION})").into_boxed_str());
    let matches = match Cli::command().version(version).try_get_matches() {
        Ok(m) => m,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let cli = match Cli::from_arg_matches(&matches) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(1);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            match &f {
                Failure::Validation(m) => eprintln!("error: {m}"),
                Failure::Runtime(m) => eprintln!("error: {m}"),
            }
            ExitCode::from(f.code())
        }
    }
}
