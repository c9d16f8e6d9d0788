//! Acceptance gate. Every criterion prints one PASS/FAIL line; the process
//! exits non-zero if any criterion fails.
//!
//! Criteria 5 to 8 need at least 1 MB of natural-language or code text. The
//! corpus is taken from `TOKAUDIT_CORPUS_DIR` when set, otherwise from the
//! Rust standard library sources, the Python standard library, or the cargo
//! registry sources, whichever is found first.

#[path = "../../core/tests/support/oracle.rs"]
mod oracle;

use std::collections::BTreeSet;
use std::fs;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use tokaudit::analysis::{kl_divergence, probe_pairs, ProbeMode, DEFAULT_PROBE_ALPHABET};
use tokaudit::audit::{compute_audit, AuditConfig, AuditOutput, TokenizerSource};
use tokaudit::entropy::{normalized_entropy, DistributionTable};
use tokaudit::mitigation::{guard_encode, strip_tokens, StripSet};
use tokaudit::scaling::{suggest_vocab_size, VocabScalingModel};
use tokaudit::secrets::bundled_patterns;
use tokaudit::tokenizer::{train, PreTokenRules, SymbolMode, TrainOptions, Vocabulary};

const MIN_CORPUS_BYTES: u64 = 1 << 20;
const TARGET_CORPUS_BYTES: u64 = 2_000_000;
const DESK_VOCAB_SIZE: usize = 4096;
const SECRET_COUNT: usize = 10_000;

type Check = Result<String, String>;

fn ensure(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn within(name: &str, got: f64, want: f64, tol: f64) -> Result<(), String> {
    ensure((got - want).abs() <= tol, format!("{name}: got {got}, want {want} ± {tol}"))
}

// ---------------------------------------------------------------------------
// Corpus discovery
// ---------------------------------------------------------------------------

fn collect(root: &Path, exts: &[&str], skip: &[&str]) -> Vec<PathBuf> {
    let mut out = Vec::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        let Ok(entries) = fs::read_dir(&dir) else { continue };
        for e in entries.flatten() {
            let p = e.path();
            let name = e.file_name().to_string_lossy().into_owned();
            if skip.iter().any(|s| name == *s) {
                continue;
            }
            if p.is_dir() {
                stack.push(p);
            } else if p.extension().and_then(|x| x.to_str()).is_some_and(|x| exts.contains(&x)) {
                out.push(p);
            }
        }
    }
    out.sort();
    out
}

fn take_until(files: Vec<PathBuf>, bytes: u64) -> Option<(Vec<PathBuf>, u64)> {
    let mut picked = Vec::new();
    let mut total = 0;
    for f in files {
        let Ok(text) = fs::read_to_string(&f) else { continue };
        if text.is_empty() {
            continue;
        }
        total += text.len() as u64;
        picked.push(f);
        if total >= bytes {
            break;
        }
    }
    (total >= MIN_CORPUS_BYTES).then_some((picked, total))
}

fn desk_corpus() -> Option<(String, Vec<PathBuf>, u64)> {
    let skip = ["test", "tests", "__pycache__", "site-packages", "dist-packages", "target"];
    let mut candidates: Vec<(String, PathBuf, Vec<&str>)> = Vec::new();
    if let Some(dir) = std::env::var_os("TOKAUDIT_CORPUS_DIR") {
        candidates.push(("TOKAUDIT_CORPUS_DIR".into(), dir.into(), vec!["txt", "jsonl", "md", "rs", "py", "c", "h", "js", "go", "java"]));
    }
    if let Ok(out) = Command::new("rustc").args(["--print", "sysroot"]).output() {
        let sysroot = String::from_utf8_lossy(&out.stdout).trim().to_owned();
        candidates.push(("rust-src".into(), Path::new(&sysroot).join("lib/rustlib/src/rust/library"), vec!["rs"]));
    }
    if let Ok(entries) = fs::read_dir("/usr/lib") {
        let mut pys: Vec<PathBuf> = entries
            .flatten()
            .map(|e| e.path())
            .filter(|p| p.file_name().is_some_and(|n| n.to_string_lossy().starts_with("python3")))
            .collect();
        pys.sort();
        for p in pys {
            candidates.push(("python stdlib".into(), p, vec!["py"]));
        }
    }
    if let Some(home) = std::env::var_os("CARGO_HOME").map(PathBuf::from).or_else(|| {
        std::env::var_os("HOME").map(|h| PathBuf::from(h).join(".cargo"))
    }) {
        candidates.push(("cargo registry".into(), home.join("registry/src"), vec!["rs"]));
    }
    for (label, root, exts) in candidates {
        if !root.is_dir() {
            continue;
        }
        if let Some((files, bytes)) = take_until(collect(&root, &exts, &skip), TARGET_CORPUS_BYTES) {
            return Some((format!("{label} ({})", root.display()), files, bytes));
        }
    }
    None
}

struct Desk {
    source: String,
    output: AuditOutput,
}

fn desk_setup() -> Result<Desk, String> {
    let (source, files, _) = desk_corpus().ok_or("no corpus of at least 1 MB found; set TOKAUDIT_CORPUS_DIR")?;
    let cfg = AuditConfig {
        corpus_paths: files,
        tokenizer: TokenizerSource::Train {
            vocab_size: DESK_VOCAB_SIZE,
            pretoken: PreTokenRules::default(),
            symbols: SymbolMode::ByteFallback,
            min_pair_count: 2,
        },
        secret_count: SECRET_COUNT,
        seed: 42,
        output_dir: std::env::temp_dir().join("tokaudit-acceptance-unused"),
        ..AuditConfig::default()
    };
    let output = compute_audit(&cfg).map_err(|e| e.to_string())?;
    Ok(Desk { source, output })
}

// ---------------------------------------------------------------------------
// Criteria
// ---------------------------------------------------------------------------

fn c1_pattern_entropy() -> Check {
    let out = Command::new(env!("CARGO_BIN_EXE_tokaudit"))
        .args(["pattern-entropy", "--regex", "ghp_[a-zA-Z0-9]{36}"])
        .output()
        .map_err(|e| e.to_string())?;
    ensure(out.status.success(), format!("exit status {}", out.status))?;
    let stdout = String::from_utf8_lossy(&out.stdout);
    let field = |name: &str| -> Result<f64, String> {
        stdout
            .lines()
            .find_map(|l| l.strip_prefix(&format!("{name}: ")))
            .and_then(|v| v.trim().parse().ok())
            .ok_or(format!("missing {name} in output"))
    };
    let (h, m, n) = (field("entropy_bits")?, field("max_entropy_bits")?, field("normalized")?);
    within("entropy", h, 5.915, 0.001)?;
    within("max", m, 5.977, 0.001)?;
    within("normalized", n, 0.9896, 0.001)?;
    Ok(format!("entropy {h:.6}, max {m:.6}, normalized {n:.6}"))
}

fn c2_normalization_identities() -> Check {
    let cases = [(8.084, 1047, 0.806), (6.086, 76, 0.974), (11.175, 47945, 0.719)];
    let mut got = Vec::new();
    for (h, k, want) in cases {
        let n = normalized_entropy(h, k).map_err(|e| e.to_string())?;
        within(&format!("({h}, {k})"), n, want, 0.001)?;
        got.push(format!("{n:.5}"));
    }
    Ok(got.join(", "))
}

fn c3_scaling_anchors() -> Check {
    let m = VocabScalingModel::bundled();
    let mut got = Vec::new();
    for (params, want) in [(3e9, 39367.0), (7e9, 62280.0), (15e9, 93987.0)] {
        let v = suggest_vocab_size(&m, params).map_err(|e| e.to_string())? as f64;
        let rel = (v - want) / want;
        ensure(rel.abs() <= 0.02, format!("{params:e}: {v} vs {want} ({:+.3}%)", rel * 100.0))?;
        got.push(format!("{v} ({:+.3}%)", rel * 100.0));
    }
    Ok(format!("b = {:.4}; {}", m.b, got.join(", ")))
}

fn random_corpus(rng: &mut ChaCha8Rng) -> Vec<String> {
    let alphabet: Vec<char> = "abcdeé \n".chars().collect();
    let docs = rng.random_range(1..6);
    let budget = 1024 / docs;
    (0..docs)
        .map(|_| {
            let mut s = String::new();
            let len = rng.random_range(1..budget / 2);
            while s.len() < len {
                s.push(alphabet[rng.random_range(0..alphabet.len())]);
            }
            s
        })
        .collect()
}

fn c4_oracle_equivalence() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut compared = 0;
    for i in 0..60 {
        let corpus = random_corpus(&mut rng);
        let bytes: usize = corpus.iter().map(String::len).sum();
        ensure(bytes <= 1024, format!("corpus {i} is {bytes} bytes"))?;
        let refs: Vec<&str> = corpus.iter().map(String::as_str).collect();
        let alphabet: BTreeSet<char> = refs.iter().flat_map(|d| d.chars()).collect();
        let target = alphabet.len() + rng.random_range(1..80);
        let min = rng.random_range(1..3);
        let (expected, _) = oracle::train_merges(&refs, target, min);
        let v = train(&refs, &TrainOptions { min_pair_count: min, ..TrainOptions::new(target) })
            .map_err(|e| e.to_string())?;
        let got: Vec<(String, String)> = v.merges().iter().map(|m| (m.left.clone(), m.right.clone())).collect();
        ensure(got == expected, format!("corpus {i}: merge lists differ ({} vs {})", got.len(), expected.len()))?;
        compared += 1;
    }

    let sample = random_corpus(&mut rng).concat() + "hello world, the quick brown fox";
    let byte_level = train([sample.as_str()], &TrainOptions { symbols: SymbolMode::ByteLevel, ..TrainOptions::new(320) })
        .map_err(|e| e.to_string())?;
    let chars = train([sample.as_str()], &TrainOptions::new(80)).map_err(|e| e.to_string())?;
    let char_alphabet: Vec<char> = sample.chars().collect::<BTreeSet<_>>().into_iter().collect();
    let mut round_trips = 0;
    for i in 0..10_000 {
        let len = rng.random_range(0..40);
        let (v, s): (&Vocabulary, String) = if i % 2 == 0 {
            let s = (0..len)
                .map(|_| loop {
                    if let Some(c) = char::from_u32(rng.random_range(0..0x2_0000)) {
                        break c;
                    }
                })
                .collect();
            (&byte_level, s)
        } else {
            (&chars, (0..len).map(|_| char_alphabet[rng.random_range(0..char_alphabet.len())]).collect())
        };
        let ids = v.encode_ids(&s).map_err(|e| e.to_string())?;
        let back = v.decode(&ids).map_err(|e| e.to_string())?;
        ensure(back == s, format!("round trip failed for {s:?}"))?;
        round_trips += 1;
    }
    Ok(format!("{compared} corpora match the oracle; {round_trips} round trips"))
}

fn c5_gibberish_bias(desk: &Desk) -> Check {
    let r = &desk.output.report;
    ensure(r.corpus.byte_total >= MIN_CORPUS_BYTES, format!("corpus is {} bytes", r.corpus.byte_total))?;
    ensure((2000..=8000).contains(&r.tokenizer.size), format!("vocabulary size {}", r.tokenizer.size))?;
    ensure(r.secrets.generated == SECRET_COUNT, "secret count")?;
    ensure(r.secrets.snippets == SECRET_COUNT, "snippet count")?;
    let s = r.dataset_stats.row("secrets").ok_or("no secrets row")?;
    let n = r.dataset_stats.row("snippets").ok_or("no snippets row")?;
    let detail = format!(
        "token H: secrets {:.3} < snippets {:.3}; char H: secrets {:.3} > snippets {:.3} [{} bytes from {}, vocab {}]",
        s.token_level.entropy_bits,
        n.token_level.entropy_bits,
        s.char_level.entropy_bits,
        n.char_level.entropy_bits,
        r.corpus.byte_total,
        desk.source,
        r.tokenizer.size
    );
    ensure(s.token_level.entropy_bits < n.token_level.entropy_bits, detail.clone())?;
    ensure(s.char_level.entropy_bits > n.char_level.entropy_bits, detail.clone())?;
    Ok(detail)
}

fn c6_length_histogram(desk: &Desk) -> Check {
    let h = &desk.output.report.length_histogram;
    let detail = format!("n=1: {}, n=3: {}, n>=3: {}", h.count(1), h.count(3), h.tail(3));
    ensure(h.count(1) > h.count(3), detail.clone())?;
    ensure(h.tail(3) > 0, detail.clone())?;
    Ok(detail)
}

fn c7_kl(desk: &Desk) -> Check {
    let table = |w: &[f64]| {
        let t: f64 = w.iter().sum();
        DistributionTable::from_probabilities(w.iter().enumerate().map(|(i, x)| (i, x / t))).map_err(|e| e.to_string())
    };
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst_identity: f64 = 0.0;
    let mut min_kl = f64::INFINITY;
    for _ in 0..1000 {
        let k = rng.random_range(1..20);
        let p: Vec<f64> = (0..k).map(|_| rng.random_range(0.0..1.0) * rng.random_range(0..2) as f64).collect();
        let q: Vec<f64> = (0..rng.random_range(1..20)).map(|_| rng.random_range(0.0..1.0)).collect();
        if p.iter().sum::<f64>() == 0.0 {
            continue;
        }
        let (pt, qt) = (table(&p)?, table(&q)?);
        worst_identity = worst_identity.max(kl_divergence(&pt, &pt, 1e-9).map_err(|e| e.to_string())?.abs());
        min_kl = min_kl.min(kl_divergence(&pt, &qt, 1e-9).map_err(|e| e.to_string())?);
    }
    ensure(worst_identity <= 1e-9, format!("KL(p,p) reached {worst_identity}"))?;
    ensure(min_kl >= -1e-9, format!("KL reached {min_kl}"))?;
    let hand1 = kl_divergence(&table(&[0.5, 0.5])?, &table(&[0.25, 0.75])?, 1e-9).map_err(|e| e.to_string())?;
    let hand2 = kl_divergence(&table(&[1.0, 0.0])?, &table(&[0.5, 0.5])?, 1e-9).map_err(|e| e.to_string())?;
    within("hand example 1", hand1, 0.2075, 1e-4)?;
    within("hand example 2", hand2, 1.0, 1e-4)?;
    let audit_kl = desk.output.report.kl_divergence.bits;
    ensure(audit_kl > 0.5, format!("audit KL(secrets||corpus) = {audit_kl}"))?;
    Ok(format!(
        "max |KL(p,p)| {worst_identity:.1e}, min KL {min_kl:.2e}, hand {hand1:.5}/{hand2:.5}, audit KL {audit_kl:.3} bits"
    ))
}

fn c8_mitigation(desk: &Desk) -> Check {
    let vocab = &desk.output.vocabulary;
    let gib = &desk.output.report.gibberish;
    ensure(gib.candidates.len() == 50, format!("{} candidates", gib.candidates.len()))?;
    let set = StripSet::from_candidates(vocab, gib).map_err(|e| e.to_string())?;
    let stripped = strip_tokens(vocab, &set).map_err(|e| e.to_string())?;
    let patterns = bundled_patterns();
    let mut shorter = Vec::new();
    let mut spans = 0;
    for secret in &desk.output.secrets {
        let before = vocab.encode_ids(secret).map_err(|e| e.to_string())?;
        let after = stripped.encode_ids(secret).map_err(|e| e.to_string())?;
        if let Some(id) = after.iter().find(|id| set.ids.contains(id)) {
            return Err(format!("(a) stripped id {id} emitted for {secret}"));
        }
        if after.len() < before.len() {
            let show = |v: &Vocabulary, ids: &[u32]| {
                ids.iter().map(|&i| v.token(i).unwrap_or("?").to_owned()).collect::<Vec<_>>().join(" ")
            };
            shorter.push(format!(
                "{secret}: {} -> {} tokens [{}] -> [{}]",
                before.len(),
                after.len(),
                show(vocab, &before),
                show(&stripped, &after)
            ));
        }

        let text = format!("const key = \"{secret}\"; // rotate\n");
        let g = guard_encode(vocab, &text, &patterns).map_err(|e| e.to_string())?;
        ensure(!g.spans.is_empty(), format!("(c) no span found in {text:?}"))?;
        let mut cursor_tok = 0;
        let mut cursor_byte = 0;
        for span in &g.spans {
            let outside = vocab.encode_ids(&text[cursor_byte..span.start]).map_err(|e| e.to_string())?;
            ensure(g.ids[cursor_tok..span.token_start] == outside[..], format!("(c) tokens outside span differ in {text:?}"))?;
            let inside = &g.ids[span.token_start..span.token_start + span.token_count];
            let span_text = &text[span.start..span.start + span.length];
            ensure(inside.len() == span_text.chars().count(), format!("(c) {} tokens for {span_text}", inside.len()))?;
            for (&id, c) in inside.iter().zip(span_text.chars()) {
                ensure(vocab.decode(&[id]).map_err(|e| e.to_string())? == c.to_string(), format!("(c) token {id} is not {c:?}"))?;
            }
            cursor_tok = span.token_start + span.token_count;
            cursor_byte = span.start + span.length;
            spans += 1;
        }
        let tail = vocab.encode_ids(&text[cursor_byte..]).map_err(|e| e.to_string())?;
        ensure(g.ids[cursor_tok..] == tail[..], format!("(c) tail tokens differ in {text:?}"))?;
    }
    if !shorter.is_empty() {
        return Err(format!(
            "(b) {} of {} secrets got fewer tokens after stripping, e.g. {}",
            shorter.len(),
            desk.output.secrets.len(),
            shorter[0]
        ));
    }
    Ok(format!(
        "{} ids stripped ({} tokens left); {} secrets checked; {} guarded spans",
        set.ids.len(),
        stripped.len(),
        desk.output.secrets.len(),
        spans
    ))
}

fn c9_probe_grid(desk: &Desk) -> Check {
    let vocab = &desk.output.vocabulary;
    let merges: Vec<(String, String)> = vocab.merges().iter().map(|m| (m.left.clone(), m.right.clone())).collect();
    let alphabet: Vec<char> = DEFAULT_PROBE_ALPHABET.chars().collect();
    ensure(alphabet.len() == 76, "alphabet size")?;
    let grid = probe_pairs(vocab, &alphabet, ProbeMode::Raw).map_err(|e| e.to_string())?;
    let mut ones = 0;
    for (i, &a) in alphabet.iter().enumerate() {
        for (j, &b) in alphabet.iter().enumerate() {
            let pair = format!("{a}{b}");
            let want = oracle::segment_text(&pair, &merges).len() as u32;
            ensure(grid.cell(i, j) == want, format!("cell {pair}: {} vs {want}", grid.cell(i, j)))?;
            ones += usize::from(want == 1);
        }
    }
    let toy = Vocabulary::from_merges(&["a", "b", "c"], &[]).map_err(|e| e.to_string())?;
    let g0 = probe_pairs(&toy, &['a', 'b', 'c'], ProbeMode::Raw).map_err(|e| e.to_string())?;
    ensure(g0.matrix == vec![vec![2; 3]; 3], "zero-merge toy grid")?;
    let toy = Vocabulary::from_merges(&["a", "b", "c"], &[("a", "b")]).map_err(|e| e.to_string())?;
    let g1 = probe_pairs(&toy, &['a', 'b', 'c'], ProbeMode::Raw).map_err(|e| e.to_string())?;
    ensure(g1.matrix == vec![vec![2, 1, 2], vec![2, 2, 2], vec![2, 2, 2]], "single-merge toy grid")?;
    Ok(format!("5776 cells match the oracle ({ones} single-token); toy grids exact"))
}

fn run_fixture_audit(dir: &Path) -> Result<Vec<u8>, String> {
    let fixture = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/corpus.jsonl");
    fs::copy(&fixture, dir.join("corpus.jsonl")).map_err(|e| e.to_string())?;
    let out = Command::new(env!("CARGO_BIN_EXE_tokaudit"))
        .current_dir(dir)
        .env_remove("TOKAUDIT_OUTPUT_DIR")
        .args(["audit", "--corpus", "corpus.jsonl", "--vocab-size", "1000", "--secret-count", "2000", "--seed", "42"])
        .args(["--output-dir", "out"])
        .output()
        .map_err(|e| e.to_string())?;
    ensure(out.status.success(), format!("audit failed: {}", String::from_utf8_lossy(&out.stderr)))?;
    fs::read(dir.join("out/report.json")).map_err(|e| e.to_string())
}

fn c10_determinism() -> Check {
    let golden = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden/audit_report.json");
    let a = tempfile::tempdir().map_err(|e| e.to_string())?;
    let b = tempfile::tempdir().map_err(|e| e.to_string())?;
    let first = run_fixture_audit(a.path())?;
    let second = run_fixture_audit(b.path())?;
    ensure(first == second, "two runs produced different reports")?;
    if std::env::var_os("TOKAUDIT_BLESS").is_some() || !golden.exists() {
        fs::create_dir_all(golden.parent().unwrap()).map_err(|e| e.to_string())?;
        fs::write(&golden, &first).map_err(|e| e.to_string())?;
        return Ok(format!("2 runs byte-identical; golden written ({} bytes)", first.len()));
    }
    let expected = fs::read(&golden).map_err(|e| format!("{}: {e}", golden.display()))?;
    ensure(first == expected, "report differs from the golden file")?;
    Ok(format!("2 runs byte-identical to golden ({} bytes)", first.len()))
}

// ---------------------------------------------------------------------------

fn main() {
    let mut failures = 0;
    let mut report = |id: u32, name: &str, f: &mut dyn FnMut() -> Check| {
        let start = Instant::now();
        let result = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
            Err(p.downcast_ref::<String>().cloned().or(p.downcast_ref::<&str>().map(|s| s.to_string())).unwrap_or_default())
        });
        let secs = start.elapsed().as_secs_f64();
        match result {
            Ok(detail) => println!("PASS  criterion {id:>2}  {name}: {detail} ({secs:.1}s)"),
            Err(detail) => {
                failures += 1;
                println!("FAIL  criterion {id:>2}  {name}: {detail} ({secs:.1}s)");
            }
        }
    };

    report(1, "pattern-entropy on ghp_[a-zA-Z0-9]{36}", &mut c1_pattern_entropy);
    report(2, "normalized entropy identities", &mut c2_normalization_identities);
    report(3, "vocabulary scaling anchors", &mut c3_scaling_anchors);
    report(4, "BPE oracle equivalence and round trip", &mut c4_oracle_equivalence);

    let start = Instant::now();
    let desk = desk_setup();
    println!("      desk-scale audit built in {:.1}s", start.elapsed().as_secs_f64());
    let with_desk = |f: fn(&Desk) -> Check| {
        let desk = &desk;
        move || match desk {
            Ok(d) => f(d),
            Err(e) => Err(format!("desk-scale setup failed: {e}")),
        }
    };
    report(5, "gibberish bias (token H lower, char H higher)", &mut with_desk(c5_gibberish_bias));
    report(6, "token length histogram shape", &mut with_desk(c6_length_histogram));
    report(7, "KL divergence properties", &mut with_desk(c7_kl));
    report(8, "strip and guard soundness", &mut with_desk(c8_mitigation));
    report(9, "probe grid consistency", &mut with_desk(c9_probe_grid));
    report(10, "end-to-end audit determinism", &mut c10_determinism);

    if failures > 0 {
        println!("{failures} criterion(s) failed");
        std::process::exit(1);
    }
    println!("all criteria passed");
}
