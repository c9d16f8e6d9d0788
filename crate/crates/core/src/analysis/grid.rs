use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::AnalysisError;
use crate::tokenizer::Vocabulary;

/// Letters, digits and fourteen punctuation marks common in credentials.
pub const DEFAULT_PROBE_ALPHABET: &str =
    "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789-_+/=.:@#!$%&?";

/// How each pair is presented to the tokenizer.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProbeMode {
    /// The bare two-character string.
    #[default]
    Raw,
    /// A single space followed by the pair, as the pair would appear after
    /// a word boundary. The cell counts every token, including one holding
    /// the space.
    SpacePrefixed,
}

impl ProbeMode {
    pub fn render(self, a: char, b: char) -> String {
        match self {
            ProbeMode::Raw => format!("{a}{b}"),
            ProbeMode::SpacePrefixed => format!(" {a}{b}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridProbe {
    pub alphabet: Vec<char>,
    pub mode: ProbeMode,
    /// `matrix[i][j]` is the token count of `alphabet[i]` followed by `alphabet[j]`.
    pub matrix: Vec<Vec<u32>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSummary {
    pub alphabet: String,
    pub mode: ProbeMode,
    pub cells: usize,
    pub single_token_cells: usize,
    pub single_token_fraction: f64,
    pub max_tokens: u32,
}

/// Token count of every ordered pair over `alphabet`.
///
/// Fails if a single alphabet character cannot be encoded.
pub fn probe_pairs(vocab: &Vocabulary, alphabet: &[char], mode: ProbeMode) -> Result<GridProbe, AnalysisError> {
    if alphabet.is_empty() {
        return Err(AnalysisError::EmptyAlphabet);
    }
    for &c in alphabet {
        vocab.encode_ids(&c.to_string())?;
    }
    let matrix = alphabet
        .par_iter()
        .map(|&a| {
            alphabet
                .iter()
                .map(|&b| Ok(vocab.encode_ids(&mode.render(a, b))?.len() as u32))
                .collect::<Result<Vec<_>, AnalysisError>>()
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(GridProbe { alphabet: alphabet.to_vec(), mode, matrix })
}

impl GridProbe {
    pub fn cell(&self, i: usize, j: usize) -> u32 {
        self.matrix[i][j]
    }

    pub fn summary(&self) -> GridSummary {
        let cells = self.alphabet.len() * self.alphabet.len();
        let single = self.matrix.iter().flatten().filter(|&&c| c == 1).count();
        GridSummary {
            alphabet: self.alphabet.iter().collect(),
            mode: self.mode,
            cells,
            single_token_cells: single,
            single_token_fraction: single as f64 / cells as f64,
            max_tokens: self.matrix.iter().flatten().copied().max().unwrap_or(0),
        }
    }

    /// `char1,char2,token_count`, row-major.
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["char1", "char2", "token_count"]).expect("in-memory write");
        for (i, &a) in self.alphabet.iter().enumerate() {
            for (j, &b) in self.alphabet.iter().enumerate() {
                w.write_record([a.to_string(), b.to_string(), self.matrix[i][j].to_string()])
                    .expect("in-memory write");
            }
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv output is utf-8")
    }

    /// Plain PGM (P2). Pixel value is the token count; x follows the first
    /// character, y the second.
    pub fn to_pgm(&self) -> String {
        let n = self.alphabet.len();
        let max = self.matrix.iter().flatten().copied().max().unwrap_or(1).max(1);
        let mut out = format!("P2\n{n} {n}\n{max}\n");
        for j in 0..n {
            let row: Vec<String> = (0..n).map(|i| self.matrix[i][j].to_string()).collect();
            out.push_str(&row.join(" "));
            out.push('\n');
        }
        out
    }

    /// Heatmap with one square per pair: yellow for one token, brown for
    /// two, dark red beyond.
    pub fn to_svg(&self) -> String {
        const CELL: usize = 8;
        const MARGIN: usize = 12;
        let n = self.alphabet.len();
        let size = MARGIN + n * CELL;
        let mut out = String::new();
        let _ = writeln!(
            out,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" viewBox="0 0 {size} {size}" font-family="monospace" font-size="6">"#
        );
        for (k, c) in self.alphabet.iter().enumerate() {
            let label = xml_escape(*c);
            let pos = MARGIN + k * CELL + 2;
            let _ = writeln!(out, r#"<text x="{pos}" y="8">{label}</text>"#);
            let _ = writeln!(out, r#"<text x="2" y="{}">{label}</text>"#, pos + 5);
        }
        for i in 0..n {
            for j in 0..n {
                let fill = match self.matrix[i][j] {
                    1 => "#f5d142",
                    2 => "#7b4a1e",
                    _ => "#5a0f0f",
                };
                let _ = writeln!(
                    out,
                    r#"<rect x="{}" y="{}" width="{CELL}" height="{CELL}" fill="{fill}"/>"#,
                    MARGIN + i * CELL,
                    MARGIN + j * CELL
                );
            }
        }
        out.push_str("</svg>\n");
        out
    }
}

fn xml_escape(c: char) -> String {
    match c {
        '&' => "&amp;".into(),
        '<' => "&lt;".into(),
        '>' => "&gt;".into(),
        '"' => "&quot;".into(),
        c => c.to_string(),
    }
}
