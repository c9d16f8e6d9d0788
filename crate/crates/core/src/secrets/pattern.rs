//! Fixed-length secret formats written in a small regex subset: literal
//! runs, bracket classes with ranges, and exact `{n}` repetition.

use std::collections::BTreeSet;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::SecretError;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Segment {
    Literal(String),
    /// `repeat` independent draws from `charset` (sorted, deduplicated).
    Class { charset: Vec<char>, repeat: u32 },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SecretPattern {
    name: String,
    source_regex: String,
    segments: Vec<Segment>,
}

/// Entry of a pattern file: `[{"name": .., "regex": ..}, ..]`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PatternSpec {
    pub name: String,
    pub regex: String,
}

const BUNDLED: &str = include_str!("../../patterns/default.json");

fn unsupported(construct: impl Into<String>, position: usize) -> SecretError {
    SecretError::UnsupportedConstruct { construct: construct.into(), position }
}

struct Parser<'a> {
    chars: Vec<(usize, char)>,
    pos: usize,
    src: &'a str,
}

impl Parser<'_> {
    fn peek(&self) -> Option<char> {
        self.chars.get(self.pos).map(|&(_, c)| c)
    }

    fn offset(&self) -> usize {
        self.chars.get(self.pos).map_or(self.src.len(), |&(o, _)| o)
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek()?;
        self.pos += 1;
        Some(c)
    }

    fn escaped(&mut self) -> Result<char, SecretError> {
        let at = self.offset();
        match self.bump() {
            Some(c) if c.is_ascii_punctuation() => Ok(c),
            Some(c) => Err(unsupported(format!("escape \\{c}"), at)),
            None => Err(unsupported("trailing backslash", at)),
        }
    }

    fn quantifier(&mut self) -> Result<u32, SecretError> {
        let at = self.offset();
        match self.peek() {
            Some('{') => {
                self.bump();
                let mut body = String::new();
                loop {
                    match self.bump() {
                        Some('}') => break,
                        Some(c) => body.push(c),
                        None => return Err(unsupported("unterminated {", at)),
                    }
                }
                if body.contains(',') {
                    return Err(unsupported(format!("bounded repetition {{{body}}}"), at));
                }
                match body.parse::<u32>() {
                    Ok(n) if n > 0 => Ok(n),
                    _ => Err(unsupported(format!("repetition {{{body}}}"), at)),
                }
            }
            Some(q @ ('*' | '+' | '?')) => Err(unsupported(format!("quantifier {q}"), at)),
            _ => Ok(1),
        }
    }

    fn class(&mut self) -> Result<Vec<char>, SecretError> {
        let open = self.offset();
        self.bump();
        if self.peek() == Some('^') {
            return Err(unsupported("negated class [^...]", open));
        }
        let mut set = BTreeSet::new();
        let mut first = true;
        loop {
            let at = self.offset();
            let c = match self.bump() {
                None => return Err(unsupported("unterminated [", open)),
                Some(']') if !first => break,
                Some('\\') => self.escaped()?,
                Some('[') => return Err(unsupported("nested class", at)),
                Some(c) => c,
            };
            first = false;
            // `a-z` is a range unless the '-' is the last thing in the class.
            let is_range = self.peek() == Some('-')
                && self.chars.get(self.pos + 1).is_some_and(|&(_, n)| n != ']');
            if is_range {
                self.bump();
                let hi = match self.bump() {
                    Some('\\') => self.escaped()?,
                    Some(h) => h,
                    None => return Err(unsupported("unterminated [", open)),
                };
                if hi < c {
                    return Err(SecretError::InvalidRange { from: c, to: hi });
                }
                set.extend(c..=hi);
            } else {
                set.insert(c);
            }
        }
        if set.is_empty() {
            return Err(SecretError::EmptyClass);
        }
        Ok(set.into_iter().collect())
    }
}

impl SecretPattern {
    pub fn parse(regex: &str, name: &str) -> Result<Self, SecretError> {
        let mut p = Parser { chars: regex.char_indices().collect(), pos: 0, src: regex };
        let mut segments: Vec<Segment> = Vec::new();
        let push_literal = |segments: &mut Vec<Segment>, s: String| match segments.last_mut() {
            Some(Segment::Literal(prev)) => prev.push_str(&s),
            _ => segments.push(Segment::Literal(s)),
        };
        while let Some(c) = p.peek() {
            let at = p.offset();
            match c {
                '[' => {
                    let charset = p.class()?;
                    let repeat = p.quantifier()?;
                    segments.push(Segment::Class { charset, repeat });
                }
                '\\' => {
                    p.bump();
                    let lit = p.escaped()?;
                    let n = p.quantifier()?;
                    push_literal(&mut segments, lit.to_string().repeat(n as usize));
                }
                '|' => return Err(unsupported("alternation |", at)),
                '(' | ')' => return Err(unsupported("group", at)),
                '^' | '$' => return Err(unsupported(format!("anchor {c}"), at)),
                '.' => return Err(unsupported("wildcard .", at)),
                '*' | '+' | '?' => return Err(unsupported(format!("quantifier {c}"), at)),
                '{' => return Err(unsupported("repetition without an atom", at)),
                ']' | '}' => return Err(unsupported(format!("unbalanced {c}"), at)),
                _ => {
                    p.bump();
                    let n = p.quantifier()?;
                    push_literal(&mut segments, c.to_string().repeat(n as usize));
                }
            }
        }
        if segments.is_empty() {
            return Err(SecretError::EmptyPattern);
        }
        Ok(Self { name: name.to_owned(), source_regex: regex.to_owned(), segments })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn source_regex(&self) -> &str {
        &self.source_regex
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    /// Length in characters of every generated string.
    pub fn len(&self) -> usize {
        self.segments
            .iter()
            .map(|s| match s {
                Segment::Literal(t) => t.chars().count(),
                Segment::Class { repeat, .. } => *repeat as usize,
            })
            .sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Canonical regex for the language this pattern generates, suitable for
    /// the `regex` crate.
    pub fn to_regex(&self) -> String {
        let mut out = String::new();
        for s in &self.segments {
            match s {
                Segment::Literal(t) => out.push_str(&regex::escape(t)),
                Segment::Class { charset, repeat } => {
                    out.push('[');
                    for &c in charset {
                        if matches!(c, '\\' | ']' | '[' | '^' | '-' | '&' | '~') {
                            out.push('\\');
                        }
                        out.push(c);
                    }
                    out.push(']');
                    if *repeat != 1 {
                        out.push_str(&format!("{{{repeat}}}"));
                    }
                }
            }
        }
        out
    }

    pub fn compile(&self) -> regex::Regex {
        regex::Regex::new(&self.to_regex()).expect("rendered patterns are valid regexes")
    }
}

pub fn parse_pattern_file(json: &str) -> Result<Vec<SecretPattern>, SecretError> {
    let specs: Vec<PatternSpec> = serde_json::from_str(json)?;
    specs.iter().map(|s| SecretPattern::parse(&s.regex, &s.name)).collect()
}

pub fn load_pattern_file(path: impl AsRef<Path>) -> Result<Vec<SecretPattern>, SecretError> {
    let path = path.as_ref();
    let json = fs::read_to_string(path).map_err(|source| SecretError::Io { path: path.to_owned(), source })?;
    parse_pattern_file(&json)
}

/// The three cloud-credential formats (AWS, Google, Tencent) plus GitHub
/// personal access tokens.
pub fn bundled_patterns() -> Vec<SecretPattern> {
    parse_pattern_file(BUNDLED).expect("bundled pattern file is valid")
}

pub fn bundled_pattern_json() -> &'static str {
    BUNDLED
}
