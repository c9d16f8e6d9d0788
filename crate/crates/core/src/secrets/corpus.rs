use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::SecretError;

pub const DEFAULT_MAX_DOCUMENT_BYTES: usize = 1 << 20;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Document {
    pub id: String,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileEntry {
    pub path: String,
    pub bytes: u64,
    pub documents: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusManifest {
    pub paths: Vec<String>,
    pub files: Vec<FileEntry>,
    pub document_count: usize,
    pub byte_total: u64,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IngestOptions {
    /// JSON field holding the document text in `.jsonl` records.
    pub text_field: String,
    /// Longer documents are truncated at a char boundary, with a warning.
    pub max_document_bytes: usize,
    /// Extensions picked up when recursing into directories.
    pub extensions: Vec<String>,
}

impl Default for IngestOptions {
    fn default() -> Self {
        Self {
            text_field: "text".into(),
            max_document_bytes: DEFAULT_MAX_DOCUMENT_BYTES,
            extensions: vec!["txt".into(), "jsonl".into()],
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Corpus {
    documents: Vec<Document>,
    manifest: CorpusManifest,
}

impl Corpus {
    /// In-memory corpus with ids `doc-0`, `doc-1`, ...
    pub fn from_texts<I, S>(texts: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let documents: Vec<Document> = texts
            .into_iter()
            .enumerate()
            .map(|(i, t)| Document { id: format!("doc-{i}"), text: t.into() })
            .collect();
        let manifest = CorpusManifest {
            document_count: documents.len(),
            byte_total: documents.iter().map(|d| d.text.len() as u64).sum(),
            ..Default::default()
        };
        Self { documents, manifest }
    }

    pub fn documents(&self) -> &[Document] {
        &self.documents
    }

    pub fn texts(&self) -> impl Iterator<Item = &str> {
        self.documents.iter().map(|d| d.text.as_str())
    }

    pub fn len(&self) -> usize {
        self.documents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.documents.is_empty()
    }

    pub fn manifest(&self) -> &CorpusManifest {
        &self.manifest
    }
}

fn truncate(text: &mut String, cap: usize) -> bool {
    if text.len() <= cap {
        return false;
    }
    let mut end = cap;
    while !text.is_char_boundary(end) {
        end -= 1;
    }
    text.truncate(end);
    true
}

struct FileResult {
    docs: Vec<Document>,
    bytes: u64,
    warnings: Vec<String>,
}

fn read_file(path: &Path, opts: &IngestOptions) -> FileResult {
    let name = path.display().to_string();
    let mut warnings = Vec::new();
    let raw = match fs::read(path) {
        Ok(b) => b,
        Err(e) => {
            return FileResult { docs: vec![], bytes: 0, warnings: vec![format!("{name}: skipped, {e}")] };
        }
    };
    let bytes = raw.len() as u64;
    let Ok(content) = String::from_utf8(raw) else {
        return FileResult { docs: vec![], bytes, warnings: vec![format!("{name}: skipped, not valid UTF-8")] };
    };
    let is_jsonl = path.extension().is_some_and(|e| e == "jsonl");
    let mut docs = Vec::new();
    if is_jsonl {
        for (i, line) in content.lines().enumerate() {
            let lineno = i + 1;
            if line.trim().is_empty() {
                continue;
            }
            let value: serde_json::Value = match serde_json::from_str(line) {
                Ok(v) => v,
                Err(e) => {
                    warnings.push(format!("{name}:{lineno}: skipped, {e}"));
                    continue;
                }
            };
            match value.get(&opts.text_field).and_then(|v| v.as_str()) {
                Some(t) => docs.push(Document { id: format!("{name}#L{lineno}"), text: t.to_owned() }),
                None => warnings.push(format!("{name}:{lineno}: skipped, no string field `{}`", opts.text_field)),
            }
        }
    } else {
        docs.push(Document { id: name.clone(), text: content });
    }
    for d in &mut docs {
        if truncate(&mut d.text, opts.max_document_bytes) {
            warnings.push(format!("{}: truncated to {} bytes", d.id, d.text.len()));
        }
    }
    FileResult { docs, bytes, warnings }
}

fn collect_files(root: &Path, opts: &IngestOptions, out: &mut BTreeSet<PathBuf>, warnings: &mut Vec<String>) {
    for entry in walkdir::WalkDir::new(root).follow_links(true) {
        match entry {
            Ok(e) if e.file_type().is_file() => {
                let wanted = e
                    .path()
                    .extension()
                    .and_then(|x| x.to_str())
                    .is_some_and(|x| opts.extensions.iter().any(|w| w == x));
                if wanted {
                    out.insert(e.into_path());
                }
            }
            Ok(_) => {}
            Err(e) => warnings.push(format!("{}: skipped, {e}", root.display())),
        }
    }
}

/// Reads `.txt` files whole and `.jsonl` files line by line. Directories are
/// walked recursively. Documents come out in sorted path order.
pub fn ingest<P: AsRef<Path>>(paths: &[P], opts: &IngestOptions) -> Result<Corpus, SecretError> {
    let mut files = BTreeSet::new();
    let mut warnings = Vec::new();
    for p in paths {
        let p = p.as_ref();
        if !p.exists() {
            return Err(SecretError::MissingPath(p.to_owned()));
        }
        if p.is_dir() {
            collect_files(p, opts, &mut files, &mut warnings);
        } else {
            files.insert(p.to_owned());
        }
    }
    let files: Vec<PathBuf> = files.into_iter().collect();
    let results: Vec<FileResult> = files.par_iter().map(|f| read_file(f, opts)).collect();

    let mut manifest = CorpusManifest {
        paths: paths.iter().map(|p| p.as_ref().display().to_string()).collect(),
        warnings,
        ..Default::default()
    };
    let mut documents = Vec::new();
    for (path, r) in files.iter().zip(results) {
        manifest.warnings.extend(r.warnings);
        manifest.byte_total += r.bytes;
        manifest.files.push(FileEntry { path: path.display().to_string(), bytes: r.bytes, documents: r.docs.len() });
        documents.extend(r.docs);
    }
    if documents.is_empty() {
        return Err(SecretError::NoDocuments);
    }
    manifest.document_count = documents.len();
    Ok(Corpus { documents, manifest })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn truncates_on_char_boundary() {
        let mut s = "aé".to_string();
        assert!(truncate(&mut s, 2));
        assert_eq!(s, "a");
        let mut t = "abc".to_string();
        assert!(!truncate(&mut t, 3));
    }

    #[test]
    fn missing_path_errors() {
        let err = ingest(&["/definitely/not/here"], &IngestOptions::default()).unwrap_err();
        assert!(matches!(err, SecretError::MissingPath(_)));
    }
}
