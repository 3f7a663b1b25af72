//! JSONL corpus ingestion, the blocklisted / retain / in-domain split, and
//! hint / ground-truth example construction.
//!
//! One JSON object per line:
//!
//! ```json
//! {"id": "n1", "domain": "news", "text": "...",
//!  "questions": [{"question": "...", "answer": "..."}],
//!  "reference_summary": "...", "rank_score": 12.5}
//! ```
//!
//! Only `id`, `domain` and `text` are required. Unknown fields are kept in
//! [`Document::metadata`] and written back unchanged.

use std::collections::{BTreeMap, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::metrics::{rouge_recall, RougeVariant};

pub const DEFAULT_HINT_LEN: usize = 100;
pub const DEFAULT_SPAN_LEN: usize = 200;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error("duplicate document id {0:?}")]
    DuplicateId(String),
    #[error("insufficient documents: need {required}, have {available}")]
    Insufficient { required: usize, available: usize },
    #[error("document {doc_id:?} too short: {tokens} tokens, need at least {required}")]
    TooShort { doc_id: String, tokens: usize, required: usize },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Domain {
    News,
    Books,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QaPair {
    pub question: String,
    pub answer: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Document {
    pub id: String,
    pub domain: Domain,
    pub text: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub questions: Vec<QaPair>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference_summary: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rank_score: Option<f64>,
    #[serde(flatten)]
    pub metadata: BTreeMap<String, serde_json::Value>,
}

impl Document {
    pub fn new(id: impl Into<String>, domain: Domain, text: impl Into<String>) -> Self {
        Self {
            id: id.into(),
            domain,
            text: text.into(),
            questions: Vec::new(),
            reference_summary: None,
            rank_score: None,
            metadata: BTreeMap::new(),
        }
    }

    pub fn tokens(&self) -> Vec<&str> {
        self.text.split_whitespace().collect()
    }

    fn validate(&self) -> Result<(), String> {
        if self.id.is_empty() {
            return Err("empty id".into());
        }
        if self.text.trim().is_empty() {
            return Err(format!("document {:?} has empty text", self.id));
        }
        if let Some(q) = self
            .questions
            .iter()
            .find(|q| q.question.trim().is_empty() || q.answer.trim().is_empty())
        {
            return Err(format!("document {:?} has an empty question or answer: {q:?}", self.id));
        }
        Ok(())
    }
}

/// Parses JSONL documents from any reader, in order. Blank lines are skipped.
pub fn parse_corpus<R: Read>(reader: R) -> Result<Vec<Document>, CorpusError> {
    let mut docs = Vec::new();
    let mut seen = HashSet::new();
    for (i, line) in BufReader::new(reader).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let doc: Document = serde_json::from_str(&line)
            .map_err(|e| CorpusError::Malformed { line: i + 1, message: e.to_string() })?;
        doc.validate().map_err(|message| CorpusError::Malformed { line: i + 1, message })?;
        if !seen.insert(doc.id.clone()) {
            return Err(CorpusError::DuplicateId(doc.id));
        }
        docs.push(doc);
    }
    Ok(docs)
}

pub fn load_corpus(path: &Path) -> Result<Vec<Document>, CorpusError> {
    parse_corpus(File::open(path)?)
}

pub fn write_corpus(path: &Path, docs: &[Document]) -> Result<(), CorpusError> {
    let mut w = BufWriter::new(File::create(path)?);
    for d in docs {
        let line = serde_json::to_string(d).expect("documents always serialize");
        writeln!(w, "{line}")?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct CorpusSplit {
    pub blocklisted: Vec<Document>,
    pub in_domain: Vec<Document>,
    pub retain: Vec<Document>,
}

/// Orders documents for splitting: ascending `rank_score` where present,
/// documents without a score after all scored ones, file order otherwise.
pub fn rank_order(docs: &[Document]) -> Vec<Document> {
    let mut v = docs.to_vec();
    v.sort_by(|a, b| match (a.rank_score, b.rank_score) {
        (Some(x), Some(y)) => x.total_cmp(&y),
        (Some(_), None) => std::cmp::Ordering::Less,
        (None, Some(_)) => std::cmp::Ordering::Greater,
        (None, None) => std::cmp::Ordering::Equal,
    });
    v
}

/// First `n_block` ranked documents are blocklisted, the next `n_retain` form
/// the retain set, the remainder is in-domain.
pub fn split_corpus(docs: &[Document], n_block: usize, n_retain: usize) -> Result<CorpusSplit, CorpusError> {
    let required = n_block + n_retain;
    if required > docs.len() {
        return Err(CorpusError::Insufficient { required, available: docs.len() });
    }
    let mut ranked = rank_order(docs);
    let in_domain = ranked.split_off(required);
    let retain = ranked.split_off(n_block);
    Ok(CorpusSplit { blocklisted: ranked, in_domain, retain })
}

/// Drops documents too short for an example, and documents whose hint
/// already covers more than `max_rouge_l` of the ground truth (word ROUGE-L
/// recall of truth by hint).
pub fn filter_similar(docs: &[Document], hint_len: usize, span_len: usize, max_rouge_l: f64) -> Vec<Document> {
    docs.iter()
        .filter(|d| match make_example(d, hint_len, span_len) {
            Ok(ex) => rouge_recall::<f64>(&ex.hint_text(), &ex.truth_text(), RougeVariant::RougeL) <= max_rouge_l,
            Err(_) => false,
        })
        .cloned()
        .collect()
}

/// A hint / ground-truth pair over whitespace tokens.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Example {
    pub doc_id: String,
    pub hint: Vec<String>,
    pub ground_truth: Vec<String>,
    pub full_text: String,
}

impl Example {
    pub fn hint_text(&self) -> String {
        self.hint.join(" ")
    }

    pub fn truth_text(&self) -> String {
        self.ground_truth.join(" ")
    }
}

pub fn make_example(doc: &Document, hint_len: usize, span_len: usize) -> Result<Example, CorpusError> {
    let toks = doc.tokens();
    let required = hint_len.max(1) + 1;
    if hint_len == 0 || span_len == 0 || toks.len() < required {
        return Err(CorpusError::TooShort { doc_id: doc.id.clone(), tokens: toks.len(), required });
    }
    let end = (hint_len + span_len).min(toks.len());
    Ok(Example {
        doc_id: doc.id.clone(),
        hint: toks[..hint_len].iter().map(|s| s.to_string()).collect(),
        ground_truth: toks[hint_len..end].iter().map(|s| s.to_string()).collect(),
        full_text: doc.text.clone(),
    })
}
