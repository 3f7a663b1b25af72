//! Text embedders and an exact cosine-distance vector store.
//!
//! The built-in [`HashedTrigramEmbedder`] is a deterministic stand-in for a
//! sentence encoder. Real encoders plug in through [`ProcessEmbedder`], which
//! speaks line-delimited JSON with a child process:
//!
//! ```text
//! -> {"text": "..."}\n
//! <- {"vector": [0.1, -0.2, ...]}\n
//! ```
//!
//! Stores persist as JSONL, one `{"doc_id": ..., "vector": [...]}` per line.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::process::{Child, ChildStdin, ChildStdout, Command, Stdio};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::Document;
use crate::hashing::xxh64;
use crate::scalar::Real;

pub const DEFAULT_EMBED_DIM: usize = 384;
/// Version tag of the external embedder protocol.
pub const EMBEDDER_PROTOCOL_VERSION: u32 = 1;
/// Separator between a document id and its chunk index in store entry ids.
pub const CHUNK_SEPARATOR: char = '#';

#[derive(Debug, Error)]
pub enum RetrievalError {
    #[error("dimension mismatch: store has {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("duplicate store entry id {0:?}")]
    DuplicateId(String),
    #[error("external embedder: {0}")]
    External(String),
    #[error("store line {line}: {source}")]
    Parse { line: usize, source: serde_json::Error },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Maps text to a fixed-dimension real vector.
pub trait Embedder<T: Real>: Send + Sync {
    fn dim(&self) -> usize;
    fn embed(&self, text: &str) -> Result<Vec<T>, RetrievalError>;
}

/// Cosine similarity; 0 when either vector is all zeros.
pub fn cosine<T: Real>(a: &[T], b: &[T]) -> T {
    debug_assert_eq!(a.len(), b.len());
    let (mut dot, mut na, mut nb) = (T::zero(), T::zero(), T::zero());
    for (&x, &y) in a.iter().zip(b) {
        dot = dot + x * y;
        na = na + x * x;
        nb = nb + y * y;
    }
    if na == T::zero() || nb == T::zero() {
        return T::zero();
    }
    dot / (na.sqrt() * nb.sqrt())
}

/// Character 3-grams hashed into `dim` buckets, term-frequency weighted and
/// L2-normalized.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HashedTrigramEmbedder {
    dim: usize,
    seed: u64,
}

impl Default for HashedTrigramEmbedder {
    fn default() -> Self {
        Self::new(DEFAULT_EMBED_DIM, 0)
    }
}

impl HashedTrigramEmbedder {
    pub fn new(dim: usize, seed: u64) -> Self {
        assert!(dim > 0);
        Self { dim, seed }
    }

    /// Character 3-grams of the lowercased text with whitespace runs collapsed
    /// to one space and a space pad on each side. Empty for blank text.
    pub fn trigrams(text: &str) -> Vec<String> {
        let lower = text.to_lowercase();
        let words: Vec<&str> = lower.split_whitespace().collect();
        if words.is_empty() {
            return Vec::new();
        }
        let padded: Vec<char> = format!(" {} ", words.join(" ")).chars().collect();
        padded.windows(3).map(|w| w.iter().collect()).collect()
    }

    pub fn bucket(&self, trigram: &str) -> usize {
        (xxh64(self.seed, trigram.as_bytes()) % self.dim as u64) as usize
    }

    pub fn embed_vec<T: Real>(&self, text: &str) -> Vec<T> {
        let mut v = vec![T::zero(); self.dim];
        for g in Self::trigrams(text) {
            let b = self.bucket(&g);
            v[b] = v[b] + T::one();
        }
        let norm = v.iter().map(|&x| x * x).sum::<T>().sqrt();
        if norm > T::zero() {
            v.iter_mut().for_each(|x| *x = *x / norm);
        }
        v
    }
}

impl<T: Real> Embedder<T> for HashedTrigramEmbedder {
    fn dim(&self) -> usize {
        self.dim
    }

    fn embed(&self, text: &str) -> Result<Vec<T>, RetrievalError> {
        Ok(self.embed_vec(text))
    }
}

#[derive(Serialize)]
struct EmbedRequest<'a> {
    text: &'a str,
}

#[derive(Deserialize)]
struct EmbedResponse {
    vector: Vec<f64>,
}

struct Pipe {
    child: Child,
    stdin: ChildStdin,
    stdout: BufReader<ChildStdout>,
}

/// Embedder backed by a long-running child process (run through `sh -c`).
/// Requests on one instance are serialized.
pub struct ProcessEmbedder {
    dim: usize,
    pipe: Mutex<Pipe>,
}

impl ProcessEmbedder {
    /// Spawns `command` and probes it once to learn the output dimension.
    pub fn spawn(command: &str) -> Result<Self, RetrievalError> {
        let mut child = Command::new("sh")
            .arg("-c")
            .arg(command)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::inherit())
            .spawn()?;
        let stdin = child.stdin.take().expect("piped stdin");
        let stdout = BufReader::new(child.stdout.take().expect("piped stdout"));
        let mut me = Self { dim: 0, pipe: Mutex::new(Pipe { child, stdin, stdout }) };
        me.dim = me.request("probe")?.len();
        if me.dim == 0 {
            return Err(RetrievalError::External("embedder returned an empty vector".into()));
        }
        Ok(me)
    }

    fn request(&self, text: &str) -> Result<Vec<f64>, RetrievalError> {
        let mut pipe = self.pipe.lock().map_err(|_| RetrievalError::External("poisoned".into()))?;
        let line = serde_json::to_string(&EmbedRequest { text })
            .map_err(|e| RetrievalError::External(e.to_string()))?;
        writeln!(pipe.stdin, "{line}")?;
        pipe.stdin.flush()?;
        let mut resp = String::new();
        if pipe.stdout.read_line(&mut resp)? == 0 {
            return Err(RetrievalError::External("embedder closed its output".into()));
        }
        let parsed: EmbedResponse = serde_json::from_str(resp.trim())
            .map_err(|e| RetrievalError::External(format!("bad response {resp:?}: {e}")))?;
        Ok(parsed.vector)
    }
}

impl Drop for ProcessEmbedder {
    fn drop(&mut self) {
        if let Ok(pipe) = self.pipe.get_mut() {
            let _ = pipe.child.kill();
            let _ = pipe.child.wait();
        }
    }
}

impl<T: Real> Embedder<T> for ProcessEmbedder {
    fn dim(&self) -> usize {
        self.dim
    }

    fn embed(&self, text: &str) -> Result<Vec<T>, RetrievalError> {
        let v = self.request(text)?;
        if v.len() != self.dim {
            return Err(RetrievalError::DimensionMismatch { expected: self.dim, got: v.len() });
        }
        Ok(v.into_iter().map(T::of).collect())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StoreEntry<T> {
    pub doc_id: String,
    pub vector: Vec<T>,
    #[serde(skip)]
    pub text: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StoreHit<T> {
    pub index: usize,
    pub doc_id: String,
    pub distance: T,
}

/// Exhaustive-scan store keyed by unique entry ids. Distance is
/// `1 - cosine`, clamped to `[0, 2]`.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorStore<T> {
    dim: usize,
    entries: Vec<StoreEntry<T>>,
    ids: HashMap<String, usize>,
}

impl<T: Real> VectorStore<T> {
    pub fn new(dim: usize) -> Self {
        Self { dim, entries: Vec::new(), ids: HashMap::new() }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[StoreEntry<T>] {
        &self.entries
    }

    pub fn insert_vector(
        &mut self,
        doc_id: impl Into<String>,
        vector: Vec<T>,
        text: Option<String>,
    ) -> Result<(), RetrievalError> {
        let doc_id = doc_id.into();
        if vector.len() != self.dim {
            return Err(RetrievalError::DimensionMismatch { expected: self.dim, got: vector.len() });
        }
        if self.ids.contains_key(&doc_id) {
            return Err(RetrievalError::DuplicateId(doc_id));
        }
        self.ids.insert(doc_id.clone(), self.entries.len());
        self.entries.push(StoreEntry { doc_id, vector, text });
        Ok(())
    }

    pub fn insert_text<E: Embedder<T> + ?Sized>(
        &mut self,
        doc_id: impl Into<String>,
        text: &str,
        embedder: &E,
    ) -> Result<(), RetrievalError> {
        let v = embedder.embed(text)?;
        self.insert_vector(doc_id, v, Some(text.to_owned()))
    }

    pub fn get(&self, doc_id: &str) -> Option<&StoreEntry<T>> {
        self.ids.get(doc_id).map(|&i| &self.entries[i])
    }

    /// Nearest entry; ties go to the earliest inserted.
    pub fn query_vector(&self, q: &[T]) -> Result<Option<StoreHit<T>>, RetrievalError> {
        if q.len() != self.dim {
            return Err(RetrievalError::DimensionMismatch { expected: self.dim, got: q.len() });
        }
        let two = T::one() + T::one();
        let mut best: Option<StoreHit<T>> = None;
        for (i, e) in self.entries.iter().enumerate() {
            let d = if q == e.vector.as_slice() && q.iter().any(|&x| x != T::zero()) {
                T::zero()
            } else {
                (T::one() - cosine(q, &e.vector)).max(T::zero()).min(two)
            };
            if best.as_ref().is_none_or(|b| d < b.distance) {
                best = Some(StoreHit { index: i, doc_id: e.doc_id.clone(), distance: d });
            }
        }
        Ok(best)
    }

    pub fn query<E: Embedder<T> + ?Sized>(
        &self,
        text: &str,
        embedder: &E,
    ) -> Result<Option<StoreHit<T>>, RetrievalError> {
        if embedder.dim() != self.dim {
            return Err(RetrievalError::DimensionMismatch { expected: self.dim, got: embedder.dim() });
        }
        self.query_vector(&embedder.embed(text)?)
    }

    pub fn save_jsonl(&self, path: &Path) -> Result<(), RetrievalError> {
        let mut w = BufWriter::new(File::create(path)?);
        for e in &self.entries {
            let line = serde_json::to_string(e).map_err(|e| RetrievalError::External(e.to_string()))?;
            writeln!(w, "{line}")?;
        }
        w.flush()?;
        Ok(())
    }

    /// Loads a JSONL store. The dimension comes from the first entry, or
    /// `empty_dim` when the file has none.
    pub fn load_jsonl(path: &Path, empty_dim: usize) -> Result<Self, RetrievalError> {
        let reader = BufReader::new(File::open(path)?);
        let mut store: Option<Self> = None;
        for (i, line) in reader.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let e: StoreEntry<T> =
                serde_json::from_str(&line).map_err(|source| RetrievalError::Parse { line: i + 1, source })?;
            let s = store.get_or_insert_with(|| Self::new(e.vector.len()));
            s.insert_vector(e.doc_id, e.vector, None)?;
        }
        Ok(store.unwrap_or_else(|| Self::new(empty_dim)))
    }

    /// Re-attaches chunk texts after a load.
    pub fn attach_texts(&mut self, docs: &[Document], chunk_words: usize) {
        for (id, _, text) in chunk_documents(docs, chunk_words) {
            if let Some(&i) = self.ids.get(&id) {
                self.entries[i].text = Some(text);
            }
        }
    }
}

/// Splits each document into consecutive, non-overlapping chunks of
/// `chunk_words` whitespace tokens. Returns `(entry_id, source_doc_id, text)`
/// with entry ids of the form `"{doc_id}#{k}"`.
pub fn chunk_documents(docs: &[Document], chunk_words: usize) -> Vec<(String, String, String)> {
    assert!(chunk_words > 0);
    let mut out = Vec::new();
    for d in docs {
        let toks: Vec<&str> = d.text.split_whitespace().collect();
        for (k, c) in toks.chunks(chunk_words).enumerate() {
            out.push((format!("{}{CHUNK_SEPARATOR}{k}", d.id), d.id.clone(), c.join(" ")));
        }
    }
    out
}

/// Source document id of a chunk entry id.
pub fn source_doc_id(entry_id: &str) -> &str {
    entry_id.rsplit_once(CHUNK_SEPARATOR).map_or(entry_id, |(doc, _)| doc)
}

/// Store over the chunks of `docs`.
pub fn build_store<T: Real, E: Embedder<T> + ?Sized>(
    docs: &[Document],
    chunk_words: usize,
    embedder: &E,
) -> Result<VectorStore<T>, RetrievalError> {
    let mut store = VectorStore::new(embedder.dim());
    for (id, _, text) in chunk_documents(docs, chunk_words) {
        store.insert_text(id, &text, embedder)?;
    }
    Ok(store)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_norm_and_self_similarity() {
        let e = HashedTrigramEmbedder::default();
        let v: Vec<f64> = e.embed_vec("copyright takedown for language models");
        let n: f64 = v.iter().map(|x| x * x).sum();
        assert!((n - 1.0).abs() < 1e-12);
        assert!((cosine(&v, &v) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn blank_text_is_zero_vector_with_zero_cosine() {
        let e = HashedTrigramEmbedder::default();
        let z: Vec<f64> = e.embed_vec("   ");
        assert!(z.iter().all(|&x| x == 0.0));
        let v: Vec<f64> = e.embed_vec("abc");
        assert_eq!(cosine(&z, &v), 0.0);
    }

    #[test]
    fn same_trigram_multiset_same_vector() {
        let e = HashedTrigramEmbedder::default();
        let a: Vec<f64> = e.embed_vec("Hello   World");
        let b: Vec<f64> = e.embed_vec("hello world\n");
        assert_eq!(HashedTrigramEmbedder::trigrams("Hello   World"), HashedTrigramEmbedder::trigrams("hello world\n"));
        assert_eq!(a, b);
    }

    #[test]
    fn store_query_basics() {
        let e = HashedTrigramEmbedder::default();
        let mut s = VectorStore::<f64>::new(DEFAULT_EMBED_DIM);
        assert!(s.query("anything", &e).unwrap().is_none());
        s.insert_text("x", "the cat sat on the mat", &e).unwrap();
        s.insert_text("y", "quantum chromodynamics lattice", &e).unwrap();
        let hit = s.query("the cat sat on the mat", &e).unwrap().unwrap();
        assert_eq!(hit.doc_id, "x");
        assert!(hit.distance <= 1e-9);
        assert!(matches!(
            s.insert_text("x", "dup", &e),
            Err(RetrievalError::DuplicateId(_))
        ));
        assert!(matches!(
            s.query_vector(&[1.0, 0.0]),
            Err(RetrievalError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn ties_go_to_first_inserted() {
        let mut s = VectorStore::<f64>::new(2);
        s.insert_vector("a", vec![1.0, 0.0], None).unwrap();
        s.insert_vector("b", vec![1.0, 0.0], None).unwrap();
        assert_eq!(s.query_vector(&[1.0, 0.0]).unwrap().unwrap().doc_id, "a");
    }

    #[test]
    fn chunk_ids_round_trip_to_source() {
        assert_eq!(source_doc_id("news#12#3"), "news#12");
        assert_eq!(source_doc_id("plain"), "plain");
    }
}
