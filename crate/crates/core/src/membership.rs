//! Word n-gram membership stores backing MemFree decoding.
//!
//! N-grams are canonicalized with [`normalize_words`] and joined by single
//! spaces before hashing, so a filter hit lines up with what the word-level
//! metrics detect.
//!
//! # Binary format
//!
//! ```text
//! offset  size  field
//! 0       6     magic "CTEBF1"
//! 6       8     m, number of bits            (u64 LE)
//! 14      8     h, number of hash functions  (u64 LE)
//! 22      8     n, n-gram size               (u64 LE)
//! 30      8     capacity hint                (u64 LE)
//! 38      8     false-positive target        (f64 LE)
//! 46      ⌈m/8⌉ bit array, bit i at byte i/8, bit position i%8 (LSB first)
//! ```
//!
//! Probe `i` of a canonical n-gram `g` sets bit
//! `(h1 + i * h2) mod m` with `h1 = xxh64(seed=0, g)` and
//! `h2 = xxh64(seed=0x9E3779B97F4A7C15, g) | 1`, all arithmetic wrapping u64.

use std::collections::HashSet;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use thiserror::Error;

use crate::corpus::Document;
use crate::hashing::{xxh64, BLOOM_SEED_1, BLOOM_SEED_2};
use crate::metrics::normalize_words;

pub const MAGIC: &[u8; 6] = b"CTEBF1";
pub const DEFAULT_FP_TARGET: f64 = 0.001;
/// MemFree n-gram sizes swept by default.
pub const NGRAM_GRID: [usize; 3] = [6, 12, 24];

#[derive(Debug, Error)]
pub enum MembershipError {
    #[error("n-gram has {got} words, filter stores {expected}-grams")]
    Arity { expected: usize, got: usize },
    #[error("invalid filter parameters: {0}")]
    InvalidParams(String),
    #[error("not a bloom filter file (bad magic)")]
    BadMagic,
    #[error("bloom filter file truncated")]
    Truncated,
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Canonical n-grams of a text's normalized words.
pub fn canonical_ngrams(text: &str, n: usize) -> impl Iterator<Item = String> {
    let words = normalize_words(text);
    let count = if words.len() >= n { words.len() - n + 1 } else { 0 };
    (0..count).map(move |i| words[i..i + n].join(" "))
}

fn distinct_ngrams(docs: &[Document], n: usize) -> HashSet<String> {
    docs.iter().flat_map(|d| canonical_ngrams(&d.text, n)).collect()
}

/// Canonical key of a word sequence, or `None` if normalization changes its
/// length (such a sequence cannot be a stored n-gram).
fn canonical_query<S: AsRef<str>>(ngram: &[S]) -> Option<String> {
    let joined = ngram.iter().map(AsRef::as_ref).collect::<Vec<_>>().join(" ");
    let words = normalize_words(&joined);
    (words.len() == ngram.len()).then(|| words.join(" "))
}

/// Standard optimal sizing: `m = ceil(-c ln p / (ln 2)^2)`,
/// `h = round(m / c * ln 2)`, with `c` at least 1 and `h` at least 1.
pub fn optimal_params(capacity: u64, fp_target: f64) -> (u64, u64) {
    let c = capacity.max(1) as f64;
    let ln2 = std::f64::consts::LN_2;
    let m = (-c * fp_target.ln() / (ln2 * ln2)).ceil().max(1.0);
    let h = ((m / c) * ln2).round().max(1.0);
    (m as u64, h as u64)
}

#[derive(Debug, Clone, PartialEq)]
pub struct BloomFilter {
    bits: Vec<u8>,
    num_bits: u64,
    num_hashes: u64,
    ngram_size: usize,
    capacity_hint: u64,
    fp_target: f64,
}

impl BloomFilter {
    pub fn new(capacity_hint: u64, fp_target: f64, ngram_size: usize) -> Result<Self, MembershipError> {
        if ngram_size == 0 {
            return Err(MembershipError::InvalidParams("n-gram size must be at least 1".into()));
        }
        if !(fp_target > 0.0 && fp_target < 1.0) {
            return Err(MembershipError::InvalidParams(format!("fp_target {fp_target} not in (0, 1)")));
        }
        let (m, h) = optimal_params(capacity_hint, fp_target);
        Ok(Self {
            bits: vec![0; m.div_ceil(8) as usize],
            num_bits: m,
            num_hashes: h,
            ngram_size,
            capacity_hint,
            fp_target,
        })
    }

    /// Filter holding every canonical `n`-gram of every document.
    pub fn build(docs: &[Document], n: usize, fp_target: f64) -> Result<Self, MembershipError> {
        let grams = distinct_ngrams(docs, n.max(1));
        let mut f = Self::new(grams.len() as u64, fp_target, n)?;
        let mut sorted: Vec<_> = grams.into_iter().collect();
        sorted.sort();
        for g in &sorted {
            f.insert_canonical(g);
        }
        Ok(f)
    }

    pub fn num_bits(&self) -> u64 {
        self.num_bits
    }

    pub fn num_hashes(&self) -> u64 {
        self.num_hashes
    }

    pub fn ngram_size(&self) -> usize {
        self.ngram_size
    }

    pub fn capacity_hint(&self) -> u64 {
        self.capacity_hint
    }

    pub fn fp_target(&self) -> f64 {
        self.fp_target
    }

    fn probes(&self, key: &str) -> impl Iterator<Item = u64> + '_ {
        let h1 = xxh64(BLOOM_SEED_1, key.as_bytes());
        let h2 = xxh64(BLOOM_SEED_2, key.as_bytes()) | 1;
        (0..self.num_hashes).map(move |i| h1.wrapping_add(i.wrapping_mul(h2)) % self.num_bits)
    }

    /// Inserts an already-canonical n-gram key.
    pub fn insert_canonical(&mut self, key: &str) {
        let idx: Vec<u64> = self.probes(key).collect();
        for i in idx {
            self.bits[(i / 8) as usize] |= 1 << (i % 8);
        }
    }

    pub fn contains_canonical(&self, key: &str) -> bool {
        self.probes(key).all(|i| self.bits[(i / 8) as usize] & (1 << (i % 8)) != 0)
    }

    pub fn insert<S: AsRef<str>>(&mut self, ngram: &[S]) -> Result<(), MembershipError> {
        self.check_arity(ngram.len())?;
        if let Some(k) = canonical_query(ngram) {
            self.insert_canonical(&k);
        }
        Ok(())
    }

    pub fn contains<S: AsRef<str>>(&self, ngram: &[S]) -> Result<bool, MembershipError> {
        self.check_arity(ngram.len())?;
        Ok(canonical_query(ngram).is_some_and(|k| self.contains_canonical(&k)))
    }

    fn check_arity(&self, got: usize) -> Result<(), MembershipError> {
        if got != self.ngram_size {
            return Err(MembershipError::Arity { expected: self.ngram_size, got });
        }
        Ok(())
    }

    pub fn write_to<W: Write>(&self, mut w: W) -> Result<(), MembershipError> {
        w.write_all(MAGIC)?;
        for v in [self.num_bits, self.num_hashes, self.ngram_size as u64, self.capacity_hint] {
            w.write_all(&v.to_le_bytes())?;
        }
        w.write_all(&self.fp_target.to_le_bytes())?;
        w.write_all(&self.bits)?;
        Ok(())
    }

    pub fn read_from<R: Read>(mut r: R) -> Result<Self, MembershipError> {
        let mut magic = [0u8; 6];
        read_exact(&mut r, &mut magic)?;
        if &magic != MAGIC {
            return Err(MembershipError::BadMagic);
        }
        let mut word = [0u8; 8];
        let mut next = |r: &mut R| -> Result<[u8; 8], MembershipError> {
            read_exact(r, &mut word)?;
            Ok(word)
        };
        let num_bits = u64::from_le_bytes(next(&mut r)?);
        let num_hashes = u64::from_le_bytes(next(&mut r)?);
        let ngram_size = u64::from_le_bytes(next(&mut r)?) as usize;
        let capacity_hint = u64::from_le_bytes(next(&mut r)?);
        let fp_target = f64::from_le_bytes(next(&mut r)?);
        if num_bits == 0 || num_hashes == 0 || ngram_size == 0 {
            return Err(MembershipError::InvalidParams("zero-sized field in header".into()));
        }
        let mut bits = vec![0u8; num_bits.div_ceil(8) as usize];
        read_exact(&mut r, &mut bits)?;
        Ok(Self { bits, num_bits, num_hashes, ngram_size, capacity_hint, fp_target })
    }

    pub fn save(&self, path: &Path) -> Result<(), MembershipError> {
        let mut w = BufWriter::new(File::create(path)?);
        self.write_to(&mut w)?;
        w.flush()?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, MembershipError> {
        Self::read_from(BufReader::new(File::open(path)?))
    }
}

fn read_exact<R: Read>(r: &mut R, buf: &mut [u8]) -> Result<(), MembershipError> {
    r.read_exact(buf).map_err(|e| match e.kind() {
        std::io::ErrorKind::UnexpectedEof => MembershipError::Truncated,
        _ => MembershipError::Io(e),
    })
}

/// Exact hash-set store with the same canonicalization as [`BloomFilter`];
/// no false positives.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExactNGramSet {
    ngram_size: usize,
    grams: HashSet<String>,
}

impl ExactNGramSet {
    pub fn build(docs: &[Document], n: usize) -> Self {
        Self { ngram_size: n, grams: distinct_ngrams(docs, n) }
    }

    pub fn len(&self) -> usize {
        self.grams.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grams.is_empty()
    }

    pub fn contains_canonical(&self, key: &str) -> bool {
        self.grams.contains(key)
    }
}

/// Either store kind, as consumed by MemFree.
#[derive(Debug, Clone, PartialEq)]
pub enum NGramStore {
    Bloom(BloomFilter),
    Exact(ExactNGramSet),
}

impl NGramStore {
    pub fn ngram_size(&self) -> usize {
        match self {
            NGramStore::Bloom(f) => f.ngram_size(),
            NGramStore::Exact(s) => s.ngram_size,
        }
    }

    pub fn contains_canonical(&self, key: &str) -> bool {
        match self {
            NGramStore::Bloom(f) => f.contains_canonical(key),
            NGramStore::Exact(s) => s.contains_canonical(key),
        }
    }

    pub fn contains<S: AsRef<str>>(&self, ngram: &[S]) -> Result<bool, MembershipError> {
        if ngram.len() != self.ngram_size() {
            return Err(MembershipError::Arity { expected: self.ngram_size(), got: ngram.len() });
        }
        Ok(canonical_query(ngram).is_some_and(|k| self.contains_canonical(&k)))
    }
}
