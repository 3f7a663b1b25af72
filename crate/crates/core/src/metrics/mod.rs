//! Regurgitation-risk similarity metrics and the two utility scores.
//!
//! | metric          | unit  | preprocessing              | better |
//! |-----------------|-------|----------------------------|--------|
//! | `lcs_char`      | chars | [`normalize_chars`]        | lower  |
//! | `lcs_word`      | words | [`normalize_words`]        | lower  |
//! | `rouge1`        | ratio | [`normalize_words`]        | lower  |
//! | `rougeL`        | ratio | [`normalize_words`]        | lower  |
//! | `acs_word`      | words | [`normalize_words`]        | lower  |
//! | `levenshtein`   | chars | lowercase only             | higher |
//! | `minhash`       | ratio | word 3-gram sets           | lower  |
//! | `semantic`      | ratio | embedder cosine            | lower  |

mod acs;
mod lcs;
mod levenshtein;
mod minhash;
mod normalize;
mod rouge;
mod semantic;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use acs::{accumulated_common_spans, acs_word_len, DEFAULT_ACS_MIN_LEN};
pub use lcs::{lcs_char_len, lcs_len, lcs_word_len};
pub use levenshtein::{edit_distance, levenshtein};
pub use minhash::{minhash_sim, word_shingles, MinHasher, DEFAULT_NUM_PERM, SHINGLE_LEN};
pub use normalize::{is_punctuation, normalize_chars, normalize_token, normalize_words};
pub use rouge::{qa_f1, rouge_recall, RougeVariant};
pub use semantic::semantic_sim;

use crate::retrieval::{Embedder, RetrievalError};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Metric {
    #[serde(rename = "lcs_char")]
    LcsChar,
    #[serde(rename = "lcs_word")]
    LcsWord,
    #[serde(rename = "rouge1")]
    Rouge1,
    #[serde(rename = "rougeL")]
    RougeL,
    #[serde(rename = "acs_word")]
    AcsWord,
    #[serde(rename = "levenshtein")]
    Levenshtein,
    #[serde(rename = "minhash")]
    MinHash,
    #[serde(rename = "semantic")]
    Semantic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    LowerIsBetter,
    HigherIsBetter,
}

impl Metric {
    pub const ALL: [Metric; 8] = [
        Metric::LcsChar,
        Metric::LcsWord,
        Metric::Rouge1,
        Metric::RougeL,
        Metric::AcsWord,
        Metric::Levenshtein,
        Metric::MinHash,
        Metric::Semantic,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Metric::LcsChar => "lcs_char",
            Metric::LcsWord => "lcs_word",
            Metric::Rouge1 => "rouge1",
            Metric::RougeL => "rougeL",
            Metric::AcsWord => "acs_word",
            Metric::Levenshtein => "levenshtein",
            Metric::MinHash => "minhash",
            Metric::Semantic => "semantic",
        }
    }

    /// Which way a takedown should push the metric: similarity metrics
    /// should go down, edit distance up.
    pub fn direction(self) -> Direction {
        match self {
            Metric::Levenshtein => Direction::HigherIsBetter,
            _ => Direction::LowerIsBetter,
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Metric {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Metric::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| format!("unknown metric {s:?}"))
    }
}

/// The eight similarity values of one generated continuation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RiskScores<T> {
    pub lcs_char: usize,
    pub lcs_word: usize,
    pub rouge1_recall: T,
    #[serde(rename = "rougeL_recall")]
    pub rouge_l_recall: T,
    pub acs_word: usize,
    pub levenshtein: usize,
    pub minhash_sim: T,
    pub semantic_sim: T,
}

impl<T: Real> RiskScores<T> {
    pub fn get(&self, m: Metric) -> T {
        match m {
            Metric::LcsChar => T::of_usize(self.lcs_char),
            Metric::LcsWord => T::of_usize(self.lcs_word),
            Metric::Rouge1 => self.rouge1_recall,
            Metric::RougeL => self.rouge_l_recall,
            Metric::AcsWord => T::of_usize(self.acs_word),
            Metric::Levenshtein => T::of_usize(self.levenshtein),
            Metric::MinHash => self.minhash_sim,
            Metric::Semantic => self.semantic_sim,
        }
    }

    pub fn values(&self) -> [(Metric, T); 8] {
        Metric::ALL.map(|m| (m, self.get(m)))
    }
}

/// Tunables for [`score_risk`].
#[derive(Debug, Clone)]
pub struct MetricConfig {
    pub acs_min_len: usize,
    pub minhash: MinHasher,
}

impl MetricConfig {
    pub fn new(acs_min_len: usize, num_perm: usize, seed: u64) -> Self {
        Self { acs_min_len, minhash: MinHasher::new(num_perm, seed) }
    }
}

impl Default for MetricConfig {
    fn default() -> Self {
        Self::new(DEFAULT_ACS_MIN_LEN, DEFAULT_NUM_PERM, 1)
    }
}

/// Scores one generation against its ground-truth continuation.
pub fn score_risk<T: Real, E: Embedder<T> + ?Sized>(
    gen: &str,
    truth: &str,
    cfg: &MetricConfig,
    embedder: &E,
) -> Result<RiskScores<T>, RetrievalError> {
    Ok(RiskScores {
        lcs_char: lcs_char_len(gen, truth),
        lcs_word: lcs_word_len(gen, truth),
        rouge1_recall: rouge_recall(gen, truth, RougeVariant::Rouge1),
        rouge_l_recall: rouge_recall(gen, truth, RougeVariant::RougeL),
        acs_word: acs_word_len(gen, truth, cfg.acs_min_len),
        levenshtein: levenshtein(gen, truth),
        minhash_sim: minhash_sim(gen, truth, &cfg.minhash),
        semantic_sim: semantic_sim(gen, truth, embedder)?,
    })
}
