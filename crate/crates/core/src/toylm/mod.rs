//! Deterministic count-based language model with an optional copy component,
//! plus greedy generation under interventions.

mod copy;
mod generate;
mod logits;
mod ngram;
mod vocab;

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use copy::{CopyAugmentedLM, DEFAULT_MIN_MATCH};
pub use generate::{generate, DecoderConfig, Generation, DEFAULT_EFFICIENCY_TOKENS};
pub use logits::LogitVector;
pub use ngram::{NGramLM, DEFAULT_ORDER, DEFAULT_SMOOTHING_K, MODEL_FORMAT, MODEL_FORMAT_VERSION};
pub use vocab::{TokenId, Vocab, BOS, EOS, RESERVED, UNK};

use crate::scalar::Real;

/// Copy weight used in both scenarios.
pub const DEFAULT_COPY_WEIGHT: f64 = 0.8;

#[derive(Debug, Error)]
pub enum LmError {
    #[error("order must be at least 2, got {0}")]
    InvalidOrder(usize),
    #[error("smoothing_k must be finite and non-negative, got {0}")]
    InvalidSmoothing(f64),
    #[error("cannot train on an empty corpus")]
    EmptyCorpus,
    #[error("finetune repeats must be at least 1")]
    ZeroRepeats,
    #[error("max_new must be at least 1")]
    ZeroMaxNew,
    #[error("model format: {0}")]
    Format(String),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Anything that yields a next-token distribution over a [`Vocab`].
pub trait LanguageModel<T: Real> {
    fn vocab(&self) -> &Vocab;

    /// Next-token probabilities, indexed by token id. An empty history means
    /// only `<bos>` has been seen.
    fn probs(&self, history: &[TokenId]) -> Vec<T>;

    fn logits(&self, history: &[TokenId]) -> LogitVector<T> {
        LogitVector::from_probs(&self.probs(history))
    }

    /// `ln p(target_i | prompt, target_<i)` for each target token.
    fn target_logprobs(&self, prompt: &[TokenId], target: &[TokenId]) -> Vec<T> {
        let mut hist = prompt.to_vec();
        let mut out = Vec::with_capacity(target.len());
        for &t in target {
            out.push(self.probs(&hist)[t.index()].ln_floor());
            hist.push(t);
        }
        out
    }
}

/// An n-gram model plus the copy settings applied to whatever context a
/// generation binds it to.
#[derive(Debug, Clone, PartialEq)]
pub struct ToyModel<T> {
    pub lm: NGramLM<T>,
    pub copy_weight: T,
    pub min_match: usize,
}

impl<T: Real> ToyModel<T> {
    pub fn new(lm: NGramLM<T>, copy_weight: T, min_match: usize) -> Self {
        Self { lm, copy_weight, min_match }
    }

    pub fn vocab(&self) -> &Vocab {
        self.lm.vocab()
    }

    /// The copy-augmented view over `context`.
    pub fn bind(&self, context: &[TokenId]) -> CopyAugmentedLM<'_, T> {
        CopyAugmentedLM::new(&self.lm, self.copy_weight, self.min_match, context.to_vec())
    }

    pub fn with_lm(&self, lm: NGramLM<T>) -> Self {
        Self { lm, copy_weight: self.copy_weight, min_match: self.min_match }
    }

    pub fn save_json(&self, path: &Path) -> Result<(), LmError> {
        let header = ToyModelHeader { copy_weight: self.copy_weight.as_f64(), min_match: self.min_match };
        let s = format!(
            "{{\"copy\":{},\"lm\":{}}}",
            serde_json::to_string(&header)?,
            self.lm.to_json_string()?
        );
        std::fs::write(path, s)?;
        Ok(())
    }

    pub fn load_json(path: &Path) -> Result<Self, LmError> {
        let v: serde_json::Value = serde_json::from_slice(&std::fs::read(path)?)?;
        let header: ToyModelHeader = serde_json::from_value(v["copy"].clone())?;
        let lm = NGramLM::from_json_str(&v["lm"].to_string())?;
        Ok(Self::new(lm, T::of(header.copy_weight), header.min_match))
    }
}

#[derive(Serialize, Deserialize)]
struct ToyModelHeader {
    copy_weight: f64,
    min_match: usize,
}
