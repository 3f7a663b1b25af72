//! Deployment-time takedown interventions: system prompts, MemFree n-gram
//! filtering, Top-k perturbation and R-CAD.
//!
//! [`InterventionConfig`] is what a run declares. Before each generation it
//! is resolved against the model vocabulary and the query into an
//! [`Intervention`], which [`crate::toylm::generate`] consumes.

use std::collections::HashMap;
use std::sync::{Arc, OnceLock};

use rand::Rng;
use rand_distr::{Distribution, Normal};
use thiserror::Error;

use crate::membership::NGramStore;
use crate::retrieval::{source_doc_id, Embedder, RetrievalError, StoreHit, VectorStore};
use crate::scalar::Real;
use crate::toylm::{LogitVector, TokenId, Vocab};

pub const DEFAULT_TOPK_K: usize = 50;
pub const DEFAULT_RCAD_THRESHOLD: f64 = 0.15;
pub const SIGMA_GRID: [f64; 3] = [0.5, 1.0, 3.0];
pub const ALPHA_GRID: [f64; 3] = [1.0, 2.0, 3.0];

const PRESET_ASSET: &str = include_str!("../assets/system_prompts.v1.txt");

#[derive(Debug, Error)]
pub enum InterventionError {
    #[error("unknown system prompt preset {id:?}; valid ids: {}", valid.join(", "))]
    UnknownPreset { id: String, valid: Vec<String> },
    #[error("logit length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("invalid parameter: {0}")]
    InvalidParam(String),
    #[error(transparent)]
    Retrieval(#[from] RetrievalError),
}

/// A shipped system prompt.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Preset {
    pub id: &'static str,
    pub text: &'static str,
}

/// The six presets in asset order.
pub fn presets() -> &'static [Preset] {
    static PRESETS: OnceLock<Vec<Preset>> = OnceLock::new();
    PRESETS.get_or_init(|| {
        PRESET_ASSET
            .lines()
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .map(|l| {
                let (id, text) = l.split_once('\t').expect("preset lines are id<TAB>text");
                Preset { id, text }
            })
            .collect()
    })
}

pub fn preset(id: &str) -> Result<&'static Preset, InterventionError> {
    presets().iter().find(|p| p.id == id).ok_or_else(|| InterventionError::UnknownPreset {
        id: id.to_owned(),
        valid: presets().iter().map(|p| p.id.to_owned()).collect(),
    })
}

/// Preset tokens followed by `prompt`, over whitespace tokens.
pub fn apply_system_prompt<S: AsRef<str>>(prompt: &[S], preset_id: &str) -> Result<Vec<String>, InterventionError> {
    let p = preset(preset_id)?;
    Ok(p.text
        .split_whitespace()
        .map(str::to_owned)
        .chain(prompt.iter().map(|s| s.as_ref().to_owned()))
        .collect())
}

pub fn apply_system_prompt_ids(prompt: &[TokenId], preset_tokens: &[TokenId]) -> Vec<TokenId> {
    let mut out = Vec::with_capacity(preset_tokens.len() + prompt.len());
    out.extend_from_slice(preset_tokens);
    out.extend_from_slice(prompt);
    out
}

fn completes_ngram(history_tail: &[&str], candidate: &str, store: &NGramStore) -> bool {
    let mut key = String::with_capacity(history_tail.iter().map(|w| w.len() + 1).sum::<usize>() + candidate.len());
    for w in history_tail {
        key.push_str(w);
        key.push(' ');
    }
    key.push_str(candidate);
    store.contains_canonical(&key)
}

fn blocked(words: &[&str], candidate: Option<&str>, stores: &[&NGramStore]) -> bool {
    let Some(c) = candidate else { return false };
    stores.iter().any(|s| {
        let n = s.ngram_size();
        n >= 1 && words.len() + 1 >= n && completes_ngram(&words[words.len() + 1 - n..], c, s)
    })
}

/// One MemFree selection. `history_words` are the canonical words generated
/// so far; only the last `n − 1` are consulted. Returns the highest-ranked
/// candidate that does not complete a stored n-gram, or the lowest-ranked
/// candidate with the flag set when all are blocked. Candidates without a
/// canonical word (punctuation) never complete an n-gram.
pub fn memfree_step(
    ranked: &[TokenId],
    history_words: &[&str],
    store: &NGramStore,
    vocab: &Vocab,
) -> (TokenId, bool) {
    select_from(ranked.iter().copied(), history_words, &[store], vocab)
}

fn select_from(
    ranked: impl Iterator<Item = TokenId>,
    words: &[&str],
    stores: &[&NGramStore],
    vocab: &Vocab,
) -> (TokenId, bool) {
    let mut last = None;
    for c in ranked {
        if !blocked(words, vocab.canonical(c), stores) {
            return (c, false);
        }
        last = Some(c);
    }
    (last.expect("at least one candidate"), true)
}

/// MemFree over logits: checks the argmax first and ranks the rest only when
/// it is blocked. Reserved tokens are never candidates.
pub(crate) fn memfree_select<T: Real>(
    logits: &LogitVector<T>,
    top: TokenId,
    words: &[&str],
    stores: &[&NGramStore],
    vocab: &Vocab,
) -> (TokenId, bool) {
    if !Vocab::is_reserved(top) && !blocked(words, vocab.canonical(top), stores) {
        return (top, false);
    }
    let ranked = logits.ranked();
    select_from(ranked.into_iter().filter(|&t| !Vocab::is_reserved(t)), words, stores, vocab)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TopKPerturb<T> {
    pub k: usize,
    pub mu: T,
    pub sigma: T,
    pub seed: u64,
}

impl<T: Real> TopKPerturb<T> {
    pub fn new(sigma: T, seed: u64) -> Self {
        Self { k: DEFAULT_TOPK_K, mu: T::zero(), sigma, seed }
    }

    pub fn validate(&self) -> Result<(), InterventionError> {
        if self.k == 0 {
            return Err(InterventionError::InvalidParam("top-k k must be at least 1".into()));
        }
        if !(self.sigma >= T::zero()) || !self.sigma.is_finite() || !self.mu.is_finite() {
            return Err(InterventionError::InvalidParam(format!(
                "top-k needs finite mu and sigma >= 0, got mu={} sigma={}",
                self.mu, self.sigma
            )));
        }
        Ok(())
    }
}

/// Adds `N(mu, sigma²)` noise to each of the `k` highest logits, drawn in
/// rank order. Zero noise leaves the logits untouched.
pub fn topk_perturb<T: Real, R: Rng + ?Sized>(logits: &mut LogitVector<T>, cfg: &TopKPerturb<T>, rng: &mut R) {
    if cfg.sigma == T::zero() && cfg.mu == T::zero() {
        return;
    }
    let normal = Normal::new(cfg.mu.as_f64(), cfg.sigma.as_f64()).expect("validated sigma");
    let top = logits.top_k(cfg.k);
    let s = logits.as_mut_slice();
    for t in top {
        s[t.index()] = s[t.index()] + T::of(normal.sample(rng));
    }
}

/// `(1 + α)·with_prompt − α·with_context`.
pub fn rcad_logits<T: Real>(
    with_prompt: &LogitVector<T>,
    with_context: &LogitVector<T>,
    alpha: T,
) -> Result<LogitVector<T>, InterventionError> {
    if with_prompt.len() != with_context.len() {
        return Err(InterventionError::LengthMismatch(with_prompt.len(), with_context.len()));
    }
    let a1 = T::one() + alpha;
    Ok(LogitVector::new(
        with_prompt.as_slice().iter().zip(with_context.as_slice()).map(|(&p, &c)| a1 * p - alpha * c).collect(),
    ))
}

/// The nearest stored entry when its distance is within `threshold`.
pub fn rcad_prepare<T: Real, E: Embedder<T> + ?Sized>(
    query: &str,
    store: &VectorStore<T>,
    embedder: &E,
    threshold: T,
) -> Result<Option<StoreHit<T>>, InterventionError> {
    if store.is_empty() {
        return Ok(None);
    }
    Ok(store.query(query, embedder)?.filter(|h| h.distance <= threshold))
}

/// Blocklist datastore for R-CAD: chunk embeddings plus the full text of each
/// source document, which is what a hit retrieves.
pub struct Retriever<T> {
    pub store: VectorStore<T>,
    pub embedder: Arc<dyn Embedder<T>>,
    pub documents: HashMap<String, String>,
}

impl<T: Real> Retriever<T> {
    /// Full text of the retrieved source document, if any.
    pub fn retrieve(&self, query: &str, threshold: T) -> Result<Option<(StoreHit<T>, &str)>, InterventionError> {
        Ok(rcad_prepare(query, &self.store, self.embedder.as_ref(), threshold)?.and_then(|h| {
            let text = self.documents.get(source_doc_id(&h.doc_id))?;
            Some((h, text.as_str()))
        }))
    }
}

impl<T> std::fmt::Debug for Retriever<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Retriever").field("entries", &self.documents.len()).finish()
    }
}

/// Where R-CAD gets its blocked context from.
#[derive(Debug, Clone)]
pub enum RcadSource<T> {
    /// Retrieve per query, skipping when the nearest entry is too far.
    Retrieve(Arc<Retriever<T>>),
    /// Always use the example's own source document.
    Gold,
}

#[derive(Debug, Clone)]
pub struct RcadConfig<T> {
    pub alpha: T,
    pub distance_threshold: T,
    pub source: RcadSource<T>,
}

/// A declared intervention.
#[derive(Debug, Clone)]
pub enum InterventionConfig<T> {
    SystemPrompt { preset_id: String },
    MemFree { store: Arc<NGramStore> },
    TopKPerturb(TopKPerturb<T>),
    Rcad(RcadConfig<T>),
}

/// A resolved intervention for one generation.
#[derive(Debug, Clone)]
pub enum Intervention<T> {
    SystemPrompt { preset_id: String, tokens: Vec<TokenId> },
    MemFree(Arc<NGramStore>),
    TopK(TopKPerturb<T>),
    /// `context` is `None` when retrieval was skipped; decoding is then vanilla.
    Rcad { alpha: T, context: Option<Vec<TokenId>> },
}

/// Per-generation inputs needed to resolve configs.
#[derive(Debug, Clone, Copy)]
pub struct ResolveContext<'a> {
    /// Retrieval query (the user prompt text).
    pub query: &'a str,
    /// Full text of the example's source document, for gold R-CAD.
    pub gold_text: Option<&'a str>,
}

impl<T: Real> InterventionConfig<T> {
    pub fn validate(&self) -> Result<(), InterventionError> {
        match self {
            Self::SystemPrompt { preset_id } => preset(preset_id).map(|_| ()),
            Self::MemFree { store } => {
                if store.ngram_size() == 0 {
                    return Err(InterventionError::InvalidParam("MemFree n must be at least 1".into()));
                }
                Ok(())
            }
            Self::TopKPerturb(cfg) => cfg.validate(),
            Self::Rcad(cfg) => {
                if !(cfg.alpha >= T::zero()) || !cfg.alpha.is_finite() {
                    return Err(InterventionError::InvalidParam(format!("alpha must be >= 0, got {}", cfg.alpha)));
                }
                let t = cfg.distance_threshold;
                if !(t >= T::zero() && t <= T::of(2.0)) {
                    return Err(InterventionError::InvalidParam(format!(
                        "distance_threshold must be in [0, 2], got {t}"
                    )));
                }
                Ok(())
            }
        }
    }

    pub fn resolve(&self, vocab: &Vocab, ctx: ResolveContext<'_>) -> Result<Intervention<T>, InterventionError> {
        self.validate()?;
        Ok(match self {
            Self::SystemPrompt { preset_id } => Intervention::SystemPrompt {
                preset_id: preset_id.clone(),
                tokens: vocab.encode(preset(preset_id)?.text),
            },
            Self::MemFree { store } => Intervention::MemFree(Arc::clone(store)),
            Self::TopKPerturb(cfg) => Intervention::TopK(*cfg),
            Self::Rcad(cfg) => {
                let text = match &cfg.source {
                    RcadSource::Gold => ctx.gold_text.map(str::to_owned),
                    RcadSource::Retrieve(r) => {
                        r.retrieve(ctx.query, cfg.distance_threshold)?.map(|(_, t)| t.to_owned())
                    }
                };
                Intervention::Rcad { alpha: cfg.alpha, context: text.map(|t| vocab.encode(&t)) }
            }
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{Document, Domain};
    use crate::membership::ExactNGramSet;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn six_presets_with_exact_bing_text() {
        let ids: Vec<_> = presets().iter().map(|p| p.id).collect();
        assert_eq!(ids, ["manual-copyright", "manual-verbatim", "manual-combined", "copilot", "dbrx", "bing"]);
        assert_eq!(
            preset("bing").unwrap().text,
            "You are a helpful, respectful and honest assistant. You must not reply with content that violates copyrights for books , news articles, or song lyrics."
        );
    }

    #[test]
    fn unknown_preset_lists_valid_ids() {
        let e = preset("nope").unwrap_err().to_string();
        assert!(e.contains("bing") && e.contains("manual-copyright"), "{e}");
    }

    #[test]
    fn system_prompt_prefixes() {
        let p = apply_system_prompt(&["x"], "bing").unwrap();
        assert_eq!(p[0], "You");
        assert_eq!(p.last().unwrap(), "x");
        let empty: [&str; 0] = [];
        assert_eq!(apply_system_prompt(&empty, "bing").unwrap().len(), p.len() - 1);
        let twice = apply_system_prompt(&p, "bing").unwrap();
        assert_eq!(twice.len(), 2 * p.len() - 1);
    }

    #[test]
    fn memfree_skips_member() {
        let mut v = Vocab::new();
        v.add_text("a b c d e x");
        let store = NGramStore::Exact(ExactNGramSet::build(&[Document::new("d", Domain::News, "a b c d e")], 3));
        let ranked = v.encode("d x");
        assert_eq!(memfree_step(&ranked, &["b", "c"], &store, &v), (v.id("x").unwrap(), false));
        // too little history
        assert_eq!(memfree_step(&ranked, &["c"], &store, &v), (v.id("d").unwrap(), false));
        // exhaustion
        assert_eq!(memfree_step(&v.encode("d"), &["b", "c"], &store, &v), (v.id("d").unwrap(), true));
    }

    #[test]
    fn rcad_scalar_case() {
        let a = LogitVector::new(vec![1.0f64, 0.0]);
        let b = LogitVector::new(vec![2.0f64, 0.0]);
        assert_eq!(rcad_logits(&a, &b, 1.0).unwrap().as_slice(), &[0.0, 0.0]);
        assert_eq!(rcad_logits(&a, &b, 0.0).unwrap(), a);
        assert!(rcad_logits(&a, &LogitVector::new(vec![0.0]), 1.0).is_err());
    }

    #[test]
    fn topk_touches_only_top_k() {
        let mut l = LogitVector::new((0..10).map(f64::from).collect());
        let cfg = TopKPerturb { k: 3, mu: 0.0, sigma: 1.0, seed: 0 };
        topk_perturb(&mut l, &cfg, &mut ChaCha8Rng::seed_from_u64(1));
        assert_eq!(&l.as_slice()[..7], &[0.0, 1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        assert!(l.as_slice()[7..].iter().zip([7.0, 8.0, 9.0]).any(|(a, b)| *a != b));
        let mut z = LogitVector::new(vec![1.0f64, 2.0]);
        topk_perturb(&mut z, &TopKPerturb::new(0.0, 0), &mut ChaCha8Rng::seed_from_u64(1));
        assert_eq!(z.as_slice(), &[1.0, 2.0]);
    }

    #[test]
    fn validation() {
        let bad = InterventionConfig::<f64>::TopKPerturb(TopKPerturb { k: 0, mu: 0.0, sigma: 1.0, seed: 0 });
        assert!(bad.validate().is_err());
        let bad = InterventionConfig::<f64>::TopKPerturb(TopKPerturb::new(-1.0, 0));
        assert!(bad.validate().is_err());
        let bad = InterventionConfig::<f64>::Rcad(RcadConfig { alpha: 1.0, distance_threshold: 3.0, source: RcadSource::Gold });
        assert!(bad.validate().is_err());
    }
}
