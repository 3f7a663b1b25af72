use std::collections::HashMap;
use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::Document;
use crate::scalar::Real;
use crate::toylm::{LanguageModel, LmError, TokenId, Vocab, BOS, RESERVED};

pub const DEFAULT_ORDER: usize = 4;
pub const DEFAULT_SMOOTHING_K: f64 = 0.01;
pub const MODEL_FORMAT: &str = "takedown-ngram";
pub const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct ContextCounts<T> {
    pub(crate) total: T,
    pub(crate) next: HashMap<TokenId, T>,
}

/// Add-k smoothed n-gram model over a [`Vocab`].
///
/// `P(w | ctx) = (c(ctx, w) + k) / (c(ctx) + k·V)` where `V` counts the
/// predictable (non-reserved) tokens. Reserved tokens get probability 0. A
/// context that was never seen, or whose denominator is 0, falls back to the
/// uniform distribution. Contexts shorter than `order − 1` are left-padded
/// with `<bos>`.
#[derive(Debug, Clone, PartialEq)]
pub struct NGramLM<T> {
    order: usize,
    smoothing_k: T,
    vocab: Vocab,
    counts: HashMap<Vec<TokenId>, ContextCounts<T>>,
}

impl<T: Real> NGramLM<T> {
    /// An untrained model with the given vocabulary.
    pub fn empty(order: usize, smoothing_k: T, vocab: Vocab) -> Result<Self, LmError> {
        if order < 2 {
            return Err(LmError::InvalidOrder(order));
        }
        if !(smoothing_k >= T::zero()) || !smoothing_k.is_finite() {
            return Err(LmError::InvalidSmoothing(smoothing_k.as_f64()));
        }
        Ok(Self { order, smoothing_k, vocab, counts: HashMap::new() })
    }

    pub fn train(corpus: &[Document], order: usize, smoothing_k: T) -> Result<Self, LmError> {
        let mut lm = Self::empty(order, smoothing_k, Vocab::new())?;
        if corpus.iter().all(|d| d.text.split_whitespace().next().is_none()) {
            return Err(LmError::EmptyCorpus);
        }
        for d in corpus {
            lm.vocab.add_text(&d.text);
        }
        for d in corpus {
            let ids = lm.vocab.encode(&d.text);
            lm.add_sequence(&[], &ids, T::one());
        }
        Ok(lm)
    }

    /// A copy with `docs` counted `repeats` more times. New tokens extend the
    /// vocabulary.
    pub fn finetune(&self, docs: &[Document], repeats: usize) -> Result<Self, LmError> {
        if repeats == 0 {
            return Err(LmError::ZeroRepeats);
        }
        let mut lm = self.clone();
        for d in docs {
            lm.vocab.add_text(&d.text);
        }
        let scale = T::of_usize(repeats);
        for d in docs {
            let ids = lm.vocab.encode(&d.text);
            lm.add_sequence(&[], &ids, scale);
        }
        Ok(lm)
    }

    /// Adds tokens of `text` to the vocabulary without counting anything.
    pub fn extend_vocab(&mut self, text: &str) {
        self.vocab.add_text(text);
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn smoothing_k(&self) -> T {
        self.smoothing_k
    }

    pub fn vocab(&self) -> &Vocab {
        &self.vocab
    }

    pub fn num_contexts(&self) -> usize {
        self.counts.len()
    }

    /// The `order − 1` tokens that condition the next prediction.
    pub fn context_key(&self, history: &[TokenId]) -> Vec<TokenId> {
        let n = self.order - 1;
        let mut key = Vec::with_capacity(n);
        if history.len() < n {
            key.resize(n - history.len(), BOS);
            key.extend_from_slice(history);
        } else {
            key.extend_from_slice(&history[history.len() - n..]);
        }
        key
    }

    /// Every `(context, next)` event of `target` when it follows `prompt`.
    pub fn events(&self, prompt: &[TokenId], target: &[TokenId]) -> Vec<(Vec<TokenId>, TokenId)> {
        let mut seq = Vec::with_capacity(prompt.len() + target.len());
        seq.extend_from_slice(prompt);
        let mut out = Vec::with_capacity(target.len());
        for &t in target {
            out.push((self.context_key(&seq), t));
            seq.push(t);
        }
        out
    }

    /// Adds `scale` to the count of each event of `target` after `prompt`.
    /// Negative scales subtract; counts are floored at zero.
    pub fn add_sequence(&mut self, prompt: &[TokenId], target: &[TokenId], scale: T) {
        for (ctx, next) in self.events(prompt, target) {
            self.add_count(ctx, next, scale);
        }
    }

    pub fn add_count(&mut self, ctx: Vec<TokenId>, next: TokenId, delta: T) {
        if Vocab::is_reserved(next) {
            return;
        }
        let entry = self
            .counts
            .entry(ctx)
            .or_insert_with(|| ContextCounts { total: T::zero(), next: HashMap::new() });
        let c = entry.next.entry(next).or_insert(T::zero());
        let updated = (*c + delta).max(T::zero());
        entry.total = (entry.total + updated - *c).max(T::zero());
        *c = updated;
    }

    pub fn count(&self, ctx: &[TokenId], next: TokenId) -> T {
        self.counts
            .get(ctx)
            .and_then(|c| c.next.get(&next))
            .copied()
            .unwrap_or_else(T::zero)
    }

    pub fn context_total(&self, ctx: &[TokenId]) -> T {
        self.counts.get(ctx).map_or_else(T::zero, |c| c.total)
    }

    /// Replaces the counts of one context with another model's.
    pub(crate) fn set_context(&mut self, ctx: Vec<TokenId>, counts: Option<ContextCounts<T>>) {
        match counts {
            Some(c) => {
                self.counts.insert(ctx, c);
            }
            None => {
                self.counts.remove(&ctx);
            }
        }
    }

    pub(crate) fn context_counts(&self, ctx: &[TokenId]) -> Option<&ContextCounts<T>> {
        self.counts.get(ctx)
    }

    /// Smoothed next-token distribution for a context key.
    pub fn probs_for_key(&self, key: &[TokenId]) -> Vec<T> {
        let v = self.vocab.len();
        let vp = T::of_usize(self.vocab.predictable());
        let mut p = vec![T::zero(); v];
        let k = self.smoothing_k;
        let denom = self.counts.get(key).map(|c| c.total + k * vp);
        match (self.counts.get(key), denom) {
            (Some(cc), Some(d)) if d > T::zero() => {
                let floor = k / d;
                p[RESERVED..].fill(floor);
                for (&t, &c) in &cc.next {
                    p[t.index()] = (c + k) / d;
                }
            }
            _ => {
                if self.vocab.predictable() > 0 {
                    p[RESERVED..].fill(T::one() / vp);
                }
            }
        }
        p
    }

    pub fn prob(&self, history: &[TokenId], token: TokenId) -> T {
        self.probs_for_key(&self.context_key(history))[token.index()]
    }

    pub fn save_json(&self, path: &Path) -> Result<(), LmError> {
        let w = BufWriter::new(File::create(path)?);
        serde_json::to_writer(w, &self.to_file())?;
        Ok(())
    }

    pub fn load_json(path: &Path) -> Result<Self, LmError> {
        let r = BufReader::new(File::open(path)?);
        let file: ModelFile<T> = serde_json::from_reader(r)?;
        Self::from_file(file)
    }

    pub fn to_json_string(&self) -> Result<String, LmError> {
        Ok(serde_json::to_string(&self.to_file())?)
    }

    pub fn from_json_str(s: &str) -> Result<Self, LmError> {
        Self::from_file(serde_json::from_str(s)?)
    }

    fn to_file(&self) -> ModelFile<T> {
        let mut contexts: Vec<ContextRecord<T>> = self
            .counts
            .iter()
            .filter(|(_, c)| c.next.values().any(|&x| x > T::zero()))
            .map(|(ctx, c)| {
                let mut next: Vec<(u32, T)> =
                    c.next.iter().filter(|(_, &x)| x > T::zero()).map(|(t, &x)| (t.0, x)).collect();
                next.sort_by_key(|e| e.0);
                ContextRecord { context: ctx.iter().map(|t| t.0).collect(), next }
            })
            .collect();
        contexts.sort_by(|a, b| a.context.cmp(&b.context));
        ModelFile {
            format: MODEL_FORMAT.to_owned(),
            version: MODEL_FORMAT_VERSION,
            order: self.order,
            smoothing_k: self.smoothing_k,
            vocab: self.vocab.tokens().to_vec(),
            contexts,
        }
    }

    fn from_file(file: ModelFile<T>) -> Result<Self, LmError> {
        if file.format != MODEL_FORMAT || file.version != MODEL_FORMAT_VERSION {
            return Err(LmError::Format(format!("unsupported model format {} v{}", file.format, file.version)));
        }
        let mut lm = Self::empty(file.order, file.smoothing_k, Vocab::from_tokens(file.vocab))?;
        let v = lm.vocab.len() as u32;
        for rec in file.contexts {
            if rec.context.len() != lm.order - 1 || rec.context.iter().any(|&t| t >= v) {
                return Err(LmError::Format(format!("bad context {:?}", rec.context)));
            }
            let ctx: Vec<TokenId> = rec.context.into_iter().map(TokenId).collect();
            for (t, c) in rec.next {
                if t >= v || !(c >= T::zero()) {
                    return Err(LmError::Format(format!("bad count entry ({t}, {c})")));
                }
                lm.add_count(ctx.clone(), TokenId(t), c);
            }
        }
        Ok(lm)
    }
}

impl<T: Real> LanguageModel<T> for NGramLM<T> {
    fn vocab(&self) -> &Vocab {
        &self.vocab
    }

    fn probs(&self, history: &[TokenId]) -> Vec<T> {
        self.probs_for_key(&self.context_key(history))
    }
}

/// On-disk JSON layout. Contexts are sorted and zero counts dropped, so equal
/// models serialize to identical bytes.
#[derive(Serialize, Deserialize)]
#[serde(bound = "T: Real")]
struct ModelFile<T> {
    format: String,
    version: u32,
    order: usize,
    smoothing_k: T,
    vocab: Vec<String>,
    contexts: Vec<ContextRecord<T>>,
}

#[derive(Serialize, Deserialize)]
#[serde(bound = "T: Real")]
struct ContextRecord<T> {
    context: Vec<u32>,
    next: Vec<(u32, T)>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Domain;

    fn docs(texts: &[&str]) -> Vec<Document> {
        texts.iter().enumerate().map(|(i, t)| Document::new(format!("d{i}"), Domain::News, *t)).collect()
    }

    #[test]
    fn hand_counted_bigram() {
        let k = 0.5;
        let lm = NGramLM::<f64>::train(&docs(&["a b a b"]), 2, k).unwrap();
        let a = lm.vocab().id("a").unwrap();
        let b = lm.vocab().id("b").unwrap();
        // V = 2, c(a) = 2, c(a, b) = 2
        assert!((lm.prob(&[a], b) - (2.0 + k) / (2.0 + k * 2.0)).abs() < 1e-15);
        assert!((lm.prob(&[a], a) - k / (2.0 + k * 2.0)).abs() < 1e-15);
    }

    #[test]
    fn unseen_context_is_uniform_at_k_zero() {
        let lm = NGramLM::<f64>::train(&docs(&["x y z"]), 3, 0.0).unwrap();
        let z = lm.vocab().id("z").unwrap();
        let p = lm.probs(&[z, z]);
        assert_eq!(&p[RESERVED..], &[1.0 / 3.0; 3]);
        assert_eq!(&p[..RESERVED], &[0.0; 3]);
    }

    #[test]
    fn rejects_bad_arguments() {
        assert!(matches!(NGramLM::<f64>::train(&docs(&[" "]), 2, 0.1), Err(LmError::EmptyCorpus)));
        assert!(matches!(NGramLM::<f64>::train(&docs(&["a"]), 1, 0.1), Err(LmError::InvalidOrder(1))));
        assert!(NGramLM::<f64>::train(&docs(&["a"]), 2, -1.0).is_err());
        let lm = NGramLM::<f64>::train(&docs(&["a"]), 2, 0.1).unwrap();
        assert!(matches!(lm.finetune(&docs(&["a"]), 0), Err(LmError::ZeroRepeats)));
    }

    #[test]
    fn finetune_adds_counts_and_vocab() {
        let lm = NGramLM::<f64>::train(&docs(&["a b c"]), 2, 0.1).unwrap();
        let ft = lm.finetune(&docs(&["b d"]), 3).unwrap();
        let b = ft.vocab().id("b").unwrap();
        let d = ft.vocab().id("d").unwrap();
        assert_eq!(ft.count(&[b], d), 3.0);
        assert_eq!(lm.vocab().id("d"), None);
    }

    #[test]
    fn json_round_trip() {
        let lm = NGramLM::<f32>::train(&docs(&["p q r p q s", "q r"]), 3, 0.25).unwrap();
        let s = lm.to_json_string().unwrap();
        let back = NGramLM::<f32>::from_json_str(&s).unwrap();
        assert_eq!(back.to_json_string().unwrap(), s);
        let h = lm.vocab().encode("p q");
        assert_eq!(back.probs(&h), lm.probs(&h));
    }

    #[test]
    fn subtraction_floors_at_zero() {
        let mut lm = NGramLM::<f64>::train(&docs(&["a b"]), 2, 0.1).unwrap();
        let a = lm.vocab().id("a").unwrap();
        let b = lm.vocab().id("b").unwrap();
        lm.add_count(vec![a], b, -5.0);
        assert_eq!(lm.count(&[a], b), 0.0);
        assert_eq!(lm.context_total(&[a]), 0.0);
    }
}
