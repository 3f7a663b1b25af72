//! Unlearning objectives as loss calculators, and a count-based analog that
//! edits an [`NGramLM`] directly.
//!
//! Cross-entropy of an example is the mean per-token negative log-likelihood
//! of its ground truth given its hint.
//!
//! | loss | value |
//! |------|-------|
//! | GA | `−mean_F CE` |
//! | GD | `GA + mean_R CE` |
//! | KL | `GA + mean_R (1/|x|) Σ_t KL(p_ref ‖ p_model)` |
//! | PO | `mean_F CE(idk) + mean_R CE` |

use std::collections::HashSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::Example;
use crate::scalar::Real;
use crate::toylm::{LanguageModel, NGramLM, TokenId, Vocab};

pub const DEFAULT_IDK_RESPONSE: &str = "I don't know.";
pub const DEFAULT_LR_ANALOG: f64 = 1.0;
pub const DEFAULT_EPOCHS: usize = 3;

#[derive(Debug, Error)]
pub enum UnlearnError {
    #[error("forget set is empty")]
    EmptyForget,
    #[error("retain set is empty")]
    EmptyRetain,
    #[error("idk response is empty")]
    EmptyIdk,
    #[error("example {0:?} has an empty target")]
    EmptyTarget(String),
    #[error("model and reference vocabularies differ")]
    VocabMismatch,
    #[error("document {0:?} is in both forget and retain sets")]
    Overlap(String),
    #[error("invalid hyperparameters: {0}")]
    InvalidHyperparams(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum UnlearnMethod {
    Ga,
    Gd,
    Kl,
    Po,
}

impl UnlearnMethod {
    pub const ALL: [UnlearnMethod; 4] = [Self::Ga, Self::Gd, Self::Kl, Self::Po];

    pub fn name(self) -> &'static str {
        match self {
            Self::Ga => "ga",
            Self::Gd => "gd",
            Self::Kl => "kl",
            Self::Po => "po",
        }
    }
}

impl std::str::FromStr for UnlearnMethod {
    type Err = UnlearnError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|m| m.name() == s.to_ascii_lowercase())
            .ok_or_else(|| UnlearnError::InvalidHyperparams(format!("unknown unlearning method {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct UnlearningBatch {
    pub forget: Vec<Example>,
    pub retain: Vec<Example>,
}

impl UnlearningBatch {
    pub fn new(forget: Vec<Example>, retain: Vec<Example>) -> Result<Self, UnlearnError> {
        let ids: HashSet<&str> = forget.iter().map(|e| e.doc_id.as_str()).collect();
        if let Some(e) = retain.iter().find(|e| ids.contains(e.doc_id.as_str())) {
            return Err(UnlearnError::Overlap(e.doc_id.clone()));
        }
        Ok(Self { forget, retain })
    }

    pub fn n_forget(&self) -> usize {
        self.forget.len()
    }

    pub fn n_retain(&self) -> usize {
        self.retain.len()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UnlearnHyperparams<T> {
    pub lr_analog: T,
    pub epochs: usize,
}

impl<T: Real> Default for UnlearnHyperparams<T> {
    fn default() -> Self {
        Self { lr_analog: T::of(DEFAULT_LR_ANALOG), epochs: DEFAULT_EPOCHS }
    }
}

impl<T: Real> UnlearnHyperparams<T> {
    /// Requires `lr_analog > 0` and `epochs ≥ 1`.
    pub fn new(lr_analog: T, epochs: usize) -> Result<Self, UnlearnError> {
        if !(lr_analog > T::zero()) || !lr_analog.is_finite() || epochs == 0 {
            return Err(UnlearnError::InvalidHyperparams(format!(
                "need lr_analog > 0 and epochs >= 1, got {lr_analog} and {epochs}"
            )));
        }
        Ok(Self { lr_analog, epochs })
    }

    /// Total count scale `lr_analog · epochs`.
    pub fn scale(&self) -> T {
        self.lr_analog * T::of_usize(self.epochs)
    }
}

/// Hint and ground-truth ids of an example.
pub fn encode_example(vocab: &Vocab, ex: &Example) -> (Vec<TokenId>, Vec<TokenId>) {
    (vocab.encode_tokens(&ex.hint), vocab.encode_tokens(&ex.ground_truth))
}

/// Mean per-token negative log-likelihood of `target` after `prompt`.
pub fn cross_entropy<T: Real, M: LanguageModel<T> + ?Sized>(model: &M, prompt: &[TokenId], target: &[TokenId]) -> T {
    let lp = model.target_logprobs(prompt, target);
    -lp.iter().copied().sum::<T>() / T::of_usize(lp.len())
}

fn example_ce<T: Real, M: LanguageModel<T> + ?Sized>(model: &M, ex: &Example) -> Result<T, UnlearnError> {
    if ex.ground_truth.is_empty() {
        return Err(UnlearnError::EmptyTarget(ex.doc_id.clone()));
    }
    let (p, t) = encode_example(model.vocab(), ex);
    Ok(cross_entropy(model, &p, &t))
}

fn mean_ce<T: Real, M: LanguageModel<T> + ?Sized>(model: &M, set: &[Example]) -> Result<T, UnlearnError> {
    let mut sum = T::zero();
    for ex in set {
        sum = sum + example_ce(model, ex)?;
    }
    Ok(sum / T::of_usize(set.len()))
}

pub fn loss_ga<T: Real, M: LanguageModel<T> + ?Sized>(model: &M, batch: &UnlearningBatch) -> Result<T, UnlearnError> {
    if batch.forget.is_empty() {
        return Err(UnlearnError::EmptyForget);
    }
    Ok(-mean_ce(model, &batch.forget)?)
}

/// Mean cross-entropy over the retain set.
pub fn retain_ce<T: Real, M: LanguageModel<T> + ?Sized>(model: &M, batch: &UnlearningBatch) -> Result<T, UnlearnError> {
    if batch.retain.is_empty() {
        return Err(UnlearnError::EmptyRetain);
    }
    mean_ce(model, &batch.retain)
}

pub fn loss_gd<T: Real, M: LanguageModel<T> + ?Sized>(model: &M, batch: &UnlearningBatch) -> Result<T, UnlearnError> {
    let ga = loss_ga(model, batch)?;
    Ok(ga + retain_ce(model, batch)?)
}

/// `Σ p ln(p / q)`, skipping `p = 0` terms and flooring `q`.
pub fn kl_divergence<T: Real>(p: &[T], q: &[T]) -> T {
    p.iter()
        .zip(q)
        .filter(|(&pi, _)| pi > T::zero())
        .map(|(&pi, &qi)| pi * (pi.ln() - qi.ln_floor()))
        .sum()
}

/// Per-token average of `KL(p_ref ‖ p_model)` over the target positions of
/// each retain example, averaged over examples.
pub fn retain_kl<T: Real, M, R>(model: &M, reference: &R, batch: &UnlearningBatch) -> Result<T, UnlearnError>
where
    M: LanguageModel<T> + ?Sized,
    R: LanguageModel<T> + ?Sized,
{
    if batch.retain.is_empty() {
        return Err(UnlearnError::EmptyRetain);
    }
    if model.vocab().tokens() != reference.vocab().tokens() {
        return Err(UnlearnError::VocabMismatch);
    }
    let mut total = T::zero();
    for ex in &batch.retain {
        if ex.ground_truth.is_empty() {
            return Err(UnlearnError::EmptyTarget(ex.doc_id.clone()));
        }
        let (mut hist, target) = encode_example(model.vocab(), ex);
        let mut sum = T::zero();
        for &t in &target {
            sum = sum + kl_divergence(&reference.probs(&hist), &model.probs(&hist));
            hist.push(t);
        }
        total = total + sum / T::of_usize(target.len());
    }
    Ok(total / T::of_usize(batch.retain.len()))
}

pub fn loss_kl<T: Real, M, R>(model: &M, reference: &R, batch: &UnlearningBatch) -> Result<T, UnlearnError>
where
    M: LanguageModel<T> + ?Sized,
    R: LanguageModel<T> + ?Sized,
{
    let kl = retain_kl(model, reference, batch)?;
    Ok(loss_ga(model, batch)? + kl)
}

pub fn loss_po<T: Real, M: LanguageModel<T> + ?Sized>(
    model: &M,
    batch: &UnlearningBatch,
    idk_response: &[TokenId],
) -> Result<T, UnlearnError> {
    if idk_response.is_empty() {
        return Err(UnlearnError::EmptyIdk);
    }
    if batch.forget.is_empty() {
        return Err(UnlearnError::EmptyForget);
    }
    let mut idk = T::zero();
    for ex in &batch.forget {
        let hint = model.vocab().encode_tokens(&ex.hint);
        idk = idk + cross_entropy(model, &hint, idk_response);
    }
    Ok(idk / T::of_usize(batch.forget.len()) + retain_ce(model, batch)?)
}

/// Gradient-free analog of each objective on a count model, at count scale
/// `s = lr_analog · epochs`:
///
/// * GA subtracts `s` from every forget event count (floored at 0).
/// * GD does GA and adds `s` to every retain event count.
/// * KL does GA and then restores every retain context to `model`'s counts.
/// * PO adds `s` to the events of `idk_response` after each forget hint and
///   to every retain event count.
///
/// `lr_analog = 0` returns an unchanged copy. Tokens of `idk_response` that
/// are missing from the vocabulary are added.
pub fn count_unlearn<T: Real>(
    model: &NGramLM<T>,
    batch: &UnlearningBatch,
    hp: &UnlearnHyperparams<T>,
    method: UnlearnMethod,
    idk_response: &str,
) -> Result<NGramLM<T>, UnlearnError> {
    if hp.epochs == 0 || !(hp.lr_analog >= T::zero()) || !hp.lr_analog.is_finite() {
        return Err(UnlearnError::InvalidHyperparams(format!(
            "need lr_analog >= 0 and epochs >= 1, got {} and {}",
            hp.lr_analog, hp.epochs
        )));
    }
    let mut out = model.clone();
    let s = hp.scale();
    if s == T::zero() {
        return Ok(out);
    }
    if matches!(method, UnlearnMethod::Po) {
        if idk_response.split_whitespace().next().is_none() {
            return Err(UnlearnError::EmptyIdk);
        }
        out.extend_vocab(idk_response);
    }
    let encode = |lm: &NGramLM<T>, ex: &Example| encode_example(lm.vocab(), ex);
    match method {
        UnlearnMethod::Ga | UnlearnMethod::Gd | UnlearnMethod::Kl => {
            for ex in &batch.forget {
                let (p, t) = encode(&out, ex);
                out.add_sequence(&p, &t, -s);
            }
        }
        UnlearnMethod::Po => {
            let idk = out.vocab().encode(idk_response);
            for ex in &batch.forget {
                let p = out.vocab().encode_tokens(&ex.hint);
                out.add_sequence(&p, &idk, s);
            }
        }
    }
    match method {
        UnlearnMethod::Ga => {}
        UnlearnMethod::Gd | UnlearnMethod::Po => {
            for ex in &batch.retain {
                let (p, t) = encode(&out, ex);
                out.add_sequence(&p, &t, s);
            }
        }
        UnlearnMethod::Kl => {
            for ex in &batch.retain {
                let (p, t) = encode(&out, ex);
                for (ctx, _) in out.events(&p, &t) {
                    let restored = model.context_counts(&ctx).cloned();
                    out.set_context(ctx, restored);
                }
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{Document, Domain};

    fn ex(id: &str, hint: &str, truth: &str) -> Example {
        Example {
            doc_id: id.into(),
            hint: hint.split_whitespace().map(String::from).collect(),
            ground_truth: truth.split_whitespace().map(String::from).collect(),
            full_text: format!("{hint} {truth}"),
        }
    }

    fn setup() -> (NGramLM<f64>, UnlearningBatch) {
        let docs = [
            Document::new("f", Domain::News, "a b c d e"),
            Document::new("r", Domain::News, "p q r s t"),
        ];
        let lm = NGramLM::train(&docs, 2, 0.1).unwrap().finetune(&docs[..1], 3).unwrap();
        let batch = UnlearningBatch::new(vec![ex("f", "a b", "c d e")], vec![ex("r", "p q", "r s t")]).unwrap();
        (lm, batch)
    }

    #[test]
    fn overlap_rejected() {
        assert!(UnlearningBatch::new(vec![ex("x", "a", "b")], vec![ex("x", "a", "b")]).is_err());
    }

    #[test]
    fn ga_removes_forget_counts_only() {
        let (lm, batch) = setup();
        let hp = UnlearnHyperparams { lr_analog: 1.0, epochs: 4 };
        let out = count_unlearn(&lm, &batch, &hp, UnlearnMethod::Ga, DEFAULT_IDK_RESPONSE).unwrap();
        let v = out.vocab();
        let id = |w| v.id(w).unwrap();
        assert_eq!(out.count(&[id("c")], id("d")), 0.0);
        assert_eq!(out.count(&[id("a")], id("b")), 4.0);
        assert_eq!(out.count(&[id("r")], id("s")), 1.0);
    }

    #[test]
    fn zero_lr_is_identity() {
        let (lm, batch) = setup();
        let hp = UnlearnHyperparams { lr_analog: 0.0, epochs: 1 };
        for m in UnlearnMethod::ALL {
            assert_eq!(count_unlearn(&lm, &batch, &hp, m, DEFAULT_IDK_RESPONSE).unwrap(), lm);
        }
    }

    #[test]
    fn kl_restores_retain_contexts() {
        let (lm, batch) = setup();
        let hp = UnlearnHyperparams::default();
        let out = count_unlearn(&lm, &batch, &hp, UnlearnMethod::Kl, DEFAULT_IDK_RESPONSE).unwrap();
        assert!(retain_kl::<f64, _, _>(&out, &lm, &batch).unwrap().abs() < 1e-15);
    }

    #[test]
    fn po_teaches_idk() {
        let (lm, batch) = setup();
        let hp = UnlearnHyperparams { lr_analog: 2.0, epochs: 3 };
        let out = count_unlearn(&lm, &batch, &hp, UnlearnMethod::Po, DEFAULT_IDK_RESPONSE).unwrap();
        let i = out.vocab().id("I").unwrap();
        let b = out.vocab().id("b").unwrap();
        assert_eq!(out.count(&[b], i), 6.0);
    }

    #[test]
    fn error_cases() {
        let (lm, batch) = setup();
        let empty = UnlearningBatch { forget: vec![], retain: batch.retain.clone() };
        assert!(matches!(loss_ga::<f64, _>(&lm, &empty), Err(UnlearnError::EmptyForget)));
        let no_retain = UnlearningBatch { forget: batch.forget.clone(), retain: vec![] };
        assert!(matches!(loss_gd::<f64, _>(&lm, &no_retain), Err(UnlearnError::EmptyRetain)));
        assert!(matches!(loss_po::<f64, _>(&lm, &batch, &[]), Err(UnlearnError::EmptyIdk)));
        let other = NGramLM::<f64>::train(&[Document::new("z", Domain::News, "z y")], 2, 0.1).unwrap();
        assert!(matches!(loss_kl::<f64, _, _>(&lm, &other, &batch), Err(UnlearnError::VocabMismatch)));
    }
}
