use std::collections::HashMap;

use crate::scalar::Real;
use crate::toylm::{LanguageModel, NGramLM, TokenId, Vocab};

pub const DEFAULT_MIN_MATCH: usize = 3;

/// An n-gram model mixed with an induction-style copy component over a fixed
/// context: `p = (1 − λ)·p_base + λ·onehot(context[j + 1])`, where `j` ends
/// the longest suffix of the history (at least `min_match` tokens) that
/// occurs in the context and has a following token. Ties go to the earliest
/// `j`. Without such a match the base distribution is returned unchanged.
#[derive(Debug, Clone)]
pub struct CopyAugmentedLM<'a, T> {
    base: &'a NGramLM<T>,
    copy_weight: T,
    min_match: usize,
    context: Vec<TokenId>,
    positions: HashMap<TokenId, Vec<usize>>,
}

impl<'a, T: Real> CopyAugmentedLM<'a, T> {
    /// `copy_weight` is clamped into `[0, 1]`; `min_match` is at least 1.
    pub fn new(base: &'a NGramLM<T>, copy_weight: T, min_match: usize, context: Vec<TokenId>) -> Self {
        let mut positions: HashMap<TokenId, Vec<usize>> = HashMap::new();
        for (i, &t) in context.iter().enumerate().take(context.len().saturating_sub(1)) {
            positions.entry(t).or_default().push(i);
        }
        Self {
            base,
            copy_weight: copy_weight.max(T::zero()).min(T::one()),
            min_match: min_match.max(1),
            context,
            positions,
        }
    }

    pub fn base(&self) -> &NGramLM<T> {
        self.base
    }

    pub fn copy_weight(&self) -> T {
        self.copy_weight
    }

    pub fn context(&self) -> &[TokenId] {
        &self.context
    }

    /// `(j, match_len)` of the copy source for `history`, if any.
    pub fn copy_match(&self, history: &[TokenId]) -> Option<(usize, usize)> {
        let last = history.last()?;
        let mut best: Option<(usize, usize)> = None;
        for &j in self.positions.get(last)? {
            let mut len = 1;
            while len <= j && len < history.len() && self.context[j - len] == history[history.len() - 1 - len] {
                len += 1;
            }
            if best.is_none_or(|(_, l)| len > l) {
                best = Some((j, len));
            }
        }
        best.filter(|&(_, l)| l >= self.min_match)
    }

    /// The token the copy component would emit.
    pub fn copy_target(&self, history: &[TokenId]) -> Option<TokenId> {
        self.copy_match(history).map(|(j, _)| self.context[j + 1])
    }
}

impl<T: Real> LanguageModel<T> for CopyAugmentedLM<'_, T> {
    fn vocab(&self) -> &Vocab {
        self.base.vocab()
    }

    fn probs(&self, history: &[TokenId]) -> Vec<T> {
        let mut p = self.base.probs(history);
        if self.copy_weight > T::zero() {
            if let Some(t) = self.copy_target(history) {
                if !Vocab::is_reserved(t) && t.index() < p.len() {
                    let keep = T::one() - self.copy_weight;
                    for x in p.iter_mut() {
                        *x = *x * keep;
                    }
                    p[t.index()] = p[t.index()] + self.copy_weight;
                }
            }
        }
        p
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{Document, Domain};

    fn lm() -> NGramLM<f64> {
        let d = Document::new("d", Domain::News, "a b c d e f a b x");
        NGramLM::train(&[d], 2, 0.1).unwrap()
    }

    #[test]
    fn longest_match_then_earliest() {
        let base = lm();
        let v = base.vocab();
        let ctx = v.encode("a b c d e f a b x");
        let m = CopyAugmentedLM::new(&base, 1.0, 2, ctx);
        // "a b" occurs at 0 and 6; the earliest wins
        assert_eq!(m.copy_target(&v.encode("a b")), v.id("c"));
        // "f a b" only ends at 7
        assert_eq!(m.copy_target(&v.encode("f a b")), v.id("x"));
        // too short
        assert_eq!(m.copy_target(&v.encode("b")), None);
    }

    #[test]
    fn lambda_zero_is_base() {
        let base = lm();
        let v = base.vocab();
        let m = CopyAugmentedLM::new(&base, 0.0, 1, v.encode("a b c"));
        let h = v.encode("a b");
        assert_eq!(m.probs(&h), base.probs(&h));
    }

    #[test]
    fn last_context_token_is_not_a_source() {
        let base = lm();
        let v = base.vocab();
        let m = CopyAugmentedLM::new(&base, 1.0, 1, v.encode("q a b"));
        assert_eq!(m.copy_target(&v.encode("b")), None);
    }
}
