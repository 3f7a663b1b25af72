use std::ops::Index;

use crate::scalar::{log_sum_exp, Real};
use crate::toylm::TokenId;

/// Unnormalized per-token scores indexed by token id.
#[derive(Debug, Clone, PartialEq)]
pub struct LogitVector<T>(Vec<T>);

impl<T: Real> LogitVector<T> {
    pub fn new(scores: Vec<T>) -> Self {
        Self(scores)
    }

    /// Log of a probability vector, with zeros floored to keep values finite.
    pub fn from_probs(probs: &[T]) -> Self {
        Self(probs.iter().map(|&p| p.ln_floor()).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[T] {
        &self.0
    }

    pub fn as_mut_slice(&mut self) -> &mut [T] {
        &mut self.0
    }

    pub fn into_vec(self) -> Vec<T> {
        self.0
    }

    /// Highest-scoring id, lowest id on ties.
    pub fn argmax(&self) -> TokenId {
        let mut best = 0;
        for (i, &v) in self.0.iter().enumerate().skip(1) {
            if v > self.0[best] {
                best = i;
            }
        }
        TokenId(best as u32)
    }

    /// All ids by descending score, ties by ascending id.
    pub fn ranked(&self) -> Vec<TokenId> {
        let mut ids: Vec<u32> = (0..self.0.len() as u32).collect();
        ids.sort_by(|&a, &b| {
            self.0[b as usize]
                .partial_cmp(&self.0[a as usize])
                .unwrap_or(std::cmp::Ordering::Equal)
                .then(a.cmp(&b))
        });
        ids.into_iter().map(TokenId).collect()
    }

    /// The `k` highest-scoring ids in rank order, in one pass.
    pub fn top_k(&self, k: usize) -> Vec<TokenId> {
        let k = k.min(self.0.len());
        if k == 0 {
            return Vec::new();
        }
        // (score, id) kept sorted best-first; a later id never beats an equal score
        let mut best: Vec<(T, u32)> = Vec::with_capacity(k + 1);
        for (i, &v) in self.0.iter().enumerate() {
            if best.len() == k && !(v > best[k - 1].0) {
                continue;
            }
            let at = best.partition_point(|&(b, _)| b >= v);
            best.insert(at, (v, i as u32));
            best.truncate(k);
        }
        best.into_iter().map(|(_, i)| TokenId(i)).collect()
    }

    pub fn log_softmax(&self) -> Vec<T> {
        let lse = log_sum_exp(&self.0);
        self.0.iter().map(|&x| x - lse).collect()
    }
}

impl<T> Index<TokenId> for LogitVector<T> {
    type Output = T;

    fn index(&self, id: TokenId) -> &T {
        &self.0[id.index()]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ties_break_to_lowest_id() {
        let l = LogitVector::new(vec![0.0f64, 2.0, 2.0, 1.0]);
        assert_eq!(l.argmax(), TokenId(1));
        assert_eq!(l.ranked(), vec![TokenId(1), TokenId(2), TokenId(3), TokenId(0)]);
        assert_eq!(l.top_k(2), vec![TokenId(1), TokenId(2)]);
        assert_eq!(l.top_k(9), l.ranked());
    }

    #[test]
    fn from_probs_normalizes_back() {
        let l = LogitVector::from_probs(&[0.25f64, 0.75, 0.0]);
        let p: f64 = l.as_slice().iter().map(|x| x.exp()).sum();
        assert!((p - 1.0).abs() < 1e-12);
        assert!(l.as_slice()[2].is_finite());
    }
}
