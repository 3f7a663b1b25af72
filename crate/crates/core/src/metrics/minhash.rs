//! MinHash estimate of the Jaccard similarity between word 3-gram sets.

use std::collections::BTreeSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::normalize::normalize_words;
use crate::hashing::xxh64;
use crate::scalar::Real;

const MERSENNE_61: u64 = (1 << 61) - 1;

pub const DEFAULT_NUM_PERM: usize = 128;
pub const SHINGLE_LEN: usize = 3;

/// A family of `num_perm` seeded universal hash functions
/// `x -> (a * h(x) + b) mod (2^61 - 1)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MinHasher {
    coeffs: Vec<(u64, u64)>,
}

impl MinHasher {
    pub fn new(num_perm: usize, seed: u64) -> Self {
        assert!(num_perm >= 1, "num_perm must be at least 1");
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let coeffs = (0..num_perm)
            .map(|_| (rng.random_range(1..MERSENNE_61), rng.random_range(0..MERSENNE_61)))
            .collect();
        Self { coeffs }
    }

    pub fn num_perm(&self) -> usize {
        self.coeffs.len()
    }

    /// Signature of a set of items; `None` for the empty set.
    pub fn signature<'a, I>(&self, items: I) -> Option<Vec<u64>>
    where
        I: IntoIterator<Item = &'a str>,
    {
        let mut sig = vec![u64::MAX; self.coeffs.len()];
        let mut any = false;
        for item in items {
            any = true;
            let h = xxh64(0, item.as_bytes()) % MERSENNE_61;
            for (slot, &(a, b)) in sig.iter_mut().zip(&self.coeffs) {
                let v = ((a as u128 * h as u128 + b as u128) % MERSENNE_61 as u128) as u64;
                if v < *slot {
                    *slot = v;
                }
            }
        }
        any.then_some(sig)
    }

    /// Fraction of agreeing signature slots.
    pub fn estimate<T: Real>(a: &[u64], b: &[u64]) -> T {
        assert_eq!(a.len(), b.len(), "signatures from different hashers");
        let eq = a.iter().zip(b).filter(|(x, y)| x == y).count();
        T::of_usize(eq) / T::of_usize(a.len())
    }
}

/// Distinct word n-grams, each joined with single spaces.
pub fn word_shingles(words: &[String], n: usize) -> BTreeSet<String> {
    if words.len() < n {
        return BTreeSet::new();
    }
    words.windows(n).map(|w| w.join(" ")).collect()
}

/// MinHash similarity of the normalized word 3-gram sets of two texts.
///
/// Both texts empty gives 1; otherwise a side with fewer than three words
/// gives 0.
pub fn minhash_sim<T: Real>(gen: &str, truth: &str, hasher: &MinHasher) -> T {
    let (gw, tw) = (normalize_words(gen), normalize_words(truth));
    if gw.is_empty() && tw.is_empty() {
        return T::one();
    }
    if gw.len() < SHINGLE_LEN || tw.len() < SHINGLE_LEN {
        return T::zero();
    }
    let ga = word_shingles(&gw, SHINGLE_LEN);
    let ta = word_shingles(&tw, SHINGLE_LEN);
    match (
        hasher.signature(ga.iter().map(String::as_str)),
        hasher.signature(ta.iter().map(String::as_str)),
    ) {
        (Some(a), Some(b)) => MinHasher::estimate(&a, &b),
        _ => T::zero(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_texts_are_one() {
        let h = MinHasher::new(DEFAULT_NUM_PERM, 1);
        let t = "the quick brown fox jumps over the lazy dog";
        assert_eq!(minhash_sim::<f64>(t, t, &h), 1.0);
    }

    #[test]
    fn disjoint_texts_are_near_zero() {
        let h = MinHasher::new(DEFAULT_NUM_PERM, 1);
        let v: f64 = minhash_sim("a b c d e f", "g h i j k l", &h);
        assert!(v < 0.05, "{v}");
    }

    #[test]
    fn short_sides() {
        let h = MinHasher::new(16, 1);
        assert_eq!(minhash_sim::<f64>("", "", &h), 1.0);
        assert_eq!(minhash_sim::<f64>("a b", "a b", &h), 0.0);
        assert_eq!(minhash_sim::<f64>("", "a b c", &h), 0.0);
    }

    #[test]
    fn deterministic_given_seed() {
        let a = MinHasher::new(64, 42);
        let b = MinHasher::new(64, 42);
        assert_eq!(a, b);
        assert_ne!(a, MinHasher::new(64, 43));
    }
}
