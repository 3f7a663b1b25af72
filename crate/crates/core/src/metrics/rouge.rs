use std::collections::HashMap;

use super::lcs::lcs_len;
use super::normalize::normalize_words;
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RougeVariant {
    Rouge1,
    RougeL,
}

fn counts(words: &[String]) -> HashMap<&str, usize> {
    let mut m = HashMap::new();
    for w in words {
        *m.entry(w.as_str()).or_insert(0) += 1;
    }
    m
}

fn clipped_overlap(a: &[String], b: &[String]) -> usize {
    let ca = counts(a);
    counts(b)
        .into_iter()
        .map(|(w, n)| n.min(ca.get(w).copied().unwrap_or(0)))
        .sum()
}

/// ROUGE recall of `gen` against `truth` over normalized words. Empty truth
/// gives 0.
pub fn rouge_recall<T: Real>(gen: &str, truth: &str, variant: RougeVariant) -> T {
    let g = normalize_words(gen);
    let t = normalize_words(truth);
    if t.is_empty() {
        return T::zero();
    }
    let hit = match variant {
        RougeVariant::Rouge1 => clipped_overlap(&g, &t),
        RougeVariant::RougeL => lcs_len(&g, &t),
    };
    T::of_usize(hit) / T::of_usize(t.len())
}

fn squad_tokens(s: &str) -> Vec<String> {
    normalize_words(s)
        .into_iter()
        .filter(|w| !matches!(w.as_str(), "a" | "an" | "the"))
        .collect()
}

/// Token-level F1 with SQuAD-style normalization (lowercase, no punctuation,
/// no articles).
pub fn qa_f1<T: Real>(prediction: &str, gold: &str) -> T {
    let p = squad_tokens(prediction);
    let g = squad_tokens(gold);
    match (p.is_empty(), g.is_empty()) {
        (true, true) => return T::one(),
        (true, false) | (false, true) => return T::zero(),
        _ => {}
    }
    let common = clipped_overlap(&p, &g);
    if common == 0 {
        return T::zero();
    }
    let precision = T::of_usize(common) / T::of_usize(p.len());
    let recall = T::of_usize(common) / T::of_usize(g.len());
    let two = T::one() + T::one();
    two * precision * recall / (precision + recall)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rouge_identity_and_disjoint() {
        for v in [RougeVariant::Rouge1, RougeVariant::RougeL] {
            assert_eq!(rouge_recall::<f64>("a b c", "a b c", v), 1.0);
            assert_eq!(rouge_recall::<f64>("a b c", "x y z", v), 0.0);
            assert_eq!(rouge_recall::<f64>("a b c", "", v), 0.0);
        }
    }

    #[test]
    fn rouge_l_hand_checked() {
        assert_eq!(rouge_recall::<f64>("a b c", "a x c y", RougeVariant::RougeL), 0.5);
    }

    #[test]
    fn rouge1_clips_counts() {
        // truth has one "the"; gen repeats it, still one hit.
        let r: f64 = rouge_recall("the the the", "the cat", RougeVariant::Rouge1);
        assert_eq!(r, 0.5);
    }

    #[test]
    fn f1_examples() {
        assert_eq!(qa_f1::<f64>("Steve Jobs", "steve jobs"), 1.0);
        assert_eq!(qa_f1::<f64>("bill gates", "steve jobs"), 0.0);
        assert!((qa_f1::<f64>("steve jobs was", "steve jobs") - 0.8).abs() < 1e-12);
        assert_eq!(qa_f1::<f64>("", ""), 1.0);
        assert_eq!(qa_f1::<f64>("the", "an"), 1.0);
        assert_eq!(qa_f1::<f64>("", "jobs"), 0.0);
    }
}
