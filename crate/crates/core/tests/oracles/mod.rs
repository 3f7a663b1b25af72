//! Independent reference implementations, written for clarity rather than
//! speed. Shared by the core test suites and the acceptance suite.
#![allow(dead_code)]

use std::collections::{BTreeSet, HashMap};

/// Longest common subsequence by enumerating every subsequence of the
/// shorter input (at most 2^len of them).
pub fn lcs_brute<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    let (short, long) = if a.len() <= b.len() { (a, b) } else { (b, a) };
    assert!(short.len() <= 16, "oracle is exponential");
    let mut best = 0;
    for mask in 0u32..(1 << short.len()) {
        let picked: Vec<&T> = (0..short.len()).filter(|i| mask >> i & 1 == 1).map(|i| &short[i]).collect();
        if picked.len() > best && is_subsequence(&picked, long) {
            best = picked.len();
        }
    }
    best
}

fn is_subsequence<T: PartialEq>(needle: &[&T], hay: &[T]) -> bool {
    let mut it = hay.iter();
    needle.iter().all(|n| it.any(|h| h == *n))
}

/// Edit distance from its recursive definition, memoized on suffix pairs.
pub fn levenshtein_brute<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    fn go<T: PartialEq>(a: &[T], b: &[T], i: usize, j: usize, memo: &mut HashMap<(usize, usize), usize>) -> usize {
        if i == a.len() {
            return b.len() - j;
        }
        if j == b.len() {
            return a.len() - i;
        }
        if let Some(&v) = memo.get(&(i, j)) {
            return v;
        }
        let v = (go(a, b, i + 1, j, memo) + 1)
            .min(go(a, b, i, j + 1, memo) + 1)
            .min(go(a, b, i + 1, j + 1, memo) + usize::from(a[i] != b[j]));
        memo.insert((i, j), v);
        v
    }
    go(a, b, 0, 0, &mut HashMap::new())
}

/// Accumulated common spans by exhaustive search over every order-preserving
/// choice of non-overlapping shared runs longer than `min_len`.
pub fn acs_brute<T: PartialEq>(a: &[T], b: &[T], min_len: usize) -> usize {
    fn go<T: PartialEq>(a: &[T], b: &[T], min_len: usize) -> usize {
        if a.is_empty() || b.is_empty() {
            return 0;
        }
        let mut best = go(&a[1..], b, min_len).max(go(a, &b[1..], min_len));
        let mut len = 0;
        while len < a.len() && len < b.len() && a[len] == b[len] {
            len += 1;
            if len > min_len {
                best = best.max(len + go(&a[len..], &b[len..], min_len));
            }
        }
        best
    }
    go(a, b, min_len)
}

pub fn jaccard<T: Ord>(a: &BTreeSet<T>, b: &BTreeSet<T>) -> f64 {
    let union = a.union(b).count();
    if union == 0 {
        return 1.0;
    }
    a.intersection(b).count() as f64 / union as f64
}

/// Win rate by listing every comparison as a `(method, outcome)` pair.
/// `lower_better[k]` gives each metric's direction.
pub fn win_rate_brute(values: &[Vec<Vec<Option<f64>>>], lower_better: &[bool]) -> Vec<Option<f64>> {
    let m = values.len();
    let mut outcomes: Vec<Vec<f64>> = vec![Vec::new(); m];
    for a in 0..m {
        for b in 0..m {
            if a == b {
                continue;
            }
            for e in 0..values[a].len() {
                for (k, &lower) in lower_better.iter().enumerate() {
                    if let (Some(x), Some(y)) = (values[a][e][k], values[b][e][k]) {
                        let o = if x == y {
                            0.5
                        } else if (x < y) == lower {
                            1.0
                        } else {
                            0.0
                        };
                        outcomes[a].push(o);
                    }
                }
            }
        }
    }
    outcomes
        .into_iter()
        .map(|o| (!o.is_empty()).then(|| o.iter().sum::<f64>() / o.len() as f64))
        .collect()
}

/// Cosine similarity with plain loops; 0 when either side is all zeros.
pub fn cosine_dense(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        dot / (na * nb)
    }
}

/// Every window of `n` consecutive items joined by spaces.
pub fn windows(words: &[String], n: usize) -> Vec<String> {
    if words.len() < n {
        return Vec::new();
    }
    words.windows(n).map(|w| w.join(" ")).collect()
}
