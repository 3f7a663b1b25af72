//! Accumulated common spans: the total length of order-preserving,
//! non-overlapping contiguous word runs shared by two texts, counting only
//! runs longer than a threshold.

use super::normalize::normalize_words;

/// Default run-length threshold; only runs of strictly more words count.
pub const DEFAULT_ACS_MIN_LEN: usize = 3;

/// Maximum number of covered positions over all ways of pairing
/// non-overlapping contiguous runs of `a` with equal runs of `b`, in order,
/// where every run is longer than `min_len`.
///
/// `best[i][j]` is the optimum for prefixes `a[..i]`, `b[..j]`; `run[i][j]` is
/// the length of the common suffix of those prefixes.
pub fn accumulated_common_spans<T: PartialEq>(a: &[T], b: &[T], min_len: usize) -> usize {
    let (m, n) = (a.len(), b.len());
    if m == 0 || n == 0 {
        return 0;
    }
    let w = n + 1;
    let mut best = vec![0usize; (m + 1) * w];
    let mut run = vec![0usize; (m + 1) * w];
    for i in 1..=m {
        for j in 1..=n {
            let r = if a[i - 1] == b[j - 1] { run[(i - 1) * w + j - 1] + 1 } else { 0 };
            run[i * w + j] = r;
            let mut v = best[(i - 1) * w + j].max(best[i * w + j - 1]);
            for len in (min_len + 1)..=r {
                v = v.max(best[(i - len) * w + (j - len)] + len);
            }
            best[i * w + j] = v;
        }
    }
    best[m * w + n]
}

/// Word-level ACS over [`normalize_words`] of both inputs.
pub fn acs_word_len(gen: &str, truth: &str, min_len: usize) -> usize {
    accumulated_common_spans(&normalize_words(gen), &normalize_words(truth), min_len)
}
