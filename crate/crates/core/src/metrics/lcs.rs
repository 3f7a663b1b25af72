use super::normalize::{normalize_chars, normalize_words};

/// Longest-common-subsequence length with a single rolling row sized by the
/// shorter input.
pub fn lcs_len<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    let (long, short) = if a.len() >= b.len() { (a, b) } else { (b, a) };
    if short.is_empty() {
        return 0;
    }
    let mut row = vec![0usize; short.len() + 1];
    for x in long {
        let mut diag = 0;
        for (j, y) in short.iter().enumerate() {
            let up = row[j + 1];
            row[j + 1] = if x == y { diag + 1 } else { up.max(row[j]) };
            diag = up;
        }
    }
    row[short.len()]
}

/// Character-level LCS over [`normalize_chars`] of both inputs.
pub fn lcs_char_len(gen: &str, truth: &str) -> usize {
    let a: Vec<char> = normalize_chars(gen).chars().collect();
    let b: Vec<char> = normalize_chars(truth).chars().collect();
    lcs_len(&a, &b)
}

/// Word-level LCS over [`normalize_words`] of both inputs.
pub fn lcs_word_len(gen: &str, truth: &str) -> usize {
    lcs_len(&normalize_words(gen), &normalize_words(truth))
}
