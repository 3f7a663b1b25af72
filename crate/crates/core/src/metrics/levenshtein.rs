/// Character edit distance over lowercased inputs; whitespace and punctuation
/// are kept. Rolling single-row dynamic program.
pub fn levenshtein(gen: &str, truth: &str) -> usize {
    let a: Vec<char> = gen.to_lowercase().chars().collect();
    let b: Vec<char> = truth.to_lowercase().chars().collect();
    edit_distance(&a, &b)
}

pub fn edit_distance<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    let (long, short) = if a.len() >= b.len() { (a, b) } else { (b, a) };
    let mut row: Vec<usize> = (0..=short.len()).collect();
    for (i, x) in long.iter().enumerate() {
        let mut diag = row[0];
        row[0] = i + 1;
        for (j, y) in short.iter().enumerate() {
            let sub = diag + usize::from(x != y);
            diag = row[j + 1];
            row[j + 1] = sub.min(row[j] + 1).min(row[j + 1] + 1);
        }
    }
    row[short.len()]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn textbook_cases() {
        assert_eq!(levenshtein("kitten", "sitting"), 3);
        assert_eq!(levenshtein("", "abc"), 3);
        assert_eq!(levenshtein("Same text.", "same text."), 0);
    }

    #[test]
    fn punctuation_counts() {
        assert_eq!(levenshtein("a, b", "a b"), 1);
    }
}
