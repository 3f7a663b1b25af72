use unicode_general_category::{get_general_category, GeneralCategory};

/// True for characters in any Unicode punctuation category (`Pc`, `Pd`, `Ps`,
/// `Pe`, `Pi`, `Pf`, `Po`).
pub fn is_punctuation(c: char) -> bool {
    use GeneralCategory::*;
    matches!(
        get_general_category(c),
        ConnectorPunctuation
            | DashPunctuation
            | OpenPunctuation
            | ClosePunctuation
            | InitialPunctuation
            | FinalPunctuation
            | OtherPunctuation
    )
}

/// Lowercases and drops every whitespace and punctuation character.
pub fn normalize_chars(s: &str) -> String {
    s.to_lowercase()
        .chars()
        .filter(|&c| !c.is_whitespace() && !is_punctuation(c))
        .collect()
}

/// Lowercases, drops punctuation, then splits on whitespace.
pub fn normalize_words(s: &str) -> Vec<String> {
    let cleaned: String = s
        .to_lowercase()
        .chars()
        .filter(|&c| !is_punctuation(c))
        .collect();
    cleaned.split_whitespace().map(str::to_owned).collect()
}

/// Canonical form of a single whitespace-free token, or `None` when the token
/// is pure punctuation. Concatenating the canonical forms of a text's tokens
/// gives exactly `normalize_words` of that text.
pub fn normalize_token(token: &str) -> Option<String> {
    let w: String = token
        .to_lowercase()
        .chars()
        .filter(|&c| !is_punctuation(c) && !c.is_whitespace())
        .collect();
    (!w.is_empty()).then_some(w)
}
