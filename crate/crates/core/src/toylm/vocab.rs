use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::metrics::normalize_token;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TokenId(pub u32);

impl TokenId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for TokenId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

pub const BOS: TokenId = TokenId(0);
pub const EOS: TokenId = TokenId(1);
pub const UNK: TokenId = TokenId(2);
/// Number of reserved ids at the start of every vocabulary. Reserved tokens
/// are never predicted.
pub const RESERVED: usize = 3;
const RESERVED_TEXT: [&str; RESERVED] = ["<bos>", "<eos>", "<unk>"];

/// Whitespace-token vocabulary. Ids are assigned in first-seen order after
/// the reserved `<bos>`, `<eos>`, `<unk>`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocab {
    tokens: Vec<String>,
    index: HashMap<String, TokenId>,
    canonical: Vec<Option<String>>,
}

impl Default for Vocab {
    fn default() -> Self {
        let mut v = Self { tokens: Vec::new(), index: HashMap::new(), canonical: Vec::new() };
        for t in RESERVED_TEXT {
            v.push(t.to_owned(), None);
        }
        v
    }
}

impl Vocab {
    pub fn new() -> Self {
        Self::default()
    }

    /// Rebuilds a vocabulary from its id-ordered non-reserved tokens.
    pub fn from_tokens<I: IntoIterator<Item = String>>(tokens: I) -> Self {
        let mut v = Self::new();
        for t in tokens {
            v.add(&t);
        }
        v
    }

    fn push(&mut self, tok: String, canonical: Option<String>) -> TokenId {
        let id = TokenId(self.tokens.len() as u32);
        self.index.insert(tok.clone(), id);
        self.tokens.push(tok);
        self.canonical.push(canonical);
        id
    }

    pub fn add(&mut self, tok: &str) -> TokenId {
        if let Some(&id) = self.index.get(tok) {
            return id;
        }
        self.push(tok.to_owned(), normalize_token(tok))
    }

    pub fn add_text(&mut self, text: &str) {
        for t in text.split_whitespace() {
            self.add(t);
        }
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.len() == RESERVED
    }

    /// Number of tokens that can be predicted (everything but the reserved ids).
    pub fn predictable(&self) -> usize {
        self.tokens.len() - RESERVED
    }

    pub fn is_reserved(id: TokenId) -> bool {
        id.index() < RESERVED
    }

    pub fn id(&self, tok: &str) -> Option<TokenId> {
        self.index.get(tok).copied()
    }

    pub fn token(&self, id: TokenId) -> &str {
        &self.tokens[id.index()]
    }

    /// Normalized word of a token; `None` for reserved and punctuation-only
    /// tokens.
    pub fn canonical(&self, id: TokenId) -> Option<&str> {
        self.canonical[id.index()].as_deref()
    }

    /// Non-reserved tokens in id order.
    pub fn tokens(&self) -> &[String] {
        &self.tokens[RESERVED..]
    }

    pub fn encode(&self, text: &str) -> Vec<TokenId> {
        text.split_whitespace().map(|t| self.id(t).unwrap_or(UNK)).collect()
    }

    pub fn encode_tokens<S: AsRef<str>>(&self, toks: &[S]) -> Vec<TokenId> {
        toks.iter().map(|t| self.id(t.as_ref()).unwrap_or(UNK)).collect()
    }

    pub fn decode(&self, ids: &[TokenId]) -> String {
        ids.iter().map(|&i| self.token(i)).collect::<Vec<_>>().join(" ")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reserved_ids_and_first_seen_order() {
        let mut v = Vocab::new();
        v.add_text("b a b c");
        assert_eq!(v.id("<bos>"), Some(BOS));
        assert_eq!(v.id("b"), Some(TokenId(3)));
        assert_eq!(v.id("a"), Some(TokenId(4)));
        assert_eq!(v.predictable(), 3);
        assert_eq!(v.encode("a zz"), vec![TokenId(4), UNK]);
        assert_eq!(v.decode(&[TokenId(3), TokenId(5)]), "b c");
    }

    #[test]
    fn canonical_forms() {
        let mut v = Vocab::new();
        let a = v.add("Hello,");
        let b = v.add("--");
        assert_eq!(v.canonical(a), Some("hello"));
        assert_eq!(v.canonical(b), None);
        assert_eq!(v.canonical(BOS), None);
    }

    #[test]
    fn rebuild_from_tokens_is_identical() {
        let mut v = Vocab::new();
        v.add_text("x y z y");
        assert_eq!(Vocab::from_tokens(v.tokens().to_vec()), v);
    }
}
