//! Synthetic corpora with unique n-gram contexts.
//!
//! Every run of `context_len` consecutive tokens (including the `<bos>`
//! padded openings, except the all-padding one) is followed by a token at
//! most once across the whole corpus, so a count model trained on it has
//! exactly one continuation per context.

use std::collections::HashSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::corpus::{Document, Domain, QaPair};

const SYLLABLES: [&str; 16] = ["ba", "ke", "li", "mo", "nu", "ra", "se", "ti", "vo", "zu", "da", "fe", "gi", "ho", "ju", "pa"];

/// Question template. The cue words are quoted, so the question never
/// repeats a run of document tokens.
pub const QUESTION_PREFIX: &str = "What follows";
pub const QUESTION_SUFFIX: &str = "?";

#[derive(Debug, Clone, PartialEq)]
pub struct TestbedConfig {
    pub n_block: usize,
    pub n_retain: usize,
    pub n_in_domain: usize,
    pub doc_words: usize,
    pub lexicon_size: usize,
    pub context_len: usize,
    pub questions_per_doc: usize,
    pub summary_words: usize,
    pub domain: Domain,
    pub seed: u64,
}

impl Default for TestbedConfig {
    fn default() -> Self {
        Self {
            n_block: 20,
            n_retain: 20,
            n_in_domain: 20,
            doc_words: 320,
            lexicon_size: 4096,
            context_len: 3,
            questions_per_doc: 2,
            summary_words: 40,
            domain: Domain::News,
            seed: 0,
        }
    }
}

/// The `i`-th pseudo-word: base-16 syllable digits, at least three.
pub fn pseudo_word(mut i: usize) -> String {
    let mut digits = Vec::new();
    loop {
        digits.push(SYLLABLES[i % 16]);
        i /= 16;
        if i == 0 && digits.len() >= 3 {
            break;
        }
    }
    digits.concat()
}

/// Documents ordered blocklisted, retain, in-domain, with ascending
/// `rank_score` so that [`crate::corpus::split_corpus`] recovers the three
/// groups. Ids are `b…`, `r…` and `i…`.
pub fn generate_corpus(cfg: &TestbedConfig) -> Vec<Document> {
    assert!(cfg.lexicon_size >= 2 && cfg.context_len >= 1 && cfg.doc_words > cfg.context_len);
    let lexicon: Vec<String> = (0..cfg.lexicon_size).map(pseudo_word).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut seen: HashSet<Vec<usize>> = HashSet::new();
    let groups = [("b", cfg.n_block), ("r", cfg.n_retain), ("i", cfg.n_in_domain)];
    let mut docs = Vec::new();
    let mut rank = 0.0;
    for (prefix, n) in groups {
        for k in 0..n {
            let words = unique_sequence(cfg, &mut rng, &mut seen);
            let toks: Vec<&str> = words.iter().map(|&w| lexicon[w].as_str()).collect();
            let mut d = Document::new(format!("{prefix}{k:04}"), cfg.domain, toks.join(" "));
            d.rank_score = Some(rank);
            rank += 1.0;
            d.questions = make_questions(cfg, &toks, &mut rng);
            d.reference_summary = Some(toks[..cfg.summary_words.min(toks.len())].join(" "));
            docs.push(d);
        }
    }
    docs
}

fn unique_sequence(cfg: &TestbedConfig, rng: &mut ChaCha8Rng, seen: &mut HashSet<Vec<usize>>) -> Vec<usize> {
    // usize::MAX stands in for <bos> padding
    let c = cfg.context_len;
    let mut seq = vec![usize::MAX; c];
    while seq.len() < c + cfg.doc_words {
        let w = rng.random_range(0..cfg.lexicon_size);
        let mut key = seq[seq.len() + 1 - c..].to_vec();
        debug_assert_eq!(key.len(), c - 1);
        key.push(w);
        if seen.insert(key) {
            seq.push(w);
        }
    }
    seq.split_off(c)
}

fn make_questions(cfg: &TestbedConfig, toks: &[&str], rng: &mut ChaCha8Rng) -> Vec<QaPair> {
    let cue = cfg.context_len;
    (0..cfg.questions_per_doc)
        .filter_map(|_| {
            if toks.len() < cue + 3 {
                return None;
            }
            let len = rng.random_range(1..=3);
            let at = rng.random_range(cue..=toks.len() - len);
            Some(QaPair {
                question: format!("{QUESTION_PREFIX} \"{}\" {QUESTION_SUFFIX}", toks[at - cue..at].join(" ")),
                answer: toks[at..at + len].join(" "),
            })
        })
        .collect()
}
