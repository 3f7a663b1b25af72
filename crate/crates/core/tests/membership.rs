mod oracles;

use std::collections::HashSet;

use takedown::corpus::{Document, Domain};
use takedown::membership::*;
use takedown::metrics::normalize_words;

fn doc(id: &str, text: &str) -> Document {
    Document::new(id, Domain::News, text)
}

#[test]
fn optimal_params_closed_form() {
    // m = ceil(1000 * ln(100) / ln(2)^2) = ceil(9585.06) ; h = round(9.586 * ln 2) = 7
    let (m, h) = optimal_params(1000, 0.01);
    assert_eq!(m, 9586);
    assert_eq!(h, 7);
}

#[test]
fn no_false_negatives_on_every_ngram() {
    let words: Vec<String> = (0..300).map(|i| format!("w{}", (i * 7919) % 97)).collect();
    let docs = vec![doc("a", &words[..150].join(" ")), doc("b", &words[150..].join(" "))];
    for n in NGRAM_GRID {
        let f = BloomFilter::build(&docs, n, 0.01).unwrap();
        let exact = ExactNGramSet::build(&docs, n);
        for d in &docs {
            let w = normalize_words(&d.text);
            for g in oracles::windows(&w, n) {
                assert!(f.contains_canonical(&g));
                assert!(exact.contains_canonical(&g));
                let parts: Vec<&str> = g.split(' ').collect();
                assert!(f.contains(&parts).unwrap());
            }
        }
    }
}

#[test]
fn empirical_false_positive_rate_near_target() {
    let text: Vec<String> = (0..5000).map(|i| format!("m{i}")).collect();
    let docs = vec![doc("a", &text.join(" "))];
    let f = BloomFilter::build(&docs, 1, 0.01).unwrap();
    let queries = 100_000;
    let fp = (0..queries).filter(|i| f.contains_canonical(&format!("q{i}"))).count();
    let rate = fp as f64 / queries as f64;
    assert!(rate <= 0.02, "false-positive rate {rate}");
}

#[test]
fn canonical_queries_and_arity() {
    let docs = vec![doc("a", "The quick, brown fox jumps")];
    let f = BloomFilter::build(&docs, 3, 0.001).unwrap();
    assert!(f.contains(&["the", "QUICK", "brown"]).unwrap());
    assert!(f.contains(&["quick,", "brown", "fox"]).unwrap());
    assert!(f.contains(&["a", "b"]).is_err());
    // a pure-punctuation token vanishes under normalization, so it cannot match
    assert!(!f.contains(&["quick", "--", "brown"]).unwrap());
    let store = NGramStore::Exact(ExactNGramSet::build(&docs, 3));
    assert!(store.contains(&["brown", "fox", "jumps"]).unwrap());
    assert!(!store.contains(&["fox", "brown", "jumps"]).unwrap());
}

#[test]
fn exact_set_counts_distinct_ngrams() {
    let docs = vec![doc("a", "a b a b a"), doc("b", "b a b")];
    let grams: HashSet<String> = docs.iter().flat_map(|d| canonical_ngrams(&d.text, 2)).collect();
    assert_eq!(grams.len(), 2);
    assert_eq!(ExactNGramSet::build(&docs, 2).len(), 2);
}

#[test]
fn file_round_trip_is_byte_stable() {
    let dir = tempfile::tempdir().unwrap();
    let docs = vec![doc("a", "one two three four five six seven")];
    let f = BloomFilter::build(&docs, 6, 0.001).unwrap();
    let p = dir.path().join("f.bin");
    f.save(&p).unwrap();
    let g = BloomFilter::load(&p).unwrap();
    assert_eq!(f, g);
    let p2 = dir.path().join("g.bin");
    g.save(&p2).unwrap();
    assert_eq!(std::fs::read(&p).unwrap(), std::fs::read(&p2).unwrap());
    let bytes = std::fs::read(&p).unwrap();
    assert_eq!(&bytes[..6], MAGIC);
    assert_eq!(bytes.len() as u64, 46 + f.num_bits().div_ceil(8));
}

#[test]
fn corrupt_files_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("bad.bin");
    std::fs::write(&p, b"NOTBLOOM").unwrap();
    assert!(BloomFilter::load(&p).is_err());
}
