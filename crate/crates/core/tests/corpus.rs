use std::collections::HashSet;

use takedown::corpus::*;
use takedown::testbed::{generate_corpus, pseudo_word, TestbedConfig};

#[test]
fn split_sizes_follow_rank_order() {
    let docs: Vec<Document> = (0..30)
        .map(|i| {
            let mut d = Document::new(format!("d{i}"), Domain::News, "x y z");
            d.rank_score = Some(f64::from(29 - i));
            d
        })
        .collect();
    let s = split_corpus(&docs, 10, 10).unwrap();
    assert_eq!((s.blocklisted.len(), s.retain.len(), s.in_domain.len()), (10, 10, 10));
    assert_eq!(s.blocklisted[0].id, "d29");
    assert_eq!(s.in_domain[9].id, "d0");
    assert!(split_corpus(&docs, 20, 11).is_err());
}

#[test]
fn example_windows() {
    let text: Vec<String> = (0..350).map(|i| format!("w{i}")).collect();
    let d = Document::new("a", Domain::Books, text.join(" "));
    let ex = make_example(&d, DEFAULT_HINT_LEN, DEFAULT_SPAN_LEN).unwrap();
    assert_eq!(ex.hint.len(), 100);
    assert_eq!(ex.ground_truth.len(), 200);
    assert_eq!(ex.hint[99], "w99");
    assert_eq!(ex.ground_truth[0], "w100");
    let short = Document::new("b", Domain::Books, "only three words");
    assert!(make_example(&short, 100, 200).is_err());
    let mid = Document::new("c", Domain::Books, text[..150].join(" "));
    assert_eq!(make_example(&mid, 100, 200).unwrap().ground_truth.len(), 50);
}

#[test]
fn jsonl_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let mut d = Document::new("q", Domain::News, "a b c");
    d.questions.push(QaPair { question: "What ?".into(), answer: "b".into() });
    d.reference_summary = Some("a".into());
    let p = dir.path().join("c.jsonl");
    write_corpus(&p, &[d.clone()]).unwrap();
    assert_eq!(load_corpus(&p).unwrap(), vec![d]);
    std::fs::write(&p, "{\"id\":1}\n").unwrap();
    assert!(load_corpus(&p).is_err());
}

#[test]
fn testbed_contexts_are_unique() {
    let cfg = TestbedConfig { n_block: 5, n_retain: 5, n_in_domain: 5, ..Default::default() };
    let docs = generate_corpus(&cfg);
    assert_eq!(docs.len(), 15);
    let mut seen = HashSet::new();
    for d in &docs {
        let mut toks = vec!["<bos>"; cfg.context_len];
        toks.extend(d.tokens());
        for w in toks.windows(cfg.context_len).skip(1) {
            assert!(seen.insert(w.join(" ")), "repeated context {:?}", w);
        }
        assert_eq!(d.tokens().len(), cfg.doc_words);
    }
    assert_eq!(generate_corpus(&cfg), docs);
    let words: HashSet<String> = (0..5000).map(pseudo_word).collect();
    assert_eq!(words.len(), 5000);
}

#[test]
fn testbed_questions_point_into_the_document() {
    let docs = generate_corpus(&TestbedConfig { n_block: 2, n_retain: 2, n_in_domain: 2, ..Default::default() });
    for d in &docs {
        assert_eq!(d.questions.len(), 2);
        for q in &d.questions {
            assert!(d.text.contains(&q.answer));
        }
        let summary = d.reference_summary.as_deref().unwrap();
        assert_eq!(summary.split_whitespace().count(), 40);
        assert!(d.text.starts_with(summary));
    }
}
