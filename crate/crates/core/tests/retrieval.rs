mod oracles;

use takedown::corpus::{Document, Domain};
use takedown::retrieval::*;

struct Table(Vec<(&'static str, Vec<f64>)>);

impl Embedder<f64> for Table {
    fn dim(&self) -> usize {
        2
    }
    fn embed(&self, text: &str) -> Result<Vec<f64>, RetrievalError> {
        self.0
            .iter()
            .find(|(k, _)| *k == text)
            .map(|(_, v)| v.clone())
            .ok_or_else(|| RetrievalError::External(format!("no vector for {text}")))
    }
}

#[test]
fn cosine_matches_dense_oracle() {
    let cases = [
        (vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0]),
        (vec![1.0, 2.0, 3.0], vec![-1.0, 0.5, 2.0]),
        (vec![0.0, 0.0], vec![1.0, 1.0]),
        (vec![3.0, 4.0], vec![6.0, 8.0]),
    ];
    for (a, b) in cases {
        assert!((cosine(&a, &b) - oracles::cosine_dense(&a, &b)).abs() < 1e-15);
    }
}

#[test]
fn nearest_neighbour_matches_linear_scan() {
    let emb = Table(vec![
        ("d1", vec![1.0, 0.0]),
        ("d2", vec![0.6, 0.8]),
        ("d3", vec![0.0, 1.0]),
        ("q", vec![0.5, 0.9]),
    ]);
    let mut store = VectorStore::<f64>::new(2);
    for id in &["d1", "d2", "d3"] {
        store.insert_text(*id, id, &emb).unwrap();
    }
    let q = emb.embed("q").unwrap();
    let want = ["d1", "d2", "d3"]
        .iter()
        .map(|id| (*id, 1.0 - oracles::cosine_dense(&emb.embed(id).unwrap(), &q)))
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .unwrap();
    let hit = store.query("q", &emb).unwrap().unwrap();
    assert_eq!(hit.doc_id, want.0);
    assert!((hit.distance - want.1).abs() < 1e-12);
}

#[test]
fn identical_vectors_are_distance_zero() {
    let e = HashedTrigramEmbedder::default();
    let mut store = VectorStore::<f64>::new(Embedder::<f64>::dim(&e));
    store.insert_text("a", "some words about copyright", &e).unwrap();
    let hit = store.query("some words about copyright", &e).unwrap().unwrap();
    assert_eq!(hit.distance, 0.0);
}

#[test]
fn chunks_and_source_ids() {
    let docs = vec![Document::new("doc", Domain::Books, "a b c d e")];
    let chunks = chunk_documents(&docs, 2);
    let ids: Vec<&str> = chunks.iter().map(|c| c.0.as_str()).collect();
    assert_eq!(ids, ["doc#0", "doc#1", "doc#2"]);
    assert_eq!(chunks[2].2, "e");
    assert_eq!(source_doc_id("doc#1"), "doc");
    assert_eq!(source_doc_id("plain"), "plain");
}

#[test]
fn store_round_trips_through_jsonl() {
    let dir = tempfile::tempdir().unwrap();
    let e = HashedTrigramEmbedder::new(16, 5);
    let docs = vec![Document::new("x", Domain::News, "alpha beta gamma delta")];
    let store: VectorStore<f64> = build_store(&docs, 2, &e).unwrap();
    let p = dir.path().join("s.jsonl");
    store.save_jsonl(&p).unwrap();
    let back: VectorStore<f64> = VectorStore::load_jsonl(&p, 16).unwrap();
    assert_eq!(back.len(), 2);
    for (a, b) in store.entries().iter().zip(back.entries()) {
        assert_eq!(a.doc_id, b.doc_id);
        assert_eq!(a.vector, b.vector);
    }
    let hit = back.query("alpha beta", &e).unwrap().unwrap();
    assert_eq!(hit.doc_id, "x#0");
    assert_eq!(hit.distance, 0.0);
}

#[test]
fn dimension_mismatch_is_an_error() {
    let mut store = VectorStore::<f64>::new(3);
    assert!(store.insert_vector("a", vec![1.0, 0.0], None).is_err());
}

#[test]
fn external_embedder_speaks_json_lines() {
    let script = r#"while read -r line; do echo '{"vector":[1.0,0.0,2.0]}'; done"#;
    let e = ProcessEmbedder::spawn(script).unwrap();
    assert_eq!(Embedder::<f64>::dim(&e), 3);
    let v: Vec<f64> = e.embed("anything").unwrap();
    assert_eq!(v, vec![1.0, 0.0, 2.0]);
}
