//! Shared fixtures: the synthetic testbed and its scenario models.
#![allow(dead_code)]

use takedown::corpus::{make_example, split_corpus, CorpusSplit, Example, DEFAULT_HINT_LEN, DEFAULT_SPAN_LEN};
use takedown::eval::{build_model, ModelConfig, Scenario, Testbed};
use takedown::testbed::{generate_corpus, TestbedConfig};
use takedown::unlearning::UnlearningBatch;
use takedown::Model;

pub struct Fixture {
    pub split: CorpusSplit,
    pub forget: Vec<Example>,
    pub retain: Vec<Example>,
    pub testbed: Testbed<f64>,
}

impl Fixture {
    pub fn model(&self) -> &Model {
        &self.testbed.model
    }
}

pub fn fixture(cfg: &TestbedConfig, scenario: Scenario) -> Fixture {
    let docs = generate_corpus(cfg);
    let split = split_corpus(&docs, cfg.n_block, cfg.n_retain).unwrap();
    let examples =
        |d: &[takedown::corpus::Document]| -> Vec<Example> { d.iter().map(|d| make_example(d, DEFAULT_HINT_LEN, DEFAULT_SPAN_LEN).unwrap()).collect() };
    let forget = examples(&split.blocklisted);
    let retain = examples(&split.retain);
    let model = build_model(&split, &ModelConfig::default(), scenario).unwrap();
    let testbed = Testbed::new(scenario, model)
        .with_unlearn_batch(UnlearningBatch::new(forget.clone(), retain.clone()).unwrap());
    Fixture { split, forget, retain, testbed }
}

/// The default testbed: 20 documents per split, 320 words each.
pub fn small(scenario: Scenario) -> Fixture {
    fixture(&TestbedConfig::default(), scenario)
}
