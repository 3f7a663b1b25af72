use rayon::prelude::*;

use crate::corpus::Example;
use crate::eval::{generate_with, item_seed, risk_prompt, Arm, EvalError, Scenario, Testbed, WinRateTable};
use crate::interventions::ResolveContext;
use crate::metrics::{score_risk, Metric, MetricConfig, RiskScores};
use crate::retrieval::Embedder;
use crate::scalar::Real;

pub struct RiskOptions<'a, T> {
    pub metrics: &'a MetricConfig,
    pub embedder: &'a dyn Embedder<T>,
    pub seed: u64,
    /// Tokens to generate; `None` means the ground-truth length.
    pub max_new: Option<usize>,
}

/// Scores by `[method][example]`; `None` marks a failed generation.
#[derive(Debug, Clone, PartialEq)]
pub struct RiskTable<T> {
    pub scenario: Scenario,
    pub methods: Vec<String>,
    pub example_ids: Vec<String>,
    pub scores: Vec<Vec<Option<RiskScores<T>>>>,
    pub outputs: Vec<Vec<Option<String>>>,
    pub failures: Vec<String>,
}

impl<T: Real> RiskTable<T> {
    /// Values by `[method][example][metric]` in [`Metric::ALL`] order.
    pub fn values(&self) -> Vec<Vec<Vec<Option<T>>>> {
        self.scores
            .iter()
            .map(|row| {
                row.iter()
                    .map(|s| Metric::ALL.iter().map(|&m| s.as_ref().map(|s| s.get(m))).collect())
                    .collect()
            })
            .collect()
    }

    pub fn win_rates(&self) -> Result<WinRateTable<T>, EvalError> {
        WinRateTable::compute(&self.methods, &self.values())
    }

    /// Mean of one metric for one method over scored examples.
    pub fn mean(&self, method: usize, metric: Metric) -> Option<T> {
        let vals: Vec<T> = self.scores[method].iter().flatten().map(|s| s.get(metric)).collect();
        (!vals.is_empty()).then(|| vals.iter().copied().sum::<T>() / T::of_usize(vals.len()))
    }
}

/// Generates a continuation of every example's hint under every arm and
/// scores it against the ground truth. Examples run in parallel.
pub fn run_risk<T: Real>(
    testbed: &Testbed<T>,
    arms: &[Arm<T>],
    examples: &[Example],
    opts: &RiskOptions<'_, T>,
) -> Result<RiskTable<T>, EvalError> {
    let mut table = RiskTable {
        scenario: testbed.scenario,
        methods: arms.iter().map(|a| a.name.clone()).collect(),
        example_ids: examples.iter().map(|e| e.doc_id.clone()).collect(),
        scores: Vec::with_capacity(arms.len()),
        outputs: Vec::with_capacity(arms.len()),
        failures: Vec::new(),
    };
    for arm in arms {
        let model = testbed.arm_model(arm)?;
        let results: Vec<Result<(String, RiskScores<T>), EvalError>> = examples
            .par_iter()
            .map(|ex| {
                let vocab = model.vocab();
                let prompt = risk_prompt(testbed.scenario, ex, vocab);
                let hint = ex.hint_text();
                let ctx = ResolveContext { query: &hint, gold_text: Some(&ex.full_text) };
                let max_new = opts.max_new.unwrap_or(ex.ground_truth.len()).max(1);
                let g = generate_with(&model, arm.interventions(), &prompt, ctx, max_new, item_seed(opts.seed, &ex.doc_id))?;
                let text = vocab.decode(&g.tokens);
                let scores = score_risk(&text, &ex.truth_text(), opts.metrics, opts.embedder)?;
                Ok((text, scores))
            })
            .collect();
        let mut scores = Vec::with_capacity(examples.len());
        let mut outputs = Vec::with_capacity(examples.len());
        for (ex, r) in examples.iter().zip(results) {
            match r {
                Ok((text, s)) => {
                    scores.push(Some(s));
                    outputs.push(Some(text));
                }
                Err(e) => {
                    table.failures.push(format!("{} / {}: {e}", arm.name, ex.doc_id));
                    scores.push(None);
                    outputs.push(None);
                }
            }
        }
        table.scores.push(scores);
        table.outputs.push(outputs);
    }
    Ok(table)
}
