use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::corpus::Example;
use crate::eval::{generate_with, item_seed, risk_prompt, Arm, EvalError, Testbed};
use crate::interventions::ResolveContext;
use crate::scalar::Real;
use crate::toylm::{ToyModel, DEFAULT_EFFICIENCY_TOKENS};

#[derive(Debug, Clone, Copy)]
pub struct EfficiencyOptions {
    /// Tokens generated per example, no more and no fewer.
    pub tokens: usize,
    pub seed: u64,
    /// Timed passes over the example set; per-example times are summed.
    pub repeats: usize,
}

impl EfficiencyOptions {
    pub fn new(seed: u64) -> Self {
        Self { tokens: DEFAULT_EFFICIENCY_TOKENS, seed, repeats: 1 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EfficiencyResult {
    pub method: String,
    /// Mean over examples of per-example tokens per second.
    pub tokens_per_sec: f64,
    /// `tokens_per_sec` divided by the vanilla arm's.
    pub ratio: f64,
    pub seconds: f64,
    pub tokens_per_example: Vec<usize>,
}

struct Unit<'a, T: Real> {
    arm: &'a Arm<T>,
    model: std::borrow::Cow<'a, ToyModel<T>>,
    secs: Vec<f64>,
    tokens: Vec<usize>,
}

/// Times every arm on the same prompts, single-threaded, after one warm-up
/// generation per arm. A vanilla baseline is always measured; arms without
/// interventions report its figures, so their ratio is exactly 1.
pub fn run_efficiency<T: Real>(
    testbed: &Testbed<T>,
    arms: &[Arm<T>],
    examples: &[Example],
    opts: &EfficiencyOptions,
) -> Result<Vec<EfficiencyResult>, EvalError> {
    if examples.is_empty() {
        return Err(EvalError::EmptyTasks);
    }
    let vanilla = Arm::vanilla();
    let mut units: Vec<Unit<'_, T>> = Vec::new();
    let mut unit_of = Vec::with_capacity(arms.len());
    for a in arms {
        unit_of.push(if a.is_vanilla() { 0 } else { 1 + unit_of.iter().filter(|&&u| u > 0).count() });
    }
    for arm in std::iter::once(&vanilla).chain(arms.iter().filter(|a| !a.is_vanilla())) {
        units.push(Unit {
            arm,
            model: testbed.arm_model(arm)?,
            secs: vec![0.0; examples.len()],
            tokens: vec![0; examples.len()],
        });
    }
    let prompts: Vec<_> = examples.iter().map(|e| risk_prompt(testbed.scenario, e, testbed.model.vocab())).collect();
    let hints: Vec<String> = examples.iter().map(|e| e.hint_text()).collect();
    let run = |u: &Unit<'_, T>, i: usize| {
        let ctx = ResolveContext { query: &hints[i], gold_text: Some(&examples[i].full_text) };
        generate_with(&u.model, u.arm.interventions(), &prompts[i], ctx, opts.tokens, item_seed(opts.seed, &examples[i].doc_id))
    };
    for u in &units {
        run(u, 0)?;
    }
    for _ in 0..opts.repeats.max(1) {
        for i in 0..examples.len() {
            for u in units.iter_mut() {
                let start = Instant::now();
                let g = run(u, i)?;
                u.secs[i] += start.elapsed().as_secs_f64();
                u.tokens[i] = g.tokens.len();
            }
        }
    }
    let tps = |u: &Unit<'_, T>| {
        let r = opts.repeats.max(1) as f64;
        u.tokens.iter().zip(&u.secs).map(|(&n, &s)| n as f64 * r / s.max(f64::MIN_POSITIVE)).sum::<f64>()
            / examples.len() as f64
    };
    let base_tps = tps(&units[0]);
    let result = |u: &Unit<'_, T>, name: &str| {
        let t = tps(u);
        EfficiencyResult {
            method: name.to_owned(),
            tokens_per_sec: t,
            ratio: t / base_tps,
            seconds: u.secs.iter().sum(),
            tokens_per_example: u.tokens.clone(),
        }
    };
    Ok(arms.iter().zip(unit_of).map(|(a, u)| result(&units[u], &a.name)).collect())
}
