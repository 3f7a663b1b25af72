use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::Document;
use crate::eval::{generate_with, item_seed, Arm, EvalError, Scenario, Testbed};
use crate::interventions::ResolveContext;
use crate::metrics::{qa_f1, rouge_recall, RougeVariant};
use crate::scalar::Real;
use crate::toylm::{TokenId, Vocab};

pub const BOOTSTRAP_RESAMPLES: usize = 1000;
pub const CI_LEVEL: f64 = 0.95;
/// Request appended to a chapter for summarization tasks.
pub const SUMMARY_REQUEST: &str = "Summarize this chapter .";
/// Words of context preceding an answer that are appended to its question.
pub const QA_CUE_LEN: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskKind {
    /// Scored with word-level F1.
    Qa,
    /// Scored with ROUGE-L recall.
    Summary,
}

impl TaskKind {
    pub fn name(self) -> &'static str {
        match self {
            TaskKind::Qa => "qa",
            TaskKind::Summary => "summary",
        }
    }

    pub fn score<T: Real>(self, output: &str, reference: &str) -> T {
        match self {
            TaskKind::Qa => qa_f1(output, reference),
            TaskKind::Summary => rouge_recall(output, reference, RougeVariant::RougeL),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UtilitySplit {
    Blocklisted,
    InDomain,
}

impl UtilitySplit {
    pub fn name(self) -> &'static str {
        match self {
            UtilitySplit::Blocklisted => "blocklisted",
            UtilitySplit::InDomain => "in_domain",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UtilityTask {
    pub id: String,
    pub doc_id: String,
    pub kind: TaskKind,
    /// Source document text, given in front of the request in RAG.
    pub context: String,
    pub request: Vec<String>,
    pub reference: String,
}

impl UtilityTask {
    pub fn prompt(&self, scenario: Scenario, vocab: &Vocab) -> Vec<TokenId> {
        let mut p = Vec::new();
        if scenario == Scenario::Rag {
            p.extend(vocab.encode(&self.context));
        }
        p.extend(vocab.encode_tokens(&self.request));
        p
    }
}

/// One task per question. The request is the question followed by the
/// [`QA_CUE_LEN`] words preceding the answer's first occurrence in the text.
pub fn qa_tasks(docs: &[Document]) -> Vec<UtilityTask> {
    let mut out = Vec::new();
    for d in docs {
        let toks = d.tokens();
        for (i, q) in d.questions.iter().enumerate() {
            let ans: Vec<&str> = q.answer.split_whitespace().collect();
            let mut request: Vec<String> = q.question.split_whitespace().map(String::from).collect();
            if !ans.is_empty() {
                if let Some(at) = toks.windows(ans.len()).position(|w| w == ans.as_slice()) {
                    request.extend(toks[at.saturating_sub(QA_CUE_LEN)..at].iter().map(|s| s.to_string()));
                }
            }
            out.push(UtilityTask {
                id: format!("{}/q{i}", d.id),
                doc_id: d.id.clone(),
                kind: TaskKind::Qa,
                context: d.text.clone(),
                request,
                reference: q.answer.clone(),
            });
        }
    }
    out
}

/// One task per document with a reference summary. The request is
/// [`SUMMARY_REQUEST`] followed by the chapter's first [`QA_CUE_LEN`] words.
pub fn summary_tasks(docs: &[Document]) -> Vec<UtilityTask> {
    docs.iter()
        .filter_map(|d| {
            let reference = d.reference_summary.clone()?;
            let mut request: Vec<String> = SUMMARY_REQUEST.split_whitespace().map(String::from).collect();
            request.extend(d.tokens().into_iter().take(QA_CUE_LEN).map(String::from));
            Some(UtilityTask {
                id: format!("{}/summary", d.id),
                doc_id: d.id.clone(),
                kind: TaskKind::Summary,
                context: d.text.clone(),
                request,
                reference,
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy)]
pub struct UtilityOptions {
    pub seed: u64,
    pub resamples: usize,
    pub level: f64,
}

impl UtilityOptions {
    pub fn new(seed: u64) -> Self {
        Self { seed, resamples: BOOTSTRAP_RESAMPLES, level: CI_LEVEL }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct UtilityResult<T> {
    pub method: String,
    pub split: UtilitySplit,
    pub kind: TaskKind,
    pub mean: T,
    pub ci_low: T,
    pub ci_high: T,
    /// `(task_id, score)`, `None` for a failed generation.
    pub per_task: Vec<(String, Option<T>)>,
}

/// Percentile bootstrap interval of the mean.
pub fn bootstrap_ci<T: Real>(values: &[T], resamples: usize, level: f64, seed: u64) -> (T, T) {
    if values.is_empty() {
        return (T::nan(), T::nan());
    }
    let n = values.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut means: Vec<T> = (0..resamples.max(1))
        .map(|_| {
            let s: T = (0..n).map(|_| values[rng.random_range(0..n)]).sum();
            s / T::of_usize(n)
        })
        .collect();
    means.sort_by(|a, b| a.partial_cmp(b).expect("finite scores"));
    let tail = (1.0 - level) / 2.0;
    (quantile(&means, tail), quantile(&means, 1.0 - tail))
}

/// Linear-interpolation quantile of sorted values.
fn quantile<T: Real>(sorted: &[T], q: f64) -> T {
    let pos = q.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = T::of(pos - lo as f64);
    sorted[lo] + (sorted[hi] - sorted[lo]) * frac
}

/// Generates a response for every task under `arm` and scores it. The
/// response length is the reference's token count.
pub fn run_utility<T: Real>(
    testbed: &Testbed<T>,
    arm: &Arm<T>,
    tasks: &[UtilityTask],
    split: UtilitySplit,
    opts: &UtilityOptions,
) -> Result<UtilityResult<T>, EvalError> {
    if tasks.is_empty() {
        return Err(EvalError::EmptyTasks);
    }
    let model = testbed.arm_model(arm)?;
    let per_task: Vec<(String, Option<T>)> = tasks
        .par_iter()
        .map(|t| {
            let vocab = model.vocab();
            let prompt = t.prompt(testbed.scenario, vocab);
            let query = t.request.join(" ");
            let ctx = ResolveContext { query: &query, gold_text: Some(&t.context) };
            let max_new = t.reference.split_whitespace().count().max(1);
            let score = generate_with(&model, arm.interventions(), &prompt, ctx, max_new, item_seed(opts.seed, &t.id))
                .ok()
                .map(|g| t.kind.score(&vocab.decode(&g.tokens), &t.reference));
            (t.id.clone(), score)
        })
        .collect();
    let vals: Vec<T> = per_task.iter().filter_map(|(_, s)| *s).collect();
    let mean = if vals.is_empty() { T::nan() } else { vals.iter().copied().sum::<T>() / T::of_usize(vals.len()) };
    let (ci_low, ci_high) = bootstrap_ci(&vals, opts.resamples, opts.level, opts.seed);
    Ok(UtilityResult { method: arm.name.clone(), split, kind: tasks[0].kind, mean, ci_low, ci_high, per_task })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{Domain, QaPair};

    #[test]
    fn qa_request_gets_cue() {
        let mut d = Document::new("d", Domain::News, "one two three four five six");
        d.questions.push(QaPair { question: "Which ?".into(), answer: "five".into() });
        let t = &qa_tasks(&[d])[0];
        assert_eq!(t.request, ["Which", "?", "two", "three", "four"]);
        assert_eq!(t.id, "d/q0");
    }

    #[test]
    fn bootstrap_brackets_mean() {
        let v: Vec<f64> = (0..50).map(|i| (i % 7) as f64).collect();
        let mean = v.iter().sum::<f64>() / 50.0;
        let (lo, hi) = bootstrap_ci(&v, 1000, 0.95, 3);
        assert!(lo <= mean && mean <= hi);
        assert_eq!(bootstrap_ci(&v, 1000, 0.95, 3), (lo, hi));
    }
}
