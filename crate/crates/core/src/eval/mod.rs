//! Evaluation harness: risk, utility and efficiency pipelines, win-rate
//! aggregation and report files.

mod efficiency;
mod report;
mod risk;
mod utility;
mod winrate;

use std::borrow::Cow;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use efficiency::{run_efficiency, EfficiencyOptions, EfficiencyResult};
pub use report::{
    distribution_rows, emit_report, read_details, read_efficiency, read_utility, risk_rows, summarize, utility_rows,
    write_details, write_distributions, write_efficiency, write_summary, write_utility, DetailRow,
    MethodUtility, MethodWinRate, Summary, UtilityRow, DETAILS_FILE, DETAILS_HEADER, DISTRIBUTION_DIR,
    EFFICIENCY_FILE, SUMMARY_FILE, SUMMARY_SCHEMA_VERSION, UTILITY_FILE, UTILITY_HEADER,
};
pub use risk::{run_risk, RiskOptions, RiskTable};
pub use utility::{
    bootstrap_ci, qa_tasks, run_utility, summary_tasks, TaskKind, UtilityOptions, UtilityResult, UtilitySplit,
    UtilityTask, BOOTSTRAP_RESAMPLES, CI_LEVEL, SUMMARY_REQUEST,
};
pub use winrate::{win_rate, WinRateTable};

use crate::corpus::{CorpusSplit, Document, Example};
use crate::hashing::{derive_seed, xxh64};
use crate::interventions::{presets, InterventionConfig, InterventionError, Intervention, ResolveContext};
use crate::retrieval::RetrievalError;
use crate::scalar::Real;
use crate::toylm::{generate, DecoderConfig, Generation, LmError, NGramLM, TokenId, ToyModel, Vocab};
use crate::unlearning::{count_unlearn, UnlearnError, UnlearnHyperparams, UnlearnMethod, UnlearningBatch, DEFAULT_IDK_RESPONSE};

/// Default risk-set sizes per domain.
pub const NEWS_RISK_EXAMPLES: usize = 1000;
pub const BOOKS_RISK_EXAMPLES: usize = 500;
/// Default utility-set sizes per domain.
pub const NEWS_UTILITY_TASKS: usize = 500;
pub const BOOKS_UTILITY_TASKS: usize = 200;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("win rate needs at least 2 methods, got {0}")]
    TooFewMethods(usize),
    #[error("score table is ragged: {0}")]
    Ragged(String),
    #[error("utility task set is empty")]
    EmptyTasks,
    #[error("arm {0:?} needs an unlearning batch")]
    MissingBatch(String),
    #[error("report: {0}")]
    Report(String),
    #[error(transparent)]
    Lm(#[from] LmError),
    #[error(transparent)]
    Unlearn(#[from] UnlearnError),
    #[error(transparent)]
    Intervention(#[from] InterventionError),
    #[error(transparent)]
    Retrieval(#[from] RetrievalError),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scenario {
    Memorization,
    Rag,
}

impl Scenario {
    pub fn name(self) -> &'static str {
        match self {
            Scenario::Memorization => "memorization",
            Scenario::Rag => "rag",
        }
    }
}

impl std::fmt::Display for Scenario {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Scenario {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "memorization" => Ok(Scenario::Memorization),
            "rag" => Ok(Scenario::Rag),
            _ => Err(format!("unknown scenario {s:?} (memorization or rag)")),
        }
    }
}

#[derive(Debug, Clone)]
pub enum ArmKind<T> {
    /// Decoding-time interventions on the scenario model, in declared order.
    Decode(Vec<InterventionConfig<T>>),
    /// Count-based unlearning of the scenario model, then vanilla decoding.
    Unlearn { method: UnlearnMethod, hp: UnlearnHyperparams<T> },
}

/// One method under evaluation.
#[derive(Debug, Clone)]
pub struct Arm<T> {
    pub name: String,
    pub kind: ArmKind<T>,
}

impl<T: Real> Arm<T> {
    pub fn vanilla() -> Self {
        Self { name: "vanilla".into(), kind: ArmKind::Decode(Vec::new()) }
    }

    pub fn decode(name: impl Into<String>, interventions: Vec<InterventionConfig<T>>) -> Self {
        Self { name: name.into(), kind: ArmKind::Decode(interventions) }
    }

    pub fn is_vanilla(&self) -> bool {
        matches!(&self.kind, ArmKind::Decode(v) if v.is_empty())
    }

    pub fn interventions(&self) -> &[InterventionConfig<T>] {
        match &self.kind {
            ArmKind::Decode(v) => v,
            ArmKind::Unlearn { .. } => &[],
        }
    }

    /// Unlearning and R-CAD only apply to the memorization scenario.
    pub fn applies_to(&self, scenario: Scenario) -> bool {
        scenario == Scenario::Memorization
            || match &self.kind {
                ArmKind::Unlearn { .. } => false,
                ArmKind::Decode(v) => !v.iter().any(|c| matches!(c, InterventionConfig::Rcad(_))),
            }
    }
}

/// Toy-model settings for a run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub order: usize,
    pub smoothing_k: f64,
    pub copy_weight: f64,
    pub min_match: usize,
    pub finetune_repeats: usize,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            order: crate::toylm::DEFAULT_ORDER,
            smoothing_k: crate::toylm::DEFAULT_SMOOTHING_K,
            copy_weight: crate::toylm::DEFAULT_COPY_WEIGHT,
            min_match: crate::toylm::DEFAULT_MIN_MATCH,
            finetune_repeats: 3,
        }
    }
}

/// Every text the harness may encode, so no prompt token maps to `<unk>`.
fn extend_vocab<T: Real>(lm: &mut NGramLM<T>, split: &CorpusSplit) {
    let all = split.blocklisted.iter().chain(&split.retain).chain(&split.in_domain);
    for d in all {
        lm.extend_vocab(&d.text);
        for q in &d.questions {
            lm.extend_vocab(&q.question);
            lm.extend_vocab(&q.answer);
        }
        if let Some(s) = &d.reference_summary {
            lm.extend_vocab(s);
        }
    }
    for p in presets() {
        lm.extend_vocab(p.text);
    }
    lm.extend_vocab(DEFAULT_IDK_RESPONSE);
    lm.extend_vocab(SUMMARY_REQUEST);
}

/// The scenario's vanilla model. Both start from a model trained on the
/// retain and in-domain documents; the memorization model is additionally
/// fine-tuned on the blocklisted documents.
pub fn build_model<T: Real>(split: &CorpusSplit, cfg: &ModelConfig, scenario: Scenario) -> Result<ToyModel<T>, EvalError> {
    let train: Vec<Document> = split.retain.iter().chain(&split.in_domain).cloned().collect();
    let mut lm = NGramLM::train(&train, cfg.order, T::of(cfg.smoothing_k))?;
    extend_vocab(&mut lm, split);
    if scenario == Scenario::Memorization {
        lm = lm.finetune(&split.blocklisted, cfg.finetune_repeats)?;
    }
    Ok(ToyModel::new(lm, T::of(cfg.copy_weight), cfg.min_match))
}

/// A scenario model plus the data needed to instantiate every arm.
#[derive(Debug, Clone)]
pub struct Testbed<T> {
    pub scenario: Scenario,
    pub model: ToyModel<T>,
    pub unlearn_batch: Option<UnlearningBatch>,
}

impl<T: Real> Testbed<T> {
    pub fn new(scenario: Scenario, model: ToyModel<T>) -> Self {
        Self { scenario, model, unlearn_batch: None }
    }

    pub fn with_unlearn_batch(mut self, batch: UnlearningBatch) -> Self {
        self.unlearn_batch = Some(batch);
        self
    }

    /// The model an arm decodes with.
    pub fn arm_model(&self, arm: &Arm<T>) -> Result<Cow<'_, ToyModel<T>>, EvalError> {
        match &arm.kind {
            ArmKind::Decode(_) => Ok(Cow::Borrowed(&self.model)),
            ArmKind::Unlearn { method, hp } => {
                let batch = self.unlearn_batch.as_ref().ok_or_else(|| EvalError::MissingBatch(arm.name.clone()))?;
                let lm = count_unlearn(&self.model.lm, batch, hp, *method, DEFAULT_IDK_RESPONSE)?;
                Ok(Cow::Owned(self.model.with_lm(lm)))
            }
        }
    }
}

/// Risk prompt: the hint, preceded by the full source document in RAG.
pub fn risk_prompt(scenario: Scenario, ex: &Example, vocab: &Vocab) -> Vec<TokenId> {
    let mut p = Vec::new();
    if scenario == Scenario::Rag {
        p.extend(vocab.encode(&ex.full_text));
    }
    p.extend(vocab.encode_tokens(&ex.hint));
    p
}

/// Per-item generation seed, independent of item order.
pub fn item_seed(run_seed: u64, item_id: &str) -> u64 {
    derive_seed(run_seed, xxh64(0, item_id.as_bytes()))
}

/// Resolves `configs` for one prompt and generates `max_new` tokens.
pub fn generate_with<T: Real>(
    model: &ToyModel<T>,
    configs: &[InterventionConfig<T>],
    prompt: &[TokenId],
    ctx: ResolveContext<'_>,
    max_new: usize,
    seed: u64,
) -> Result<Generation<T>, EvalError> {
    let resolved: Vec<Intervention<T>> =
        configs.iter().map(|c| c.resolve(model.vocab(), ctx)).collect::<Result<_, _>>()?;
    Ok(generate(model, prompt, &DecoderConfig::new(max_new), &resolved, seed)?)
}
