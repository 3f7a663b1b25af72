//! Run configuration: a TOML file whose keys mirror the command-line flags.
//!
//! ```toml
//! data = "prepared"
//! scenario = "memorization"
//! seed = 0
//! out = "runs/demo"
//!
//! [model]
//! order = 4
//!
//! [[arm]]
//! name = "vanilla"
//!
//! [[arm]]
//! name = "memfree-6"
//! [[arm.intervention]]
//! kind = "memfree"
//! n = 6
//!
//! [[arm]]
//! name = "ga"
//! unlearn = { method = "ga", lr_analog = 1.0, epochs = 3 }
//! ```

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};
use takedown::eval::{ModelConfig, Scenario};
use takedown::interventions::{presets, ALPHA_GRID, DEFAULT_RCAD_THRESHOLD, DEFAULT_TOPK_K, SIGMA_GRID};
use takedown::membership::NGRAM_GRID;
use takedown::unlearning::{UnlearnMethod, DEFAULT_EPOCHS, DEFAULT_LR_ANALOG};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    /// Directory written by `prepare`.
    pub data: PathBuf,
    pub scenario: Scenario,
    pub seed: u64,
    pub out: PathBuf,
    pub risk_examples: usize,
    pub utility_tasks: usize,
    pub efficiency_examples: usize,
    pub efficiency_tokens: usize,
    pub efficiency_repeats: usize,
    pub hint_len: usize,
    pub span_len: usize,
    pub acs_min_len: usize,
    pub num_perm: usize,
    /// External embedder command; `TAKEDOWN_EMBEDDER_CMD` overrides it.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub embedder: Option<String>,
    pub sweep: bool,
    pub model: ModelConfig,
    pub arm: Vec<ArmSpec>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            data: PathBuf::from("prepared"),
            scenario: Scenario::Memorization,
            seed: 0,
            out: PathBuf::from("run"),
            risk_examples: takedown::eval::NEWS_RISK_EXAMPLES,
            utility_tasks: takedown::eval::NEWS_UTILITY_TASKS,
            efficiency_examples: 20,
            efficiency_tokens: takedown::toylm::DEFAULT_EFFICIENCY_TOKENS,
            efficiency_repeats: 1,
            hint_len: takedown::corpus::DEFAULT_HINT_LEN,
            span_len: takedown::corpus::DEFAULT_SPAN_LEN,
            acs_min_len: takedown::metrics::DEFAULT_ACS_MIN_LEN,
            num_perm: takedown::metrics::DEFAULT_NUM_PERM,
            embedder: None,
            sweep: false,
            model: ModelConfig::default(),
            arm: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArmSpec {
    pub name: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub intervention: Vec<InterventionSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub unlearn: Option<UnlearnSpec>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StoreMode {
    #[default]
    Bloom,
    Exact,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RcadSourceSpec {
    #[default]
    Retrieve,
    Gold,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InterventionSpec {
    SystemPrompt {
        preset: String,
    },
    Memfree {
        n: usize,
        #[serde(default)]
        mode: StoreMode,
    },
    TopK {
        #[serde(default = "default_k")]
        k: usize,
        #[serde(default)]
        mu: f64,
        sigma: f64,
        /// Defaults to the run seed.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        seed: Option<u64>,
    },
    Rcad {
        alpha: f64,
        #[serde(default = "default_threshold")]
        threshold: f64,
        #[serde(default)]
        source: RcadSourceSpec,
    },
}

fn default_k() -> usize {
    DEFAULT_TOPK_K
}

fn default_threshold() -> f64 {
    DEFAULT_RCAD_THRESHOLD
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UnlearnSpec {
    pub method: UnlearnMethod,
    #[serde(default = "default_lr")]
    pub lr_analog: f64,
    #[serde(default = "default_epochs")]
    pub epochs: usize,
}

fn default_lr() -> f64 {
    DEFAULT_LR_ANALOG
}

fn default_epochs() -> usize {
    DEFAULT_EPOCHS
}

impl ArmSpec {
    pub fn vanilla() -> Self {
        Self { name: "vanilla".into(), intervention: Vec::new(), unlearn: None }
    }

    fn single(name: String, iv: InterventionSpec) -> Self {
        Self { name, intervention: vec![iv], unlearn: None }
    }

    /// Unlearning and R-CAD arms only apply to the memorization scenario.
    pub fn applies_to(&self, scenario: Scenario) -> bool {
        scenario == Scenario::Memorization
            || (self.unlearn.is_none() && !self.intervention.iter().any(|i| matches!(i, InterventionSpec::Rcad { .. })))
    }
}

/// Arms used when the config declares none.
pub fn default_arms() -> Vec<ArmSpec> {
    vec![
        ArmSpec::vanilla(),
        ArmSpec::single("system-prompt-bing".into(), InterventionSpec::SystemPrompt { preset: "bing".into() }),
        ArmSpec::single("memfree-6".into(), InterventionSpec::Memfree { n: 6, mode: StoreMode::Bloom }),
        ArmSpec::single(
            "topk-sigma-3".into(),
            InterventionSpec::TopK { k: DEFAULT_TOPK_K, mu: 0.0, sigma: 3.0, seed: None },
        ),
        ArmSpec::single(
            "rcad-alpha-3".into(),
            InterventionSpec::Rcad { alpha: 3.0, threshold: DEFAULT_RCAD_THRESHOLD, source: RcadSourceSpec::Retrieve },
        ),
        ArmSpec { name: "unlearn-ga".into(), intervention: Vec::new(), unlearn: Some(unlearn(UnlearnMethod::Ga, DEFAULT_EPOCHS)) },
    ]
}

fn unlearn(method: UnlearnMethod, epochs: usize) -> UnlearnSpec {
    UnlearnSpec { method, lr_analog: DEFAULT_LR_ANALOG, epochs }
}

/// Every grid point: all presets, MemFree n, Top-k sigma, R-CAD alpha and
/// unlearning epochs 1 to 5 per method.
pub fn sweep_arms() -> Vec<ArmSpec> {
    let mut arms = vec![ArmSpec::vanilla()];
    for p in presets() {
        arms.push(ArmSpec::single(format!("system-prompt-{}", p.id), InterventionSpec::SystemPrompt { preset: p.id.into() }));
    }
    for n in NGRAM_GRID {
        arms.push(ArmSpec::single(format!("memfree-{n}"), InterventionSpec::Memfree { n, mode: StoreMode::Bloom }));
    }
    for sigma in SIGMA_GRID {
        arms.push(ArmSpec::single(
            format!("topk-sigma-{sigma}"),
            InterventionSpec::TopK { k: DEFAULT_TOPK_K, mu: 0.0, sigma, seed: None },
        ));
    }
    for alpha in ALPHA_GRID {
        arms.push(ArmSpec::single(
            format!("rcad-alpha-{alpha}"),
            InterventionSpec::Rcad { alpha, threshold: DEFAULT_RCAD_THRESHOLD, source: RcadSourceSpec::Retrieve },
        ));
    }
    for m in UnlearnMethod::ALL {
        for e in 1..=5 {
            arms.push(ArmSpec { name: format!("unlearn-{}-e{e}", m.name()), intervention: Vec::new(), unlearn: Some(unlearn(m, e)) });
        }
    }
    arms
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        Self::parse(&text).with_context(|| format!("parsing config {}", path.display()))
    }

    pub fn parse(text: &str) -> Result<Self> {
        Ok(toml::from_str(text)?)
    }

    pub fn to_toml(&self) -> Result<String> {
        Ok(toml::to_string(self)?)
    }

    /// The arms to evaluate: configured (or default) arms, then sweep arms
    /// with new names, restricted to the scenario.
    pub fn effective_arms(&self) -> (Vec<ArmSpec>, Vec<String>) {
        let mut arms = if self.arm.is_empty() { default_arms() } else { self.arm.clone() };
        if self.sweep {
            for a in sweep_arms() {
                if !arms.iter().any(|b| b.name == a.name) {
                    arms.push(a);
                }
            }
        }
        let mut skipped = Vec::new();
        arms.retain(|a| {
            let ok = a.applies_to(self.scenario);
            if !ok {
                skipped.push(format!("arm {:?} does not apply to the {} scenario; skipped", a.name, self.scenario));
            }
            ok
        });
        (arms, skipped)
    }

    pub fn validate(&self) -> Result<()> {
        if self.hint_len == 0 || self.span_len == 0 {
            bail!("hint_len and span_len must be positive");
        }
        if self.efficiency_tokens == 0 {
            bail!("efficiency_tokens must be positive");
        }
        let mut names = std::collections::HashSet::new();
        for a in &self.arm {
            if !names.insert(&a.name) {
                bail!("duplicate arm name {:?}", a.name);
            }
            if a.unlearn.is_some() && !a.intervention.is_empty() {
                bail!("arm {:?} mixes unlearning with decoding interventions", a.name);
            }
        }
        Ok(())
    }
}
