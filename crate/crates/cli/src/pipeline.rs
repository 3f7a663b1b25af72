use std::collections::HashMap;
use std::fs;
use std::path::Path;
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use takedown::corpus::{make_example, Document, Example};
use takedown::eval::{
    build_model, qa_tasks, read_details, read_utility, risk_rows, run_efficiency, run_risk, run_utility, summarize,
    summary_tasks, utility_rows, write_details, write_distributions, write_efficiency, write_summary, write_utility,
    Arm, ArmKind, DetailRow, EfficiencyOptions, EfficiencyResult, RiskOptions, Summary, Testbed, UtilityOptions,
    UtilityRow, UtilitySplit, UtilityTask, DETAILS_FILE, EFFICIENCY_FILE, SUMMARY_FILE, UTILITY_FILE,
};
use takedown::hashing::xxh64;
use takedown::interventions::{InterventionConfig, RcadConfig, RcadSource, Retriever, TopKPerturb};
use takedown::membership::{BloomFilter, ExactNGramSet, NGramStore};
use takedown::metrics::MetricConfig;
use takedown::retrieval::{build_store, Embedder, HashedTrigramEmbedder, ProcessEmbedder, VectorStore};
use takedown::unlearning::{UnlearnHyperparams, UnlearningBatch};
use takedown::Model;

use crate::config::{ArmSpec, InterventionSpec, RcadSourceSpec, RunConfig, StoreMode};
use crate::prepare::{bloom_file, Prepared, STORE_FILE};

pub const CONFIG_FILE: &str = "config.toml";
pub const FAILURES_FILE: &str = "failures.txt";

pub const BUILTIN_EMBEDDER: &str = "hashed-trigram-384";

/// The embedder selected by the config, and its identifier.
pub fn make_embedder(cmd: Option<&str>) -> Result<(Arc<dyn Embedder<f64>>, String)> {
    Ok(match cmd {
        Some(c) => (
            Arc::new(ProcessEmbedder::spawn(c).with_context(|| format!("starting embedder {c:?}"))?),
            format!("process:{c}"),
        ),
        None => (Arc::new(HashedTrigramEmbedder::default()), BUILTIN_EMBEDDER.to_owned()),
    })
}

/// Run id: xxh64 of the seed and the canonical config with `out` blanked,
/// so identical runs written to different directories share it.
pub fn run_id(cfg: &RunConfig) -> Result<String> {
    let mut c = cfg.clone();
    c.out = Default::default();
    Ok(format!("{:016x}", xxh64(cfg.seed, c.to_toml()?.as_bytes())))
}

pub struct Session {
    pub cfg: RunConfig,
    pub run_id: String,
    pub prepared: Prepared,
    pub embedder: Arc<dyn Embedder<f64>>,
    pub embedder_id: String,
    pub arms: Vec<Arm<f64>>,
    pub testbed: Testbed<f64>,
    pub examples: Vec<Example>,
    pub warnings: Vec<String>,
    pub failures: Vec<String>,
}

fn examples_of(docs: &[Document], cfg: &RunConfig, limit: usize, warnings: &mut Vec<String>) -> Vec<Example> {
    let mut out = Vec::new();
    for d in docs {
        if out.len() == limit {
            break;
        }
        match make_example(d, cfg.hint_len, cfg.span_len) {
            Ok(ex) => out.push(ex),
            Err(e) => warnings.push(format!("skipped document: {e}")),
        }
    }
    out
}

impl Session {
    /// Resolves the arm list into `cfg.arm`, so the config written to the
    /// run directory names every evaluated arm.
    pub fn open(mut cfg: RunConfig) -> Result<Self> {
        cfg.validate()?;
        let prepared = Prepared::load(&cfg.data)?;
        let (embedder, embedder_id) = make_embedder(cfg.embedder.as_deref())?;
        let (arm_specs, mut warnings) = cfg.effective_arms();
        cfg.arm = arm_specs.clone();
        cfg.sweep = false;
        let model: Model = build_model(&prepared.split, &cfg.model, cfg.scenario)?;
        let examples = examples_of(&prepared.split.blocklisted, &cfg, cfg.risk_examples, &mut warnings);
        if examples.is_empty() {
            bail!("no blocklisted document is long enough for hint_len {}", cfg.hint_len);
        }
        let mut testbed = Testbed::new(cfg.scenario, model);
        if arm_specs.iter().any(|a| a.unlearn.is_some()) {
            let retain = examples_of(&prepared.split.retain, &cfg, usize::MAX, &mut warnings);
            testbed = testbed.with_unlearn_batch(UnlearningBatch::new(examples.clone(), retain)?);
        }
        let mut s = Self {
            run_id: run_id(&cfg)?,
            cfg,
            prepared,
            embedder,
            embedder_id,
            arms: Vec::new(),
            testbed,
            examples,
            warnings,
            failures: Vec::new(),
        };
        s.arms = s.build_arms(&arm_specs)?;
        Ok(s)
    }

    fn retriever(&self) -> Result<Arc<Retriever<f64>>> {
        let m = &self.prepared.manifest;
        let path = self.prepared.dir.join(STORE_FILE);
        let store = if m.embedder == self.embedder_id && path.exists() {
            VectorStore::load_jsonl(&path, self.embedder.dim())?
        } else {
            build_store(&self.prepared.split.blocklisted, m.chunk_words, self.embedder.as_ref())?
        };
        let documents: HashMap<String, String> =
            self.prepared.split.blocklisted.iter().map(|d| (d.id.clone(), d.text.clone())).collect();
        Ok(Arc::new(Retriever { store, embedder: Arc::clone(&self.embedder), documents }))
    }

    fn ngram_store(&self, n: usize, mode: StoreMode) -> Result<NGramStore> {
        let docs = &self.prepared.split.blocklisted;
        Ok(match mode {
            StoreMode::Exact => NGramStore::Exact(ExactNGramSet::build(docs, n)),
            StoreMode::Bloom => {
                let path = self.prepared.dir.join(bloom_file(n));
                NGramStore::Bloom(if path.exists() {
                    BloomFilter::load(&path)?
                } else {
                    BloomFilter::build(docs, n, self.prepared.manifest.fp_target)?
                })
            }
        })
    }

    fn build_arms(&self, specs: &[ArmSpec]) -> Result<Vec<Arm<f64>>> {
        let mut retriever = None;
        let mut stores: HashMap<(usize, StoreMode), Arc<NGramStore>> = HashMap::new();
        let mut arms = Vec::new();
        for spec in specs {
            if let Some(u) = spec.unlearn {
                let hp = UnlearnHyperparams::new(u.lr_analog, u.epochs)?;
                arms.push(Arm { name: spec.name.clone(), kind: ArmKind::Unlearn { method: u.method, hp } });
                continue;
            }
            let mut configs = Vec::new();
            for iv in &spec.intervention {
                let c = match iv {
                    InterventionSpec::SystemPrompt { preset } => InterventionConfig::SystemPrompt { preset_id: preset.clone() },
                    InterventionSpec::Memfree { n, mode } => {
                        let store = match stores.get(&(*n, *mode)) {
                            Some(s) => Arc::clone(s),
                            None => {
                                let s = Arc::new(self.ngram_store(*n, *mode)?);
                                stores.insert((*n, *mode), Arc::clone(&s));
                                s
                            }
                        };
                        InterventionConfig::MemFree { store }
                    }
                    InterventionSpec::TopK { k, mu, sigma, seed } => InterventionConfig::TopKPerturb(TopKPerturb {
                        k: *k,
                        mu: *mu,
                        sigma: *sigma,
                        seed: seed.unwrap_or(self.cfg.seed),
                    }),
                    InterventionSpec::Rcad { alpha, threshold, source } => {
                        let source = match source {
                            RcadSourceSpec::Gold => RcadSource::Gold,
                            RcadSourceSpec::Retrieve => {
                                if retriever.is_none() {
                                    retriever = Some(self.retriever()?);
                                }
                                RcadSource::Retrieve(Arc::clone(retriever.as_ref().expect("just set")))
                            }
                        };
                        InterventionConfig::Rcad(RcadConfig { alpha: *alpha, distance_threshold: *threshold, source })
                    }
                };
                c.validate().with_context(|| format!("arm {:?}", spec.name))?;
                configs.push(c);
            }
            arms.push(Arm::decode(spec.name.clone(), configs));
        }
        Ok(arms)
    }

    pub fn risk(&mut self) -> Result<Vec<DetailRow>> {
        let metrics = MetricConfig::new(self.cfg.acs_min_len, self.cfg.num_perm, self.cfg.seed);
        let opts = RiskOptions { metrics: &metrics, embedder: self.embedder.as_ref(), seed: self.cfg.seed, max_new: None };
        let table = run_risk(&self.testbed, &self.arms, &self.examples, &opts)?;
        self.failures.extend(table.failures.iter().cloned());
        Ok(risk_rows(&self.run_id, &table))
    }

    fn tasks(&self, docs: &[Document]) -> Vec<Vec<UtilityTask>> {
        let n = self.cfg.utility_tasks;
        [qa_tasks(docs), summary_tasks(docs)]
            .into_iter()
            .map(|mut t| {
                t.truncate(n);
                t
            })
            .filter(|t| !t.is_empty())
            .collect()
    }

    pub fn utility(&mut self) -> Result<Vec<UtilityRow>> {
        let opts = UtilityOptions::new(self.cfg.seed);
        let split = &self.prepared.split;
        let sets = [(UtilitySplit::Blocklisted, self.tasks(&split.blocklisted)), (UtilitySplit::InDomain, self.tasks(&split.in_domain))];
        let mut results = Vec::new();
        for arm in &self.arms {
            for (sp, groups) in &sets {
                for tasks in groups {
                    let r = run_utility(&self.testbed, arm, tasks, *sp, &opts)?;
                    for (id, v) in &r.per_task {
                        if v.is_none() {
                            self.failures.push(format!("utility {} {}: generation failed", arm.name, id));
                        }
                    }
                    results.push(r);
                }
            }
        }
        if results.is_empty() {
            self.warnings.push("no utility tasks: documents carry no questions or summaries".into());
        }
        Ok(utility_rows(&self.run_id, self.cfg.scenario.name(), &results))
    }

    pub fn efficiency(&mut self) -> Result<Vec<EfficiencyResult>> {
        let n = self.cfg.efficiency_examples.min(self.examples.len()).max(1);
        let opts = EfficiencyOptions { tokens: self.cfg.efficiency_tokens, seed: self.cfg.seed, repeats: self.cfg.efficiency_repeats };
        let res = run_efficiency(&self.testbed, &self.arms, &self.examples[..n], &opts)?;
        for r in &res {
            if let Some(bad) = r.tokens_per_example.iter().find(|&&t| t != opts.tokens) {
                self.failures.push(format!("efficiency {}: generated {bad} tokens instead of {}", r.method, opts.tokens));
            }
        }
        Ok(res)
    }
}

/// Which report files a command produced.
#[derive(Default)]
pub struct Outputs {
    pub details: Option<Vec<DetailRow>>,
    pub utility: Option<Vec<UtilityRow>>,
    pub efficiency: Option<Vec<EfficiencyResult>>,
}

/// Writes the produced files plus header-only stand-ins for missing CSVs,
/// then refreshes the summary and distributions from the CSVs on disk.
pub fn write_outputs(s: &Session, out: Outputs) -> Result<Summary> {
    let dir = &s.cfg.out;
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    // Results of other steps are kept only if they came from the same run.
    let same_run = match RunConfig::load(&dir.join(CONFIG_FILE)) {
        Ok(prev) => run_id(&prev)? == s.run_id,
        Err(_) => false,
    };
    fs::write(dir.join(CONFIG_FILE), s.cfg.to_toml()?)?;
    let details_path = dir.join(DETAILS_FILE);
    let utility_path = dir.join(UTILITY_FILE);
    let efficiency_path = dir.join(EFFICIENCY_FILE);
    match out.details {
        Some(d) => write_details(&details_path, &d)?,
        None if !same_run || !details_path.exists() => write_details(&details_path, &[])?,
        None => {}
    }
    match out.utility {
        Some(u) => write_utility(&utility_path, &u)?,
        None if !same_run || !utility_path.exists() => write_utility(&utility_path, &[])?,
        None => {}
    }
    match out.efficiency {
        Some(e) => write_efficiency(&efficiency_path, &e)?,
        None if !same_run && efficiency_path.exists() => fs::remove_file(&efficiency_path)?,
        None => {}
    }
    let failures = dir.join(FAILURES_FILE);
    if s.failures.is_empty() {
        if failures.exists() {
            fs::remove_file(&failures)?;
        }
    } else {
        fs::write(&failures, s.failures.join("\n") + "\n")?;
    }
    refresh_summary(dir, &s.run_id, &s.cfg)
}

/// Recomputes `summary.json` and the distribution tables from the CSVs.
pub fn refresh_summary(dir: &Path, run_id: &str, cfg: &RunConfig) -> Result<Summary> {
    let details = read_details(&dir.join(DETAILS_FILE))?;
    let utility = read_utility(&dir.join(UTILITY_FILE))?;
    let summary = summarize(run_id, cfg.scenario.name(), cfg.seed, &details, &utility)?;
    write_summary(&dir.join(SUMMARY_FILE), &summary)?;
    write_distributions(dir, &details)?;
    Ok(summary)
}
