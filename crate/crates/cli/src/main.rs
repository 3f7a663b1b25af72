//! `takedown`: prepare corpora, evaluate takedown methods, and report.

mod config;
mod pipeline;
mod prepare;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use takedown::corpus::{write_corpus, Domain};
use takedown::eval::Scenario;
use takedown::membership::DEFAULT_FP_TARGET;
use takedown::testbed::{generate_corpus, TestbedConfig};

use crate::config::RunConfig;
use crate::pipeline::{make_embedder, write_outputs, Outputs, Session};
use crate::prepare::{prepare, PrepareArgs};

const EMBEDDER_ENV: &str = "TAKEDOWN_EMBEDDER_CMD";

#[derive(Parser)]
#[command(name = "takedown", version, about = "Evaluate copyright takedown methods on a toy language model")]
struct Cli {
    /// Worker threads for risk and utility scoring (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a synthetic corpus with unique n-gram contexts.
    Synth(SynthArgs),
    /// Split a corpus into blocklisted, retain and in-domain sets and build
    /// the n-gram filters and vector store.
    Prepare(PrepareCli),
    /// Score regurgitation risk for every arm.
    Risk(RunArgs),
    /// Score QA and summary utility for every arm.
    Utility(RunArgs),
    /// Measure decoding speed for every arm.
    Efficiency(RunArgs),
    /// Risk, utility and efficiency in one go.
    Run(RunArgs),
    /// Recompute the summary of a run directory and print it.
    Report {
        dir: PathBuf,
    },
}

#[derive(Args)]
struct SynthArgs {
    /// Output JSONL file.
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 20)]
    n_block: usize,
    #[arg(long, default_value_t = 20)]
    n_retain: usize,
    #[arg(long, default_value_t = 20)]
    n_in_domain: usize,
    #[arg(long, default_value_t = 320)]
    doc_words: usize,
    #[arg(long, default_value_t = 2)]
    questions: usize,
    #[arg(long, default_value_t = 40)]
    summary_words: usize,
    /// news or books.
    #[arg(long, default_value = "news")]
    domain: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct PrepareCli {
    /// Corpus JSONL file.
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long, default_value_t = 1000)]
    n_block: usize,
    #[arg(long, default_value_t = 1000)]
    n_retain: usize,
    #[arg(long)]
    out: PathBuf,
    /// Overwrite a non-empty output directory.
    #[arg(long)]
    force: bool,
    /// Bloom filter false-positive target.
    #[arg(long, default_value_t = DEFAULT_FP_TARGET)]
    fp_target: f64,
    /// Words per vector-store chunk.
    #[arg(long, default_value_t = takedown::corpus::DEFAULT_HINT_LEN)]
    chunk_words: usize,
    /// External embedder command speaking JSON lines on stdin/stdout.
    #[arg(long, env = EMBEDDER_ENV)]
    embedder: Option<String>,
}

/// Flags override the config file key of the same name.
#[derive(Args)]
struct RunArgs {
    /// TOML run configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Prepared data directory [default: prepared].
    #[arg(long)]
    data: Option<PathBuf>,
    /// memorization or rag [default: memorization].
    #[arg(long)]
    scenario: Option<Scenario>,
    /// Seed for all randomness [default: 0].
    #[arg(long)]
    seed: Option<u64>,
    /// Run directory [default: run].
    #[arg(long)]
    out: Option<PathBuf>,
    /// Risk examples [default: 1000].
    #[arg(long)]
    risk_examples: Option<usize>,
    /// Utility tasks per split and task kind [default: 500].
    #[arg(long)]
    utility_tasks: Option<usize>,
    /// Examples timed for efficiency [default: 20].
    #[arg(long)]
    efficiency_examples: Option<usize>,
    /// Tokens generated per efficiency example [default: 200].
    #[arg(long)]
    efficiency_tokens: Option<usize>,
    /// Timed passes over the efficiency examples [default: 1].
    #[arg(long)]
    efficiency_repeats: Option<usize>,
    /// Hint length in words [default: 100].
    #[arg(long)]
    hint_len: Option<usize>,
    /// Ground-truth length in words [default: 200].
    #[arg(long)]
    span_len: Option<usize>,
    /// Minimum common span length for ACS [default: 3].
    #[arg(long)]
    acs_min_len: Option<usize>,
    /// MinHash permutations [default: 128].
    #[arg(long)]
    num_perm: Option<usize>,
    /// Add every hyperparameter grid point as an arm.
    #[arg(long)]
    sweep: bool,
    /// External embedder command speaking JSON lines on stdin/stdout.
    #[arg(long, env = EMBEDDER_ENV)]
    embedder: Option<String>,
}

impl RunArgs {
    fn resolve(&self) -> Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(p) => RunConfig::load(p)?,
            None => RunConfig::default(),
        };
        macro_rules! over {
            ($($f:ident),*) => { $( if let Some(v) = self.$f.clone() { cfg.$f = v; } )* };
        }
        over!(data, scenario, seed, out, risk_examples, utility_tasks, efficiency_examples, efficiency_tokens,
              efficiency_repeats, hint_len, span_len, acs_min_len, num_perm);
        if self.sweep {
            cfg.sweep = true;
        }
        if self.embedder.is_some() {
            cfg.embedder = self.embedder.clone();
        }
        Ok(cfg)
    }
}

#[derive(Clone, Copy, PartialEq)]
enum Steps {
    Risk,
    Utility,
    Efficiency,
    All,
}

fn evaluate(args: &RunArgs, steps: Steps) -> Result<bool> {
    let mut s = Session::open(args.resolve()?)?;
    let mut out = Outputs::default();
    if matches!(steps, Steps::Risk | Steps::All) {
        out.details = Some(s.risk()?);
    }
    if matches!(steps, Steps::Utility | Steps::All) {
        out.utility = Some(s.utility()?);
    }
    if matches!(steps, Steps::Efficiency | Steps::All) {
        out.efficiency = Some(s.efficiency()?);
    }
    for w in &s.warnings {
        eprintln!("warning: {w}");
    }
    write_outputs(&s, out)?;
    print!("{}", report::report(&s.cfg.out)?);
    for f in &s.failures {
        eprintln!("failure: {f}");
    }
    Ok(s.failures.is_empty())
}

fn synth(a: &SynthArgs) -> Result<()> {
    let domain = match a.domain.as_str() {
        "news" => Domain::News,
        "books" => Domain::Books,
        d => anyhow::bail!("unknown domain {d:?} (news or books)"),
    };
    let cfg = TestbedConfig {
        n_block: a.n_block,
        n_retain: a.n_retain,
        n_in_domain: a.n_in_domain,
        doc_words: a.doc_words,
        questions_per_doc: a.questions,
        summary_words: a.summary_words,
        domain,
        seed: a.seed,
        ..TestbedConfig::default()
    };
    if let Some(parent) = a.out.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent)?;
    }
    write_corpus(&a.out, &generate_corpus(&cfg))?;
    Ok(())
}

fn dispatch(cli: Cli) -> Result<bool> {
    if let Some(j) = cli.jobs {
        rayon::ThreadPoolBuilder::new().num_threads(j).build_global().context("configuring worker threads")?;
    }
    match cli.command {
        Command::Synth(a) => synth(&a).map(|_| true),
        Command::Prepare(a) => {
            let (embedder, embedder_id) = make_embedder(a.embedder.as_deref())?;
            let m = prepare(&PrepareArgs {
                corpus: &a.corpus,
                n_block: a.n_block,
                n_retain: a.n_retain,
                out: &a.out,
                force: a.force,
                fp_target: a.fp_target,
                chunk_words: a.chunk_words,
                embedder: embedder.as_ref(),
                embedder_id,
            })?;
            println!(
                "prepared {}: {} blocklisted, {} retain, {} in-domain",
                a.out.display(),
                m.n_blocklisted,
                m.n_retain,
                m.n_in_domain
            );
            Ok(true)
        }
        Command::Risk(a) => evaluate(&a, Steps::Risk),
        Command::Utility(a) => evaluate(&a, Steps::Utility),
        Command::Efficiency(a) => evaluate(&a, Steps::Efficiency),
        Command::Run(a) => evaluate(&a, Steps::All),
        Command::Report { dir } => {
            print!("{}", report::report(&dir)?);
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
