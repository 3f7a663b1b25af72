use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};
use takedown::corpus::{load_corpus, split_corpus, write_corpus, CorpusSplit, Document};
use takedown::hashing::xxh64;
use takedown::membership::{BloomFilter, NGRAM_GRID};
use takedown::retrieval::{build_store, Embedder};

pub const BLOCKLISTED_FILE: &str = "blocklisted.jsonl";
pub const RETAIN_FILE: &str = "retain.jsonl";
pub const IN_DOMAIN_FILE: &str = "in_domain.jsonl";
pub const STORE_FILE: &str = "store.jsonl";
pub const MANIFEST_FILE: &str = "manifest.json";

pub fn bloom_file(n: usize) -> String {
    format!("bloom_n{n}.bin")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub corpus_xxh64: String,
    pub n_blocklisted: usize,
    pub n_retain: usize,
    pub n_in_domain: usize,
    pub ngram_sizes: Vec<usize>,
    pub fp_target: f64,
    pub chunk_words: usize,
    /// Identifies the embedder the store was built with.
    pub embedder: String,
    pub embed_dim: usize,
}

pub struct PrepareArgs<'a> {
    pub corpus: &'a Path,
    pub n_block: usize,
    pub n_retain: usize,
    pub out: &'a Path,
    pub force: bool,
    pub fp_target: f64,
    pub chunk_words: usize,
    pub embedder: &'a dyn Embedder<f64>,
    pub embedder_id: String,
}

fn is_nonempty_dir(p: &Path) -> Result<bool> {
    Ok(p.is_dir() && fs::read_dir(p)?.next().is_some())
}

pub fn prepare(args: &PrepareArgs<'_>) -> Result<Manifest> {
    if is_nonempty_dir(args.out)? && !args.force {
        bail!("output directory {} is not empty (use --force to overwrite)", args.out.display());
    }
    if args.chunk_words == 0 {
        bail!("--chunk-words must be positive");
    }
    let bytes = fs::read(args.corpus).with_context(|| format!("reading corpus {}", args.corpus.display()))?;
    let docs = load_corpus(args.corpus)?;
    let split = split_corpus(&docs, args.n_block, args.n_retain)?;
    fs::create_dir_all(args.out)?;
    write_corpus(&args.out.join(BLOCKLISTED_FILE), &split.blocklisted)?;
    write_corpus(&args.out.join(RETAIN_FILE), &split.retain)?;
    write_corpus(&args.out.join(IN_DOMAIN_FILE), &split.in_domain)?;
    for n in NGRAM_GRID {
        BloomFilter::build(&split.blocklisted, n, args.fp_target)?.save(&args.out.join(bloom_file(n)))?;
    }
    build_store(&split.blocklisted, args.chunk_words, args.embedder)?.save_jsonl(&args.out.join(STORE_FILE))?;
    let manifest = Manifest {
        corpus_xxh64: format!("{:016x}", xxh64(0, &bytes)),
        n_blocklisted: split.blocklisted.len(),
        n_retain: split.retain.len(),
        n_in_domain: split.in_domain.len(),
        ngram_sizes: NGRAM_GRID.to_vec(),
        fp_target: args.fp_target,
        chunk_words: args.chunk_words,
        embedder: args.embedder_id.clone(),
        embed_dim: args.embedder.dim(),
    };
    fs::write(args.out.join(MANIFEST_FILE), serde_json::to_string_pretty(&manifest)? + "\n")?;
    Ok(manifest)
}

/// A prepared data directory.
pub struct Prepared {
    pub dir: PathBuf,
    pub manifest: Manifest,
    pub split: CorpusSplit,
}

impl Prepared {
    pub fn load(dir: &Path) -> Result<Self> {
        let missing: Vec<&str> = [MANIFEST_FILE, BLOCKLISTED_FILE, RETAIN_FILE, IN_DOMAIN_FILE]
            .into_iter()
            .filter(|f| !dir.join(f).exists())
            .collect();
        if !missing.is_empty() {
            bail!("{} is not a prepared directory; missing {}", dir.display(), missing.join(", "));
        }
        let manifest: Manifest = serde_json::from_str(&fs::read_to_string(dir.join(MANIFEST_FILE))?)
            .with_context(|| format!("parsing {}", dir.join(MANIFEST_FILE).display()))?;
        let read = |f: &str| -> Result<Vec<Document>> {
            load_corpus(&dir.join(f)).with_context(|| format!("reading {}", dir.join(f).display()))
        };
        let split = CorpusSplit { blocklisted: read(BLOCKLISTED_FILE)?, retain: read(RETAIN_FILE)?, in_domain: read(IN_DOMAIN_FILE)? };
        Ok(Self { dir: dir.to_owned(), manifest, split })
    }
}
