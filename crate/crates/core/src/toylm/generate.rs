use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::hashing::derive_seed;
use crate::interventions::{apply_system_prompt_ids, memfree_select, rcad_logits, topk_perturb, Intervention};
use crate::membership::NGramStore;
use crate::scalar::Real;
use crate::toylm::{CopyAugmentedLM, LanguageModel, LmError, TokenId, ToyModel};

/// Fixed generation length of the efficiency protocol.
pub const DEFAULT_EFFICIENCY_TOKENS: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DecoderConfig {
    pub max_new: usize,
}

impl DecoderConfig {
    pub fn new(max_new: usize) -> Self {
        Self { max_new }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Generation<T> {
    /// The prompt actually fed to the model, after system prompts.
    pub prompt: Vec<TokenId>,
    pub tokens: Vec<TokenId>,
    /// Base-model log-probability of each chosen token.
    pub logprobs: Vec<T>,
    /// Steps at which MemFree found every candidate blocked.
    pub memfree_exhausted: Vec<usize>,
    /// Steps at which MemFree replaced the top candidate.
    pub memfree_substitutions: usize,
}

struct RcadStream<'a, T> {
    alpha: T,
    model: CopyAugmentedLM<'a, T>,
    history: Vec<TokenId>,
}

/// Greedy decoding of exactly `max_new` tokens.
///
/// System prompts are prefixed first, in declared order. Each step then
/// takes the base logits, applies Top-k perturbation and R-CAD in declared
/// order, and picks the argmax (lowest id on ties). MemFree filters the
/// ranked candidates at selection time. Top-k noise for the `i`-th
/// perturbation uses a ChaCha8 stream seeded from its own seed and `seed`.
pub fn generate<T: Real>(
    model: &ToyModel<T>,
    prompt: &[TokenId],
    decoder: &DecoderConfig,
    interventions: &[Intervention<T>],
    seed: u64,
) -> Result<Generation<T>, LmError> {
    if decoder.max_new == 0 {
        return Err(LmError::ZeroMaxNew);
    }
    let mut full_prompt = prompt.to_vec();
    for iv in interventions {
        if let Intervention::SystemPrompt { tokens, .. } = iv {
            full_prompt = apply_system_prompt_ids(&full_prompt, tokens);
        }
    }
    let stream = model.bind(&full_prompt);
    let mut rngs: Vec<ChaCha8Rng> = interventions
        .iter()
        .filter_map(|iv| match iv {
            Intervention::TopK(cfg) => Some(ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, seed))),
            _ => None,
        })
        .collect();
    let mut rcad: Vec<RcadStream<'_, T>> = interventions
        .iter()
        .filter_map(|iv| match iv {
            Intervention::Rcad { alpha, context: Some(c) } => {
                Some(RcadStream { alpha: *alpha, model: model.bind(c), history: c.clone() })
            }
            _ => None,
        })
        .collect();
    let stores: Vec<&NGramStore> = interventions
        .iter()
        .filter_map(|iv| match iv {
            Intervention::MemFree(s) => Some(s.as_ref()),
            _ => None,
        })
        .collect();

    let vocab = model.vocab();
    let mut history = full_prompt.clone();
    let mut out = Generation {
        prompt: full_prompt,
        tokens: Vec::with_capacity(decoder.max_new),
        logprobs: Vec::with_capacity(decoder.max_new),
        memfree_exhausted: Vec::new(),
        memfree_substitutions: 0,
    };
    let mut words: Vec<&str> = Vec::new();
    for step in 0..decoder.max_new {
        let base = stream.logits(&history);
        let mut logits = base.clone();
        let (mut ri, mut si) = (0, 0);
        for iv in interventions {
            match iv {
                Intervention::TopK(cfg) => {
                    topk_perturb(&mut logits, cfg, &mut rngs[ri]);
                    ri += 1;
                }
                Intervention::Rcad { context: Some(_), .. } => {
                    let s = &rcad[si];
                    logits = rcad_logits(&logits, &s.model.logits(&s.history), s.alpha)
                        .map_err(|e| LmError::Format(e.to_string()))?;
                    si += 1;
                }
                _ => {}
            }
        }
        let top = logits.argmax();
        let chosen = if stores.is_empty() {
            top
        } else {
            let (c, exhausted) = memfree_select(&logits, top, &words, &stores, vocab);
            if exhausted {
                out.memfree_exhausted.push(step);
            }
            if c != top {
                out.memfree_substitutions += 1;
            }
            c
        };
        out.tokens.push(chosen);
        out.logprobs.push(base[chosen]);
        history.push(chosen);
        for s in rcad.iter_mut() {
            s.history.push(chosen);
        }
        if let Some(w) = vocab.canonical(chosen) {
            words.push(w);
        }
    }
    Ok(out)
}
