//! Ablation variants of the compressor.
//!
//! `ChunkOnly` and `SentenceOnly` are the regular compressor with the chunk
//! share pinned to 1 or 0. `TokenOnly` is a diagnostic that keeps the top
//! scoring spans verbatim and joins them with spaces; it breaks sentence
//! structure and exists only for comparison.

use std::fmt;
use std::str::FromStr;

use r2c_core::compress::{plan_budgets, select_prefix};
use r2c_core::scorer::Scorer;
use r2c_core::{CompressionConfig, Compressor, Prompt};
use serde::{Deserialize, Serialize};

use crate::error::{EvalError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Ablation {
    #[default]
    Full,
    ChunkOnly,
    SentenceOnly,
    TokenOnly,
}

impl Ablation {
    /// The compressor configuration this variant runs with.
    pub fn apply(self, mut config: CompressionConfig) -> CompressionConfig {
        match self {
            Ablation::ChunkOnly => config.rho = 1.0,
            Ablation::SentenceOnly => config.rho = 0.0,
            Ablation::Full | Ablation::TokenOnly => {}
        }
        config
    }
}

impl FromStr for Ablation {
    type Err = EvalError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('_', "-").as_str() {
            "full" | "none" => Ok(Ablation::Full),
            "chunk-only" | "chunks" => Ok(Ablation::ChunkOnly),
            "sentence-only" | "sentences" => Ok(Ablation::SentenceOnly),
            "token-only" | "tokens" => Ok(Ablation::TokenOnly),
            other => Err(EvalError::Config(format!("unknown ablation `{other}`"))),
        }
    }
}

impl fmt::Display for Ablation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Ablation::Full => "full",
            Ablation::ChunkOnly => "chunk-only",
            Ablation::SentenceOnly => "sentence-only",
            Ablation::TokenOnly => "token-only",
        })
    }
}

/// Token accounting shared by every variant.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VariantOutput {
    pub compressed_context: String,
    pub original_tokens: usize,
    pub compressed_tokens: usize,
    pub output_tokens: usize,
}

pub fn run_variant(ablation: Ablation, compressor: &Compressor, prompt: &Prompt, scorer: &dyn Scorer) -> Result<VariantOutput> {
    if ablation == Ablation::TokenOnly {
        return token_only(compressor, prompt, scorer);
    }
    let r = compressor.compress(prompt, scorer)?;
    Ok(VariantOutput {
        compressed_context: r.compressed_context,
        original_tokens: r.original_tokens,
        compressed_tokens: r.compressed_tokens,
        output_tokens: r.output_tokens,
    })
}

/// Ranks every scored span of the context, drops the weakest until the
/// removal budget would be overshot, and joins the survivors in textual
/// order with single spaces. Tokens outside any span are always removed and
/// are charged against the budget first.
pub fn token_only(compressor: &Compressor, prompt: &Prompt, scorer: &dyn Scorer) -> Result<VariantOutput> {
    let counter = compressor.counter();
    let chunks = compressor.segment(prompt)?;
    let fixed = compressor.fixed_tokens(prompt);
    let context_tokens: usize = chunks.iter().map(|c| c.token_count).sum();
    let original_tokens = fixed + context_tokens;
    let e_comp = plan_budgets(original_tokens, compressor.config()).e_comp;
    if e_comp == 0 {
        return Ok(VariantOutput {
            compressed_context: prompt.context.clone(),
            original_tokens,
            compressed_tokens: original_tokens,
            output_tokens: fixed + counter.count(&prompt.context),
        });
    }

    let scored = compressor.score_chunks(&prompt.question, chunks, scorer)?;
    let mut pieces: Vec<(f64, &str, usize)> = Vec::new();
    for (chunk, spans) in scored.chunks.iter().zip(&scored.spans) {
        for s in spans {
            let text = &chunk.text[s.char_start..s.char_end];
            pieces.push((s.score, text, counter.count(text)));
        }
    }
    let covered: usize = pieces.iter().map(|p| p.2).sum();
    let uncovered = context_tokens.saturating_sub(covered);

    let mut order: Vec<usize> = (0..pieces.len()).collect();
    order.sort_by(|&a, &b| pieces[b].0.total_cmp(&pieces[a].0).then(a.cmp(&b)));
    let sizes: Vec<usize> = order.iter().map(|&i| pieces[i].2).collect();
    let sel = select_prefix(&sizes, e_comp.saturating_sub(uncovered));
    let mut kept = order[..sel.kept].to_vec();
    kept.sort_unstable();

    let compressed_context = kept
        .iter()
        .map(|&i| pieces[i].1.trim())
        .filter(|t| !t.is_empty())
        .collect::<Vec<_>>()
        .join(" ");
    let removed = (uncovered + sel.removed_tokens).min(context_tokens);
    Ok(VariantOutput {
        output_tokens: fixed + counter.count(&compressed_context),
        compressed_context,
        original_tokens,
        compressed_tokens: original_tokens - removed,
    })
}
