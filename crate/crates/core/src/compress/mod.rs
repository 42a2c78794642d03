//! Coarse-to-fine compression.
//!
//! The removal budget `E_comp = |P| - T` is split between whole chunks
//! (`rho * E_comp`) and sentences (the rest). Chunks are dropped from the
//! least important end until the next drop would overshoot; the sentence
//! budget is then spread over the surviving chunks in proportion to their
//! inverted importance, so weak chunks lose more sentences than strong ones.

mod budget;
mod select;

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::aggregate::{aggregate_chunk_scores, aggregate_sentence_scores, sort_by_importance};
use crate::error::Result;
use crate::model::{Chunk, CompressionConfig, OutputOrder, Prompt, ScoredSpan};
use crate::scorer::{validate_response, ScoreRequest, Scorer};
use crate::segment::Segmenter;
use crate::tokenize::TokenCounter;

pub use budget::{allocate_sentence_budgets, plan_budgets, sentence_budget_shares, BudgetPlan};
pub use select::{select_chunks, select_prefix, select_sentences, Selection};

/// A chunk that survived the chunk stage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KeptChunk {
    pub original_index: usize,
    pub score: f64,
    pub token_count: usize,
    pub sentence_budget: usize,
    /// Indices of kept sentences, ascending.
    pub kept_sentences: Vec<usize>,
    pub removed_tokens: usize,
    /// Token count of the least important sentence still kept.
    pub last_kept_sentence_tokens: Option<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AuditFlags {
    /// The prompt already fit the target.
    pub noop: bool,
    /// The chunk budget covered the whole context.
    pub all_chunks_dropped: bool,
    pub empty_output: bool,
    /// Some chunk came from an over-long line cut at token boundaries.
    pub hard_split: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompressionResult {
    pub compressed_context: String,
    /// Instruction + question + all chunk tokens.
    pub original_tokens: usize,
    /// `original_tokens` minus everything removed, by unit accounting.
    pub compressed_tokens: usize,
    /// Instruction + question + the joined compressed context, recounted.
    pub output_tokens: usize,
    pub budget: BudgetPlan,
    /// Sentence budget actually distributed (differs from `budget.e_sent`
    /// only with slack roll-over).
    pub sentence_budget_total: usize,
    /// Kept chunks in selection order (descending importance).
    pub kept_chunks: Vec<KeptChunk>,
    /// Original indices of dropped chunks, in selection order.
    pub dropped_chunks: Vec<usize>,
    /// Original indices of non-empty chunks in output order.
    pub output_order: Vec<usize>,
    pub removed_chunk_tokens: usize,
    pub removed_sentence_tokens: usize,
    pub flags: AuditFlags,
    pub tokenizer: String,
    pub config: CompressionConfig,
}

impl CompressionResult {
    pub fn last_kept_chunk_tokens(&self) -> Option<usize> {
        self.kept_chunks.last().map(|c| c.token_count)
    }
}

/// Chunks with importance filled in, plus the spans they came from.
#[derive(Debug, Clone)]
pub struct ScoredContext {
    pub chunks: Vec<Chunk>,
    pub spans: Vec<Vec<ScoredSpan>>,
    pub backend_meta: serde_json::Value,
}

#[derive(Debug, Clone)]
pub struct Compressor {
    config: CompressionConfig,
    segmenter: Segmenter,
}

impl Compressor {
    pub fn new(config: CompressionConfig, counter: Arc<dyn TokenCounter>) -> Result<Self> {
        config.validate()?;
        let segmenter = Segmenter::new(counter, config.max_chunk_tokens);
        Ok(Compressor { config, segmenter })
    }

    pub fn with_segmenter(config: CompressionConfig, segmenter: Segmenter) -> Result<Self> {
        config.validate()?;
        Ok(Compressor { config, segmenter })
    }

    pub fn config(&self) -> &CompressionConfig {
        &self.config
    }

    pub fn segmenter(&self) -> &Segmenter {
        &self.segmenter
    }

    pub fn counter(&self) -> &Arc<dyn TokenCounter> {
        self.segmenter.counter()
    }

    /// Tokens of the prompt parts that are never compressed.
    pub fn fixed_tokens(&self, prompt: &Prompt) -> usize {
        let counter = self.counter();
        counter.count(&prompt.instruction) + counter.count(&prompt.question)
    }

    pub fn segment(&self, prompt: &Prompt) -> Result<Vec<Chunk>> {
        prompt.validate()?;
        self.segmenter
            .segment_context(&prompt.context, prompt.unit_hints.as_deref())
    }

    /// Scores already-segmented chunks and pools the token scores into chunk
    /// and sentence importance.
    pub fn score_chunks(&self, question: &str, mut chunks: Vec<Chunk>, scorer: &dyn Scorer) -> Result<ScoredContext> {
        let request = ScoreRequest::new(
            scorer.name(),
            question,
            chunks.iter().map(|c| c.text.clone()).collect(),
        );
        let response = scorer.score(&request)?;
        validate_response(&request, &response)?;
        let pooling = self.config.pooling;
        aggregate_chunk_scores(&mut chunks, &response.per_chunk, pooling)?;
        for (chunk, spans) in chunks.iter_mut().zip(&response.per_chunk) {
            aggregate_sentence_scores(chunk, spans, pooling)?;
        }
        Ok(ScoredContext {
            chunks,
            spans: response.per_chunk,
            backend_meta: response.backend_meta,
        })
    }

    /// Full pipeline: segment, score, aggregate, prune, and rejoin.
    pub fn compress(&self, prompt: &Prompt, scorer: &dyn Scorer) -> Result<CompressionResult> {
        let chunks = self.segment(prompt)?;
        let fixed = self.fixed_tokens(prompt);
        let original = fixed + chunks.iter().map(|c| c.token_count).sum::<usize>();
        if plan_budgets(original, &self.config).e_comp == 0 {
            let mut result = self.compress_scored(chunks, fixed);
            result.compressed_context = prompt.context.clone();
            result.output_tokens = fixed + self.counter().count(&prompt.context);
            return Ok(result);
        }
        let scored = self.score_chunks(&prompt.question, chunks, scorer)?;
        Ok(self.compress_scored(scored.chunks, fixed))
    }

    /// Pruning and joining over chunks whose scores are already set.
    /// `fixed_tokens` counts the uncompressed instruction and question.
    pub fn compress_scored(&self, chunks: Vec<Chunk>, fixed_tokens: usize) -> CompressionResult {
        let cfg = &self.config;
        let context_tokens: usize = chunks.iter().map(|c| c.token_count).sum();
        let original_tokens = fixed_tokens + context_tokens;
        let mut budget = plan_budgets(original_tokens, cfg);

        let order = sort_by_importance(&chunks);
        let sizes: Vec<usize> = order.iter().map(|&i| chunks[i].token_count).collect();
        let chunk_sel = select_chunks(&sizes, budget.e_chunk);
        let (kept_idx, dropped_idx) = order.split_at(chunk_sel.kept);

        let mut sentence_budget_total = budget.e_sent;
        if cfg.slack_rollover {
            sentence_budget_total += budget.e_chunk - chunk_sel.removed_tokens;
        }
        let kept_scores: Vec<f64> = kept_idx.iter().map(|&i| chunks[i].score).collect();
        budget.per_chunk_budgets =
            allocate_sentence_budgets(&kept_scores, sentence_budget_total, cfg.gamma, cfg.epsilon);

        let mut kept_chunks = Vec::with_capacity(kept_idx.len());
        let mut removed_sentence_tokens = 0;
        for (&ci, &sent_budget) in kept_idx.iter().zip(&budget.per_chunk_budgets) {
            let chunk = &chunks[ci];
            let sent_order = sort_by_importance(&chunk.sentences);
            let sent_sizes: Vec<usize> = sent_order.iter().map(|&m| chunk.sentences[m].token_count).collect();
            let sel = select_sentences(&sent_sizes, sent_budget);
            let mut kept_sentences = sent_order[..sel.kept].to_vec();
            kept_sentences.sort_unstable();
            removed_sentence_tokens += sel.removed_tokens;
            kept_chunks.push(KeptChunk {
                original_index: chunk.index_original,
                score: chunk.score,
                token_count: chunk.token_count,
                sentence_budget: sent_budget,
                kept_sentences,
                removed_tokens: sel.removed_tokens,
                last_kept_sentence_tokens: sel.kept.checked_sub(1).map(|k| sent_sizes[k]),
            });
        }

        let (compressed_context, output_order) = restore_order_and_join(&chunks, &kept_chunks, cfg.ordering);
        let counter = self.counter();
        let output_tokens = fixed_tokens + counter.count(&compressed_context);
        let removed_chunk_tokens = chunk_sel.removed_tokens;
        let flags = AuditFlags {
            noop: budget.e_comp == 0,
            all_chunks_dropped: !chunks.is_empty() && kept_chunks.is_empty(),
            empty_output: compressed_context.is_empty(),
            hard_split: chunks.iter().any(|c| c.hard_split),
        };
        CompressionResult {
            compressed_context,
            original_tokens,
            compressed_tokens: original_tokens - removed_chunk_tokens - removed_sentence_tokens,
            output_tokens,
            budget,
            sentence_budget_total,
            kept_chunks,
            dropped_chunks: dropped_idx.iter().map(|&i| chunks[i].index_original).collect(),
            output_order,
            removed_chunk_tokens,
            removed_sentence_tokens,
            flags,
            tokenizer: counter.name().to_string(),
            config: cfg.clone(),
        }
    }
}

/// Renders the kept structure. Chunks are separated by a newline; a chunk
/// with every sentence kept is emitted verbatim, otherwise its kept
/// sentences are joined by single spaces. Chunks that lost every sentence
/// are skipped. Returns the text and the original indices in output order.
pub fn restore_order_and_join(chunks: &[Chunk], kept: &[KeptChunk], ordering: OutputOrder) -> (String, Vec<usize>) {
    let by_index = |idx: usize| chunks.iter().find(|c| c.index_original == idx);
    let mut emitted: Vec<&KeptChunk> = kept.iter().filter(|k| !k.kept_sentences.is_empty()).collect();
    if ordering == OutputOrder::Original {
        emitted.sort_by_key(|k| k.original_index);
    }
    let mut out = String::new();
    let mut order = Vec::with_capacity(emitted.len());
    for k in emitted {
        let Some(chunk) = by_index(k.original_index) else {
            continue;
        };
        if !out.is_empty() {
            out.push('\n');
        }
        if k.kept_sentences.len() == chunk.sentences.len() {
            out.push_str(&chunk.text);
        } else {
            let parts: Vec<&str> = k
                .kept_sentences
                .iter()
                .map(|&m| chunk.sentences[m].text.as_str())
                .collect();
            out.push_str(&parts.join(" "));
        }
        order.push(k.original_index);
    }
    (out, order)
}
