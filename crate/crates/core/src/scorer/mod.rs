//! Token-importance scoring.
//!
//! A scorer turns a question and an ordered list of chunk texts into scored
//! byte spans, one list per chunk. Spans only ever cover chunk text; whatever
//! framing a backend adds around the question never shows up here. The
//! [`ScorerGateway`] dispatches by backend name and validates every response
//! before it reaches the aggregator.

mod cache;
mod lexical;
mod remote;
mod uniform;

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::ScoredSpan;

pub use cache::CachedScorer;
pub use lexical::LexicalScorer;
pub use remote::{RemoteConfig, RemoteScorer, WireRequest, WireResponse, PROTOCOL_VERSION, TEXT_ENCODING};
pub use uniform::UniformScorer;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreRequest {
    #[serde(default)]
    pub question: String,
    pub chunks: Vec<String>,
    #[serde(default)]
    pub backend: String,
    #[serde(default)]
    pub options: BTreeMap<String, serde_json::Value>,
}

impl ScoreRequest {
    pub fn new(backend: impl Into<String>, question: impl Into<String>, chunks: Vec<String>) -> Self {
        ScoreRequest {
            question: question.into(),
            chunks,
            backend: backend.into(),
            options: BTreeMap::new(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.chunks.is_empty() {
            return Err(Error::validation("score request has no chunks"));
        }
        if let Some(i) = self.chunks.iter().position(|c| c.is_empty()) {
            return Err(Error::validation(format!("chunk {i} of score request is empty")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ScoreResponse {
    pub per_chunk: Vec<Vec<ScoredSpan>>,
    #[serde(default)]
    pub backend_meta: serde_json::Value,
}

pub trait Scorer: Send + Sync + fmt::Debug {
    fn name(&self) -> &str;

    fn score(&self, request: &ScoreRequest) -> Result<ScoreResponse>;
}

impl<S: Scorer + ?Sized> Scorer for Arc<S> {
    fn name(&self) -> &str {
        (**self).name()
    }

    fn score(&self, request: &ScoreRequest) -> Result<ScoreResponse> {
        (**self).score(request)
    }
}

/// Checks a response against the request it answers.
pub fn validate_response(request: &ScoreRequest, response: &ScoreResponse) -> Result<()> {
    if response.per_chunk.len() != request.chunks.len() {
        return Err(Error::protocol(format!(
            "response has {} span lists for {} chunks",
            response.per_chunk.len(),
            request.chunks.len()
        )));
    }
    for (i, (spans, chunk)) in response.per_chunk.iter().zip(&request.chunks).enumerate() {
        validate_spans(spans, chunk).map_err(|e| Error::validation(format!("chunk {i}: {e}")))?;
    }
    Ok(())
}

/// Spans must be sorted, non-overlapping, inside the chunk, on character
/// boundaries, and carry finite non-negative scores.
pub fn validate_spans(spans: &[ScoredSpan], chunk: &str) -> std::result::Result<(), String> {
    let mut prev_end = 0;
    for (j, s) in spans.iter().enumerate() {
        if !s.score.is_finite() || s.score < 0.0 {
            return Err(format!("span {j} has invalid score {}", s.score));
        }
        if s.char_start >= s.char_end {
            return Err(format!("span {j} is empty or reversed ({}..{})", s.char_start, s.char_end));
        }
        if s.char_end > chunk.len() {
            return Err(format!("span {j} ends at {} past chunk length {}", s.char_end, chunk.len()));
        }
        if !chunk.is_char_boundary(s.char_start) || !chunk.is_char_boundary(s.char_end) {
            return Err(format!("span {j} splits a character"));
        }
        if s.char_start < prev_end {
            return Err(format!("span {j} overlaps or precedes span {}", j.saturating_sub(1)));
        }
        prev_end = s.char_end;
    }
    Ok(())
}

/// Byte ranges of whitespace-delimited words.
pub(crate) fn word_spans(text: &str) -> Vec<(usize, usize)> {
    let mut spans = Vec::new();
    let mut start = None;
    for (i, ch) in text.char_indices() {
        match (ch.is_whitespace(), start) {
            (true, Some(s)) => {
                spans.push((s, i));
                start = None;
            }
            (false, None) => start = Some(i),
            _ => {}
        }
    }
    if let Some(s) = start {
        spans.push((s, text.len()));
    }
    spans
}

/// Registry of scoring backends.
#[derive(Debug, Clone, Default)]
pub struct ScorerGateway {
    backends: HashMap<String, Arc<dyn Scorer>>,
    max_batch_chunks: Option<usize>,
}

impl ScorerGateway {
    pub fn new() -> Self {
        Self::default()
    }

    /// A gateway with the offline backends `uniform` and `lexical`.
    pub fn with_offline_backends() -> Self {
        let mut gw = Self::new();
        gw.register("uniform", Arc::new(UniformScorer));
        gw.register("lexical", Arc::new(LexicalScorer::default()));
        gw
    }

    pub fn register(&mut self, name: impl Into<String>, scorer: Arc<dyn Scorer>) {
        self.backends.insert(name.into(), scorer);
    }

    /// Splits requests into sub-batches of at most `n` chunks. Only safe for
    /// backends whose per-chunk scores do not depend on the other chunks.
    pub fn with_max_batch_chunks(mut self, n: usize) -> Self {
        self.max_batch_chunks = Some(n.max(1));
        self
    }

    pub fn get(&self, name: &str) -> Result<&Arc<dyn Scorer>> {
        self.backends
            .get(name)
            .ok_or_else(|| Error::config(format!("no scorer registered as `{name}`")))
    }

    pub fn backends(&self) -> impl Iterator<Item = &str> {
        self.backends.keys().map(String::as_str)
    }

    pub fn score(&self, request: &ScoreRequest) -> Result<ScoreResponse> {
        request.validate()?;
        let scorer = self.get(&request.backend)?;
        let batch = self.max_batch_chunks.unwrap_or(usize::MAX);
        if request.chunks.len() <= batch {
            let response = scorer.score(request)?;
            validate_response(request, &response)?;
            return Ok(response);
        }

        let mut merged = ScoreResponse::default();
        let mut metas = Vec::new();
        for part in request.chunks.chunks(batch) {
            let sub = ScoreRequest {
                chunks: part.to_vec(),
                ..request.clone()
            };
            let response = scorer.score(&sub)?;
            validate_response(&sub, &response)?;
            merged.per_chunk.extend(response.per_chunk);
            metas.push(response.backend_meta);
        }
        merged.backend_meta = serde_json::json!({ "batches": metas });
        Ok(merged)
    }
}

/// A gateway pinned to one backend, usable wherever a [`Scorer`] is expected.
#[derive(Debug, Clone)]
pub struct BoundScorer<'a> {
    gateway: &'a ScorerGateway,
    backend: String,
}

impl ScorerGateway {
    pub fn bind(&self, backend: &str) -> Result<BoundScorer<'_>> {
        self.get(backend)?;
        Ok(BoundScorer {
            gateway: self,
            backend: backend.to_string(),
        })
    }
}

impl Scorer for BoundScorer<'_> {
    fn name(&self) -> &str {
        &self.backend
    }

    fn score(&self, request: &ScoreRequest) -> Result<ScoreResponse> {
        let mut request = request.clone();
        request.backend.clone_from(&self.backend);
        self.gateway.score(&request)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn req(chunks: &[&str]) -> ScoreRequest {
        ScoreRequest::new("uniform", "", chunks.iter().map(|s| s.to_string()).collect())
    }

    #[test]
    fn rejects_count_mismatch() {
        let r = req(&["a b", "c"]);
        let resp = ScoreResponse {
            per_chunk: vec![vec![]],
            backend_meta: Default::default(),
        };
        assert!(matches!(validate_response(&r, &resp), Err(Error::Protocol(_))));
    }

    #[test]
    fn rejects_bad_spans() {
        let chunk = "héllo world";
        assert!(validate_spans(&[ScoredSpan::new(0, 2, 1.0)], chunk).is_err()); // inside 'é'
        assert!(validate_spans(&[ScoredSpan::new(0, 3, f64::NAN)], chunk).is_err());
        assert!(validate_spans(&[ScoredSpan::new(0, 3, -0.5)], chunk).is_err());
        assert!(validate_spans(&[ScoredSpan::new(0, 50, 1.0)], chunk).is_err());
        assert!(validate_spans(&[ScoredSpan::new(3, 3, 1.0)], chunk).is_err());
        assert!(validate_spans(&[ScoredSpan::new(4, 6, 1.0), ScoredSpan::new(0, 3, 1.0)], chunk).is_err());
        assert!(validate_spans(&[ScoredSpan::new(0, 6, 1.0), ScoredSpan::new(5, 8, 1.0)], chunk).is_err());
        assert!(validate_spans(&[ScoredSpan::new(0, 6, 0.0), ScoredSpan::new(7, 12, 2.0)], chunk).is_ok());
    }

    #[test]
    fn rejects_empty_requests() {
        assert!(req(&[]).validate().is_err());
        assert!(req(&["a", ""]).validate().is_err());
    }

    #[test]
    fn unknown_backend_is_config_error() {
        let gw = ScorerGateway::with_offline_backends();
        let mut r = req(&["a"]);
        r.backend = "bm25".into();
        assert!(matches!(gw.score(&r), Err(Error::Config(_))));
    }

    #[test]
    fn batching_preserves_order() {
        let gw = ScorerGateway::with_offline_backends().with_max_batch_chunks(2);
        let chunks = ["a", "b c", "d e f", "g h i j", "k"];
        let whole = ScorerGateway::with_offline_backends().score(&req(&chunks)).unwrap();
        let batched = gw.score(&req(&chunks)).unwrap();
        assert_eq!(whole.per_chunk, batched.per_chunk);
        assert_eq!(batched.per_chunk[3].len(), 4);
    }

    #[test]
    fn word_spans_cover_words() {
        assert_eq!(word_spans(" ab  c\n"), vec![(1, 3), (5, 6)]);
        assert!(word_spans("   ").is_empty());
    }
}
