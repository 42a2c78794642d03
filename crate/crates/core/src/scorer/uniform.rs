use crate::error::Result;
use crate::model::ScoredSpan;

use super::{word_spans, ScoreRequest, ScoreResponse, Scorer};

/// Scores every whitespace-delimited word 1.0.
#[derive(Debug, Clone, Copy, Default)]
pub struct UniformScorer;

impl Scorer for UniformScorer {
    fn name(&self) -> &str {
        "uniform"
    }

    fn score(&self, request: &ScoreRequest) -> Result<ScoreResponse> {
        let per_chunk = request
            .chunks
            .iter()
            .map(|chunk| {
                word_spans(chunk)
                    .into_iter()
                    .map(|(s, e)| ScoredSpan::new(s, e, 1.0))
                    .collect()
            })
            .collect();
        Ok(ScoreResponse {
            per_chunk,
            backend_meta: serde_json::json!({ "backend": "uniform" }),
        })
    }
}
