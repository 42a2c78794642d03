//! Pooling of token scores into chunk and sentence importance.

use crate::error::{Error, Result};
use crate::model::{Chunk, Pooling, ScoredSpan, Sentence};
use crate::scorer::validate_spans;

/// Anything ranked by an importance score.
pub trait Scored {
    fn score(&self) -> f64;
}

impl Scored for Chunk {
    fn score(&self) -> f64 {
        self.score
    }
}

impl Scored for Sentence {
    fn score(&self) -> f64 {
        self.score
    }
}

impl Scored for f64 {
    fn score(&self) -> f64 {
        *self
    }
}

/// Pools scores; an empty input pools to 0.
pub fn pool<I: IntoIterator<Item = f64>>(scores: I, pooling: Pooling) -> f64 {
    let mut n = 0usize;
    let mut acc = 0.0;
    for s in scores {
        acc = match (pooling, n) {
            (Pooling::Max, 0) => s,
            (Pooling::Max, _) => acc.max(s),
            (Pooling::Mean | Pooling::Sum, _) => acc + s,
        };
        n += 1;
    }
    match (pooling, n) {
        (_, 0) => 0.0,
        (Pooling::Mean, n) => acc / n as f64,
        _ => acc,
    }
}

/// Fills every chunk's score from its spans.
pub fn aggregate_chunk_scores(chunks: &mut [Chunk], spans: &[Vec<ScoredSpan>], pooling: Pooling) -> Result<()> {
    if chunks.len() != spans.len() {
        return Err(Error::validation(format!(
            "{} span lists for {} chunks",
            spans.len(),
            chunks.len()
        )));
    }
    for (chunk, chunk_spans) in chunks.iter_mut().zip(spans) {
        validate_spans(chunk_spans, &chunk.text)
            .map_err(|e| Error::validation(format!("chunk {}: {e}", chunk.index_original)))?;
        chunk.score = pool(chunk_spans.iter().map(|s| s.score), pooling);
    }
    Ok(())
}

/// Fills the chunk's sentence scores. A span belongs to the sentence whose
/// tile contains its first byte.
pub fn aggregate_sentence_scores(chunk: &mut Chunk, spans: &[ScoredSpan], pooling: Pooling) -> Result<()> {
    validate_spans(spans, &chunk.text)
        .map_err(|e| Error::validation(format!("chunk {}: {e}", chunk.index_original)))?;
    if chunk.sentences.is_empty() {
        return Err(Error::validation(format!("chunk {} has no sentences", chunk.index_original)));
    }
    let mut buckets: Vec<Vec<f64>> = vec![Vec::new(); chunk.sentences.len()];
    for span in spans {
        let m = chunk
            .sentences
            .partition_point(|s| s.char_span.0 <= span.char_start)
            .saturating_sub(1);
        buckets[m].push(span.score);
    }
    for (sentence, bucket) in chunk.sentences.iter_mut().zip(buckets) {
        sentence.score = pool(bucket, pooling);
    }
    Ok(())
}

/// Indices of `units` by descending score; equal scores keep ascending index.
pub fn sort_by_importance<T: Scored>(units: &[T]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..units.len()).collect();
    order.sort_by(|&a, &b| units[b].score().total_cmp(&units[a].score()).then(a.cmp(&b)));
    order
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::segment::Segmenter;
    use crate::tokenize::WhitespaceCounter;

    fn chunk(text: &str) -> Chunk {
        Segmenter::new(Arc::new(WhitespaceCounter), 128).build_chunk(0, 0, text.into(), false)
    }

    #[test]
    fn pooling_modes() {
        let s = [0.1, 0.2, 0.3];
        assert!((pool(s, Pooling::Mean) - 0.2).abs() < 1e-15);
        assert_eq!(pool(s, Pooling::Max), 0.3);
        assert!((pool(s, Pooling::Sum) - 0.6).abs() < 1e-15);
        assert_eq!(pool([], Pooling::Mean), 0.0);
        assert_eq!(pool([], Pooling::Max), 0.0);
    }

    #[test]
    fn permutation_invariant_max() {
        assert_eq!(pool([0.3, 0.1, 0.2], Pooling::Max), pool([0.1, 0.2, 0.3], Pooling::Max));
    }

    #[test]
    fn sentence_means() {
        let mut c = chunk("Alpha beta. Gamma.");
        let spans = [
            ScoredSpan::new(0, 5, 0.4),
            ScoredSpan::new(6, 11, 0.2),
            ScoredSpan::new(12, 18, 0.6),
        ];
        aggregate_sentence_scores(&mut c, &spans, Pooling::Mean).unwrap();
        assert!((c.sentences[0].score - 0.3).abs() < 1e-15);
        assert_eq!(c.sentences[1].score, 0.6);
    }

    #[test]
    fn zero_and_missing_spans() {
        let mut c = chunk("One. Two. Three.");
        aggregate_sentence_scores(&mut c, &[ScoredSpan::new(0, 4, 0.0)], Pooling::Mean).unwrap();
        assert!(c.sentences.iter().all(|s| s.score == 0.0));

        let mut chunks = vec![c];
        aggregate_chunk_scores(&mut chunks, &[vec![]], Pooling::Mean).unwrap();
        assert_eq!(chunks[0].score, 0.0);
    }

    #[test]
    fn whitespace_led_span_goes_to_later_sentence() {
        let mut c = chunk("One. Two.");
        // " Two." starts in the second tile.
        aggregate_sentence_scores(&mut c, &[ScoredSpan::new(4, 9, 1.0)], Pooling::Sum).unwrap();
        assert_eq!(c.sentences[0].score, 0.0);
        assert_eq!(c.sentences[1].score, 1.0);
    }

    #[test]
    fn misaligned_spans_rejected() {
        let mut cs = vec![chunk("a b")];
        assert!(aggregate_chunk_scores(&mut cs, &[], Pooling::Mean).is_err());
        let mut c = chunk("a b");
        assert!(aggregate_sentence_scores(&mut c, &[ScoredSpan::new(0, 9, 1.0)], Pooling::Mean).is_err());
    }

    #[test]
    fn stable_descending_sort() {
        assert_eq!(sort_by_importance(&[0.2, 0.5, 0.2]), [1, 0, 2]);
        assert_eq!(sort_by_importance(&[0.7, 0.7, 0.7]), [0, 1, 2]);
        assert_eq!(sort_by_importance(&[0.9, 0.5, 0.1]), [0, 1, 2]);
    }
}
