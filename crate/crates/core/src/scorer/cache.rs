use std::collections::HashMap;
use std::sync::Mutex;

use crate::error::Result;

use super::{ScoreRequest, ScoreResponse, Scorer};

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
struct Key {
    backend: String,
    checkpoint: String,
    question: String,
    chunks: Vec<String>,
}

/// Memoizes responses of an inner scorer.
///
/// The key holds the whole chunk list, not single chunks: attention
/// normalized across all chunks makes a chunk's scores depend on its
/// neighbours.
#[derive(Debug)]
pub struct CachedScorer<S> {
    inner: S,
    checkpoint: String,
    entries: Mutex<HashMap<Key, ScoreResponse>>,
}

impl<S: Scorer> CachedScorer<S> {
    pub fn new(inner: S, checkpoint: impl Into<String>) -> Self {
        CachedScorer {
            inner,
            checkpoint: checkpoint.into(),
            entries: Mutex::new(HashMap::new()),
        }
    }

    pub fn len(&self) -> usize {
        self.entries.lock().map(|m| m.len()).unwrap_or(0)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

impl<S: Scorer> Scorer for CachedScorer<S> {
    fn name(&self) -> &str {
        self.inner.name()
    }

    fn score(&self, request: &ScoreRequest) -> Result<ScoreResponse> {
        let key = Key {
            backend: request.backend.clone(),
            checkpoint: self.checkpoint.clone(),
            question: request.question.clone(),
            chunks: request.chunks.clone(),
        };
        if let Some(hit) = self.entries.lock().unwrap_or_else(|e| e.into_inner()).get(&key) {
            return Ok(hit.clone());
        }
        // Not held across the call so concurrent misses do not serialize.
        let response = self.inner.score(request)?;
        self.entries
            .lock()
            .unwrap_or_else(|e| e.into_inner())
            .insert(key, response.clone());
        Ok(response)
    }
}

#[cfg(test)]
mod tests {
    use std::sync::atomic::{AtomicUsize, Ordering};

    use super::*;
    use crate::scorer::UniformScorer;

    #[derive(Debug, Default)]
    struct Counting(AtomicUsize);

    impl Scorer for Counting {
        fn name(&self) -> &str {
            "counting"
        }

        fn score(&self, request: &ScoreRequest) -> Result<ScoreResponse> {
            self.0.fetch_add(1, Ordering::SeqCst);
            UniformScorer.score(request)
        }
    }

    #[test]
    fn hits_skip_the_inner_scorer() {
        let cached = CachedScorer::new(Counting::default(), "ckpt-a");
        let a = ScoreRequest::new("x", "q", vec!["one two".into()]);
        let b = ScoreRequest::new("x", "other q", vec!["one two".into()]);
        let first = cached.score(&a).unwrap();
        assert_eq!(cached.score(&a).unwrap(), first);
        cached.score(&b).unwrap();
        assert_eq!(cached.inner.0.load(Ordering::SeqCst), 2);
        assert_eq!(cached.len(), 2);
    }
}
