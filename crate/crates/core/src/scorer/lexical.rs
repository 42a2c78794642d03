use std::collections::HashSet;

use crate::error::Result;
use crate::model::ScoredSpan;

use super::{word_spans, ScoreRequest, ScoreResponse, Scorer};

/// Scores a word 1.0 when it also occurs in the question, 0.0 otherwise.
/// Words are compared lowercased with surrounding punctuation removed.
#[derive(Debug, Clone, Default)]
pub struct LexicalScorer {
    stopwords: HashSet<String>,
}

impl LexicalScorer {
    pub fn with_stopwords<I, S>(words: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        LexicalScorer {
            stopwords: words.into_iter().map(|w| normalize(w.as_ref())).collect(),
        }
    }

    fn terms(&self, question: &str) -> HashSet<String> {
        question
            .split_whitespace()
            .map(normalize)
            .filter(|w| !w.is_empty() && !self.stopwords.contains(w))
            .collect()
    }
}

fn normalize(word: &str) -> String {
    word.trim_matches(|c: char| !c.is_alphanumeric()).to_lowercase()
}

impl Scorer for LexicalScorer {
    fn name(&self) -> &str {
        "lexical"
    }

    fn score(&self, request: &ScoreRequest) -> Result<ScoreResponse> {
        let terms = self.terms(&request.question);
        let per_chunk = request
            .chunks
            .iter()
            .map(|chunk| {
                word_spans(chunk)
                    .into_iter()
                    .map(|(s, e)| {
                        let hit = terms.contains(&normalize(&chunk[s..e]));
                        ScoredSpan::new(s, e, if hit { 1.0 } else { 0.0 })
                    })
                    .collect()
            })
            .collect();
        Ok(ScoreResponse {
            per_chunk,
            backend_meta: serde_json::json!({ "backend": "lexical", "terms": terms.len() }),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_overlap() {
        let req = ScoreRequest::new("lexical", "blue car", vec!["the blue car stopped".into()]);
        let resp = LexicalScorer::default().score(&req).unwrap();
        let scores: Vec<f64> = resp.per_chunk[0].iter().map(|s| s.score).collect();
        assert_eq!(scores, [0.0, 1.0, 1.0, 0.0]);
    }

    #[test]
    fn case_and_punctuation_insensitive() {
        let req = ScoreRequest::new("lexical", "Who sang \"Does He Love You\"?", vec!["Reba sang, with Linda.".into()]);
        let resp = LexicalScorer::with_stopwords(["who"]).score(&req).unwrap();
        let scores: Vec<f64> = resp.per_chunk[0].iter().map(|s| s.score).collect();
        assert_eq!(scores, [0.0, 1.0, 0.0, 0.0]);
    }

    #[test]
    fn empty_question_scores_zero() {
        let req = ScoreRequest::new("lexical", "", vec!["a b".into()]);
        let resp = LexicalScorer::default().score(&req).unwrap();
        assert!(resp.per_chunk[0].iter().all(|s| s.score == 0.0));
    }
}
