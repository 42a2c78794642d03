//! Context segmentation into chunks and sentences.
//!
//! Units are either caller-supplied hints (passages, demonstrations,
//! dialogues) or blank-line separated paragraphs. A unit within the token cap
//! becomes one chunk. Longer units are cut at line breaks and the lines are
//! packed greedily; a single line over the cap is cut at token boundaries.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::model::{Chunk, Sentence};
use crate::sentence::{RuleSplitter, SentenceSplitter};
use crate::tokenize::{tokens_per_range, TokenCounter};

#[derive(Debug, Clone)]
pub struct Segmenter {
    counter: Arc<dyn TokenCounter>,
    splitter: Arc<dyn SentenceSplitter>,
    max_chunk_tokens: usize,
}

struct Line {
    text: String,
    hard_split: bool,
}

impl Segmenter {
    pub fn new(counter: Arc<dyn TokenCounter>, max_chunk_tokens: usize) -> Self {
        Segmenter {
            counter,
            splitter: Arc::new(RuleSplitter::default()),
            max_chunk_tokens: max_chunk_tokens.max(1),
        }
    }

    pub fn with_splitter(mut self, splitter: Arc<dyn SentenceSplitter>) -> Self {
        self.splitter = splitter;
        self
    }

    pub fn counter(&self) -> &Arc<dyn TokenCounter> {
        &self.counter
    }

    pub fn max_chunk_tokens(&self) -> usize {
        self.max_chunk_tokens
    }

    /// Cuts `context` into ordered chunks with sentences attached and all
    /// scores zero. With `unit_hints`, each hint is segmented on its own and
    /// `context` is only checked for emptiness.
    pub fn segment_context(&self, context: &str, unit_hints: Option<&[String]>) -> Result<Vec<Chunk>> {
        if context.trim().is_empty() {
            return Err(Error::validation("cannot segment an empty context"));
        }
        let units: Vec<String> = match unit_hints {
            Some(hints) => hints.iter().map(|h| normalize_unit(h)).collect(),
            None => paragraphs(context),
        };

        let mut chunks = Vec::new();
        for (unit_index, unit) in units.iter().enumerate() {
            if unit.trim().is_empty() {
                continue;
            }
            if self.counter.count(unit) <= self.max_chunk_tokens {
                chunks.push(self.build_chunk(chunks.len(), unit_index, unit.clone(), false));
                continue;
            }
            for line in self.pack_lines(unit) {
                chunks.push(self.build_chunk(chunks.len(), unit_index, line.text, line.hard_split));
            }
        }
        if chunks.is_empty() {
            return Err(Error::validation("context produced no chunks"));
        }
        Ok(chunks)
    }

    /// Builds a chunk from its text, counting tokens once and handing them out
    /// to sentences by the position of their first byte.
    pub fn build_chunk(&self, index_original: usize, unit_index: usize, text: String, hard_split: bool) -> Chunk {
        let token_starts = self.counter.token_starts(&text);
        let sentences = self.sentences_with_tokens(&text, &token_starts);
        Chunk {
            index_original,
            unit_index,
            token_count: token_starts.len(),
            text,
            score: 0.0,
            sentences,
            hard_split,
        }
    }

    /// Splits a chunk's text into sentences that tile it.
    pub fn split_sentences(&self, text: &str) -> Vec<Sentence> {
        let token_starts = self.counter.token_starts(text);
        self.sentences_with_tokens(text, &token_starts)
    }

    fn sentences_with_tokens(&self, text: &str, token_starts: &[usize]) -> Vec<Sentence> {
        let starts = self.splitter.tile_starts(text);
        let counts = tokens_per_range(token_starts, &starts);
        starts
            .iter()
            .enumerate()
            .map(|(m, &start)| {
                let end = starts.get(m + 1).copied().unwrap_or(text.len());
                Sentence {
                    index_in_chunk: m,
                    text: text[start..end].trim().to_string(),
                    token_count: counts[m],
                    score: 0.0,
                    char_span: (start, end),
                }
            })
            .collect()
    }

    fn pack_lines(&self, unit: &str) -> Vec<Line> {
        let mut lines = Vec::new();
        for raw in unit.lines().filter(|l| !l.trim().is_empty()) {
            if self.counter.count(raw) > self.max_chunk_tokens {
                lines.extend(self.hard_split(raw).into_iter().map(|text| Line {
                    text,
                    hard_split: true,
                }));
            } else {
                lines.push(Line {
                    text: raw.to_string(),
                    hard_split: false,
                });
            }
        }

        let mut packed: Vec<Line> = Vec::new();
        let mut current: Option<Line> = None;
        for line in lines {
            current = match current.take() {
                None => Some(line),
                Some(mut cur) => {
                    let candidate = format!("{}\n{}", cur.text, line.text);
                    if self.counter.count(&candidate) <= self.max_chunk_tokens {
                        cur.text = candidate;
                        cur.hard_split |= line.hard_split;
                        Some(cur)
                    } else {
                        packed.push(cur);
                        Some(line)
                    }
                }
            };
        }
        packed.extend(current);
        packed
    }

    /// Cuts one over-long line into pieces of at most the cap, at token starts
    /// that fall on character boundaries.
    fn hard_split(&self, line: &str) -> Vec<String> {
        let cap = self.max_chunk_tokens;
        let mut starts: Vec<usize> = self
            .counter
            .token_starts(line)
            .into_iter()
            .filter(|&s| line.is_char_boundary(s))
            .collect();
        starts.push(line.len());

        let mut pieces = Vec::new();
        let mut pos = 0;
        while pos + 1 < starts.len() {
            let mut take = cap.min(starts.len() - 1 - pos);
            // Re-tokenizing a slice can merge differently at its edges.
            loop {
                let piece = line[starts[pos]..starts[pos + take]].trim();
                if take == 1 || self.counter.count(piece) <= cap {
                    if !piece.is_empty() {
                        pieces.push(piece.to_string());
                    }
                    break;
                }
                take -= 1;
            }
            pos += take;
        }
        pieces
    }
}

/// Rejoins chunks: a newline inside a unit and a blank line between units.
pub fn join_chunks(chunks: &[Chunk]) -> String {
    let mut out = String::new();
    for (i, chunk) in chunks.iter().enumerate() {
        if i > 0 {
            out.push_str(if chunk.unit_index == chunks[i - 1].unit_index { "\n" } else { "\n\n" });
        }
        out.push_str(&chunk.text);
    }
    out
}

fn normalize_unit(text: &str) -> String {
    let lines: Vec<&str> = text.lines().map(str::trim_end).collect();
    let first = lines.iter().position(|l| !l.is_empty());
    let last = lines.iter().rposition(|l| !l.is_empty());
    match (first, last) {
        (Some(f), Some(l)) => lines[f..=l].join("\n"),
        _ => String::new(),
    }
}

fn paragraphs(context: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut current: Vec<&str> = Vec::new();
    for line in context.lines() {
        if line.trim().is_empty() {
            if !current.is_empty() {
                out.push(normalize_unit(&current.join("\n")));
                current.clear();
            }
        } else {
            current.push(line);
        }
    }
    if !current.is_empty() {
        out.push(normalize_unit(&current.join("\n")));
    }
    out
}
