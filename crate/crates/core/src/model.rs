//! Domain types shared by every stage of the pipeline.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// An instruction, context and question triple. Only the context is ever
/// compressed; instruction and question count toward the prompt length.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Prompt {
    #[serde(default)]
    pub instruction: String,
    pub context: String,
    /// May be empty; scorers then see the bare context.
    #[serde(default)]
    pub question: String,
    #[serde(default, alias = "id")]
    pub source_id: String,
    /// Pre-delimited context units (retrieved passages, demonstrations).
    /// When present, `context` is their `"\n\n"` join and unit boundaries
    /// are never crossed by a chunk.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub unit_hints: Option<Vec<String>>,
}

impl Prompt {
    pub fn new(context: impl Into<String>) -> Self {
        Prompt {
            context: context.into(),
            ..Default::default()
        }
    }

    pub fn from_units(units: Vec<String>) -> Self {
        Prompt {
            context: units.join("\n\n"),
            unit_hints: Some(units),
            ..Default::default()
        }
    }

    pub fn with_instruction(mut self, instruction: impl Into<String>) -> Self {
        self.instruction = instruction.into();
        self
    }

    pub fn with_question(mut self, question: impl Into<String>) -> Self {
        self.question = question.into();
        self
    }

    pub fn with_source_id(mut self, id: impl Into<String>) -> Self {
        self.source_id = id.into();
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.context.trim().is_empty() {
            return Err(Error::validation("prompt context is empty"));
        }
        Ok(())
    }
}

/// A sentence inside a chunk.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sentence {
    pub index_in_chunk: usize,
    /// Sentence text with surrounding whitespace trimmed.
    pub text: String,
    pub token_count: usize,
    pub score: f64,
    /// Byte range of this sentence's tile in the parent chunk. Tiles of one
    /// chunk are contiguous; whitespace between two sentences belongs to the
    /// later one.
    pub char_span: (usize, usize),
}

/// A context unit of at most `max_chunk_tokens` tokens.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Chunk {
    pub index_original: usize,
    /// Paragraph or unit hint this chunk was cut from.
    pub unit_index: usize,
    pub text: String,
    pub token_count: usize,
    pub score: f64,
    pub sentences: Vec<Sentence>,
    /// Set when an over-long line had to be cut at token boundaries.
    #[serde(default)]
    pub hard_split: bool,
}

/// A scored byte range of a chunk's text.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScoredSpan {
    #[serde(rename = "start")]
    pub char_start: usize,
    #[serde(rename = "end")]
    pub char_end: usize,
    pub score: f64,
}

impl ScoredSpan {
    pub fn new(char_start: usize, char_end: usize, score: f64) -> Self {
        ScoredSpan {
            char_start,
            char_end,
            score,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Pooling {
    #[default]
    Mean,
    Max,
    Sum,
}

impl FromStr for Pooling {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "mean" | "avg" => Ok(Pooling::Mean),
            "max" => Ok(Pooling::Max),
            "sum" => Ok(Pooling::Sum),
            other => Err(Error::config(format!("unknown pooling `{other}`"))),
        }
    }
}

impl fmt::Display for Pooling {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Pooling::Mean => "mean",
            Pooling::Max => "max",
            Pooling::Sum => "sum",
        })
    }
}

/// Order of kept chunks in the output. Sentences inside a chunk always keep
/// their textual order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputOrder {
    #[default]
    Original,
    /// Descending chunk importance, used for open-domain QA where the most
    /// relevant passages should sit at the start of the prompt.
    Sorted,
}

impl FromStr for OutputOrder {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "original" => Ok(OutputOrder::Original),
            "sorted" => Ok(OutputOrder::Sorted),
            other => Err(Error::config(format!("unknown ordering `{other}`"))),
        }
    }
}

impl fmt::Display for OutputOrder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            OutputOrder::Original => "original",
            OutputOrder::Sorted => "sorted",
        })
    }
}

pub const DEFAULT_RHO: f64 = 0.8;
pub const DEFAULT_GAMMA: f64 = 1.0;
pub const DEFAULT_MAX_CHUNK_TOKENS: usize = 128;
pub const DEFAULT_EPSILON: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CompressionConfig {
    /// Target prompt length T.
    pub target_tokens: usize,
    /// Share of the removal budget spent on whole chunks.
    pub rho: f64,
    /// Exponent on inverted chunk scores when splitting the sentence budget.
    pub gamma: f64,
    pub pooling: Pooling,
    pub ordering: OutputOrder,
    pub max_chunk_tokens: usize,
    /// Floor on chunk scores before inversion.
    pub epsilon: f64,
    /// Carry the chunk stage's unused budget into the sentence stage.
    pub slack_rollover: bool,
}

impl Default for CompressionConfig {
    fn default() -> Self {
        CompressionConfig {
            target_tokens: 500,
            rho: DEFAULT_RHO,
            gamma: DEFAULT_GAMMA,
            pooling: Pooling::Mean,
            ordering: OutputOrder::Original,
            max_chunk_tokens: DEFAULT_MAX_CHUNK_TOKENS,
            epsilon: DEFAULT_EPSILON,
            slack_rollover: false,
        }
    }
}

impl CompressionConfig {
    pub fn with_target(target_tokens: usize) -> Self {
        CompressionConfig {
            target_tokens,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.rho) {
            return Err(Error::config(format!("rho must lie in [0, 1], got {}", self.rho)));
        }
        if !self.gamma.is_finite() || self.gamma < 0.0 {
            return Err(Error::config(format!("gamma must be finite and >= 0, got {}", self.gamma)));
        }
        if self.max_chunk_tokens == 0 {
            return Err(Error::config("max_chunk_tokens must be at least 1"));
        }
        if !self.epsilon.is_finite() || self.epsilon <= 0.0 {
            return Err(Error::config(format!("epsilon must be positive, got {}", self.epsilon)));
        }
        Ok(())
    }
}
