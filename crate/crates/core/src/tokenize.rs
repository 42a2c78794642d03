//! Token counting.
//!
//! Every budget in the compressor is expressed in tokens of one counting
//! tokenizer. Counters also report where each token starts, so a chunk can
//! be tokenized once and its tokens distributed over the sentences it
//! contains.

use std::collections::HashMap;
use std::fmt;
use std::path::Path;
use std::sync::Arc;

use base64::engine::general_purpose::STANDARD;
use base64::Engine;
use tiktoken_rs::CoreBPE;

use crate::error::{Error, Result};

/// Pre-tokenization pattern of the cl100k family, used for vocabularies
/// loaded from disk.
const CL100K_PATTERN: &str = r"'(?i:[sdmt]|ll|ve|re)|[^\r\n\p{L}\p{N}]?+\p{L}++|\p{N}{1,3}+| ?[^\s\p{L}\p{N}]++[\r\n]*+|\s++$|\s*[\r\n]|\s+(?!\S)|\s";

pub trait TokenCounter: Send + Sync + fmt::Debug {
    /// Registry name, recorded in reports.
    fn name(&self) -> &str;

    /// Byte offsets at which each token of `text` starts, ascending.
    fn token_starts(&self, text: &str) -> Vec<usize>;

    fn count(&self, text: &str) -> usize {
        self.token_starts(text).len()
    }
}

/// Counts maximal runs of non-whitespace characters.
#[derive(Debug, Clone, Copy, Default)]
pub struct WhitespaceCounter;

impl TokenCounter for WhitespaceCounter {
    fn name(&self) -> &str {
        "whitespace"
    }

    fn token_starts(&self, text: &str) -> Vec<usize> {
        let mut starts = Vec::new();
        let mut in_token = false;
        for (i, ch) in text.char_indices() {
            if ch.is_whitespace() {
                in_token = false;
            } else if !in_token {
                starts.push(i);
                in_token = true;
            }
        }
        starts
    }

    fn count(&self, text: &str) -> usize {
        text.split_whitespace().count()
    }
}

enum Bpe {
    Shared(&'static CoreBPE),
    Owned(Box<CoreBPE>),
}

impl Bpe {
    fn get(&self) -> &CoreBPE {
        match self {
            Bpe::Shared(bpe) => bpe,
            Bpe::Owned(bpe) => bpe,
        }
    }
}

/// Byte-pair counter backed by a tiktoken vocabulary.
pub struct BpeCounter {
    name: String,
    bpe: Bpe,
}

impl fmt::Debug for BpeCounter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("BpeCounter").field("name", &self.name).finish()
    }
}

impl BpeCounter {
    /// The `cl100k_base` vocabulary (the ChatGPT tokenizer).
    pub fn cl100k() -> Self {
        BpeCounter {
            name: "cl100k".to_string(),
            bpe: Bpe::Shared(tiktoken_rs::cl100k_base_singleton()),
        }
    }

    pub fn o200k() -> Self {
        BpeCounter {
            name: "o200k".to_string(),
            bpe: Bpe::Shared(tiktoken_rs::o200k_base_singleton()),
        }
    }

    /// Loads a vocabulary in the `.tiktoken` format: one `base64(token) rank`
    /// pair per line. Pre-tokenization follows the cl100k pattern.
    pub fn from_vocab_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let raw = std::fs::read_to_string(path)?;
        let mut encoder = HashMap::default();
        for (lineno, line) in raw.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let bad = || {
                Error::config(format!(
                    "{}:{}: expected `<base64 token> <rank>`",
                    path.display(),
                    lineno + 1
                ))
            };
            let (token, rank) = line.split_once(' ').ok_or_else(bad)?;
            let token = STANDARD.decode(token).map_err(|_| bad())?;
            let rank: u32 = rank.trim().parse().map_err(|_| bad())?;
            encoder.insert(token, rank);
        }
        if encoder.is_empty() {
            return Err(Error::config(format!("{}: empty vocabulary", path.display())));
        }
        let bpe = CoreBPE::new(encoder, HashMap::default(), CL100K_PATTERN)
            .map_err(|e| Error::config(format!("{}: {e}", path.display())))?;
        Ok(BpeCounter {
            name: format!("bpe:{}", path.display()),
            bpe: Bpe::Owned(Box::new(bpe)),
        })
    }
}

impl TokenCounter for BpeCounter {
    fn name(&self) -> &str {
        &self.name
    }

    fn token_starts(&self, text: &str) -> Vec<usize> {
        let bpe = self.bpe.get();
        let tokens = bpe.encode_ordinary(text);
        let mut starts = Vec::with_capacity(tokens.len());
        let mut offset = 0;
        for token in tokens {
            starts.push(offset);
            // Ordinary tokens always decode.
            offset += bpe.decode_bytes(&[token]).map(|b| b.len()).unwrap_or(0);
        }
        debug_assert_eq!(offset, text.len());
        starts
    }

    fn count(&self, text: &str) -> usize {
        self.bpe.get().encode_ordinary(text).len()
    }
}

/// Resolves a counter by registry name: `whitespace`, `cl100k`, `o200k`, or
/// `bpe:<path to .tiktoken file>`.
pub fn counter_by_name(name: &str) -> Result<Arc<dyn TokenCounter>> {
    match name {
        "whitespace" | "ws" => Ok(Arc::new(WhitespaceCounter)),
        "cl100k" | "cl100k_base" => Ok(Arc::new(BpeCounter::cl100k())),
        "o200k" | "o200k_base" => Ok(Arc::new(BpeCounter::o200k())),
        other => match other.strip_prefix("bpe:") {
            Some(path) => Ok(Arc::new(BpeCounter::from_vocab_file(path)?)),
            None => Err(Error::config(format!("unknown tokenizer `{other}`"))),
        },
    }
}

/// Number of tokens whose first byte lies in each of the consecutive ranges
/// delimited by `bounds` (`bounds[i]..bounds[i + 1]`, last range open-ended).
pub(crate) fn tokens_per_range(token_starts: &[usize], bounds: &[usize]) -> Vec<usize> {
    let mut counts = vec![0; bounds.len()];
    if bounds.is_empty() {
        return counts;
    }
    for &start in token_starts {
        let idx = bounds.partition_point(|&b| b <= start).saturating_sub(1);
        counts[idx] += 1;
    }
    counts
}
