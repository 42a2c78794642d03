//! Prompt compression guided by token-importance scores.
//!
//! The context of a prompt is cut into chunks of bounded token length, each
//! token is scored by a pluggable [`scorer::Scorer`], scores are pooled into
//! chunk and sentence importance, and the context is pruned coarse-to-fine
//! (whole chunks first, then sentences within the surviving chunks) until
//! the prompt is close to a target token count.
//!
//! ```
//! use std::sync::Arc;
//! use r2c_core::{CompressionConfig, Compressor, Prompt, scorer::LexicalScorer, tokenize::WhitespaceCounter};
//!
//! let mut config = CompressionConfig::with_target(5);
//! config.rho = 0.5;
//! let compressor = Compressor::new(config, Arc::new(WhitespaceCounter)).unwrap();
//! let prompt = Prompt::new("Cats purr.\n\nThe blue car stopped. It was late.").with_question("blue car");
//! let result = compressor.compress(&prompt, &LexicalScorer::default()).unwrap();
//! assert_eq!(result.compressed_context, "The blue car stopped.");
//! ```

pub mod aggregate;
pub mod compress;
pub mod error;
pub mod model;
pub mod scorer;
pub mod segment;
pub mod sentence;
pub mod tokenize;

pub use compress::{CompressionResult, Compressor};
pub use error::{Error, Result};
pub use model::{Chunk, CompressionConfig, OutputOrder, Pooling, Prompt, ScoredSpan, Sentence};
