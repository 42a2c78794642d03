//! Evaluation harness for the compressor: dataset loading, prompt templates,
//! Span EM, and compression ratio and latency reports.

pub mod ablation;
pub mod dataset;
pub mod error;
pub mod generate;
pub mod harness;
pub mod metric;
pub mod report;
pub mod synthetic;
pub mod templates;

pub use ablation::Ablation;
pub use dataset::{load_dataset, DatasetFormat, EvalRecord};
pub use error::{EvalError, Result};
pub use generate::{EchoGenerator, TextGenerator};
pub use harness::{measure_compression, record_prompt, Harness};
pub use metric::{normalize_answer, span_em};
pub use report::{Aggregates, EvalReport, EvalRow};
pub use synthetic::SyntheticCorpus;
pub use templates::PromptTemplate;
