//! Runs the compressor over a dataset and collects an [`EvalReport`].

use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant};

use r2c_core::scorer::{ScoreRequest, ScoreResponse, Scorer};
use r2c_core::tokenize::TokenCounter;
use r2c_core::{CompressionConfig, Compressor, OutputOrder, Prompt};
use rayon::prelude::*;

use crate::ablation::{run_variant, Ablation};
use crate::dataset::EvalRecord;
use crate::error::{EvalError, Result};
use crate::generate::TextGenerator;
use crate::metric::span_em;
use crate::report::{EvalReport, EvalRow};

/// The compression input for a record under its dataset's template.
pub fn record_prompt(record: &EvalRecord) -> Prompt {
    record
        .template()
        .to_prompt(&record.question, &record.context_units)
        .with_source_id(record.id.clone())
}

pub struct Harness<'a> {
    config: CompressionConfig,
    counter: Arc<dyn TokenCounter>,
    scorer: &'a dyn Scorer,
    generator: Option<&'a dyn TextGenerator>,
    jobs: usize,
    ablation: Ablation,
    nq_ordering: Option<OutputOrder>,
}

impl<'a> Harness<'a> {
    pub fn new(config: CompressionConfig, counter: Arc<dyn TokenCounter>, scorer: &'a dyn Scorer) -> Self {
        Harness {
            config,
            counter,
            scorer,
            generator: None,
            jobs: 1,
            ablation: Ablation::Full,
            nq_ordering: Some(OutputOrder::Sorted),
        }
    }

    /// Computes Span EM against the record answers from this client's output.
    pub fn with_generator(mut self, generator: &'a dyn TextGenerator) -> Self {
        self.generator = Some(generator);
        self
    }

    pub fn with_jobs(mut self, jobs: usize) -> Self {
        self.jobs = jobs.max(1);
        self
    }

    pub fn with_ablation(mut self, ablation: Ablation) -> Self {
        self.ablation = ablation;
        self
    }

    /// Output order forced on NQ records (sorted by default); `None` uses
    /// the configured order everywhere.
    pub fn with_nq_ordering(mut self, ordering: Option<OutputOrder>) -> Self {
        self.nq_ordering = ordering;
        self
    }

    pub fn run<I: IntoIterator<Item = EvalRecord>>(&self, records: I) -> Result<EvalReport> {
        let config = self.ablation.apply(self.config.clone());
        config.validate()?;
        let records: Vec<EvalRecord> = records.into_iter().collect();
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(self.jobs)
            .build()
            .map_err(|e| EvalError::Config(e.to_string()))?;
        let rows = pool.install(|| records.par_iter().map(|r| self.evaluate(r, &config)).collect());
        Ok(EvalReport::new(self.counter.name(), self.scorer.name(), config, rows))
    }

    fn evaluate(&self, record: &EvalRecord, config: &CompressionConfig) -> EvalRow {
        let failed = |e: EvalError| EvalRow::failed(record.id.clone(), record.dataset.clone(), record.task_tag.clone(), e.to_string());
        let mut config = config.clone();
        if record.dataset == "nq" {
            if let Some(order) = self.nq_ordering {
                config.ordering = order;
            }
        }
        let compressor = match Compressor::new(config, self.counter.clone()) {
            Ok(c) => c,
            Err(e) => return failed(e.into()),
        };
        let prompt = record_prompt(record);
        let timed = TimedScorer::new(self.scorer);

        let start = Instant::now();
        let out = run_variant(self.ablation, &compressor, &prompt, &timed);
        let elapsed = start.elapsed();
        let out = match out {
            Ok(o) => o,
            Err(e) => {
                log::warn!("record {}: {e}", record.id);
                return failed(e);
            }
        };

        let metric = match self.generator {
            Some(g) if !record.answers.is_empty() => {
                let rendered = record.template().render(&out.compressed_context, &record.question);
                match g.generate(&rendered) {
                    Ok(prediction) => Some(f64::from(span_em(&prediction, &record.answers))),
                    Err(e) => return failed(e),
                }
            }
            _ => None,
        };

        EvalRow {
            id: record.id.clone(),
            dataset: record.dataset.clone(),
            task: record.task_tag.clone(),
            original_tokens: out.original_tokens,
            compressed_tokens: out.compressed_tokens,
            output_tokens: out.output_tokens,
            ratio: if out.original_tokens == 0 {
                1.0
            } else {
                out.compressed_tokens as f64 / out.original_tokens as f64
            },
            compression_latency_ms: millis(elapsed),
            scoring_latency_ms: millis(timed.elapsed()),
            metric,
            error: None,
        }
    }
}

/// Compression report over `records` with default harness options.
pub fn measure_compression<I: IntoIterator<Item = EvalRecord>>(
    records: I,
    config: CompressionConfig,
    counter: Arc<dyn TokenCounter>,
    scorer: &dyn Scorer,
) -> Result<EvalReport> {
    Harness::new(config, counter, scorer).run(records)
}

fn millis(d: Duration) -> f64 {
    d.as_secs_f64() * 1e3
}

/// Accumulates the wall time spent in the wrapped scorer.
#[derive(Debug)]
struct TimedScorer<'a> {
    inner: &'a dyn Scorer,
    spent: Mutex<Duration>,
}

impl<'a> TimedScorer<'a> {
    fn new(inner: &'a dyn Scorer) -> Self {
        TimedScorer {
            inner,
            spent: Mutex::new(Duration::ZERO),
        }
    }

    fn elapsed(&self) -> Duration {
        *self.spent.lock().unwrap_or_else(|e| e.into_inner())
    }
}

impl Scorer for TimedScorer<'_> {
    fn name(&self) -> &str {
        self.inner.name()
    }

    fn score(&self, request: &ScoreRequest) -> r2c_core::Result<ScoreResponse> {
        let start = Instant::now();
        let result = self.inner.score(request);
        *self.spent.lock().unwrap_or_else(|e| e.into_inner()) += start.elapsed();
        result
    }
}

#[cfg(test)]
mod tests {
    use r2c_core::scorer::{RemoteConfig, RemoteScorer, UniformScorer};
    use r2c_core::tokenize::WhitespaceCounter;

    use super::*;
    use crate::generate::EchoGenerator;

    fn record(id: &str, units: &[&str]) -> EvalRecord {
        EvalRecord {
            id: id.into(),
            question: "who sang it".into(),
            answers: vec!["Linda Davis".into()],
            context_units: units.iter().map(|s| s.to_string()).collect(),
            task_tag: "open-domain-qa".into(),
            dataset: "nq".into(),
        }
    }

    #[test]
    fn noop_target_gives_unit_ratio() {
        let recs = vec![record("a", &["One two three.", "Four five."])];
        let report = measure_compression(recs, CompressionConfig::with_target(100_000), Arc::new(WhitespaceCounter), &UniformScorer).unwrap();
        assert_eq!(report.rows[0].ratio, 1.0);
        assert_eq!(report.rows[0].original_tokens, report.rows[0].compressed_tokens);
        assert!(report.verify());
    }

    #[test]
    fn generator_feeds_span_em_and_order_is_kept() {
        let recs: Vec<_> = (0..8).map(|i| record(&format!("r{i}"), &["Alpha beta.", "Gamma delta."])).collect();
        let echo = EchoGenerator::new("It was Linda Davis.");
        let report = Harness::new(CompressionConfig::with_target(5), Arc::new(WhitespaceCounter), &UniformScorer)
            .with_generator(&echo)
            .with_jobs(4)
            .run(recs)
            .unwrap();
        let ids: Vec<_> = report.rows.iter().map(|r| r.id.as_str()).collect();
        assert_eq!(ids, ["r0", "r1", "r2", "r3", "r4", "r5", "r6", "r7"]);
        assert_eq!(report.aggregates.metric_mean, Some(1.0));
    }

    #[test]
    fn scorer_failures_are_recorded_per_record() {
        let mut cfg = RemoteConfig::new("http://127.0.0.1:9");
        cfg.max_retries = 0;
        cfg.timeout = Duration::from_millis(200);
        let remote = RemoteScorer::new(cfg);
        let recs = vec![record("a", &["x y z", "p q r"]), record("b", &["u v", "w"])];
        let report = measure_compression(recs, CompressionConfig::with_target(1), Arc::new(WhitespaceCounter), &remote).unwrap();
        assert_eq!(report.aggregates.failed, 2);
        assert!(report.rows.iter().all(|r| r.error.is_some()));
    }
}
