//! Per-record rows and their aggregates.
//!
//! The tabular file has one row per record with these columns, in order:
//!
//! | column | meaning |
//! |---|---|
//! | `id` | record id |
//! | `dataset` | dataset name |
//! | `task` | task category |
//! | `original_tokens` | instruction + question + context tokens before compression |
//! | `compressed_tokens` | tokens left after removal, by unit accounting |
//! | `output_tokens` | instruction + question + joined compressed context, recounted |
//! | `ratio` | `compressed_tokens / original_tokens` |
//! | `compression_latency_ms` | segmentation through join, scorer included |
//! | `scoring_latency_ms` | time spent inside the scorer |
//! | `metric` | Span EM (0 or 1), empty without a generator |
//! | `error` | failure message, empty on success |

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use r2c_core::CompressionConfig;
use serde::{Deserialize, Serialize};

use crate::error::Result;

pub const CSV_COLUMNS: [&str; 11] = [
    "id",
    "dataset",
    "task",
    "original_tokens",
    "compressed_tokens",
    "output_tokens",
    "ratio",
    "compression_latency_ms",
    "scoring_latency_ms",
    "metric",
    "error",
];

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct EvalRow {
    pub id: String,
    pub dataset: String,
    pub task: String,
    pub original_tokens: usize,
    pub compressed_tokens: usize,
    pub output_tokens: usize,
    pub ratio: f64,
    pub compression_latency_ms: f64,
    pub scoring_latency_ms: f64,
    pub metric: Option<f64>,
    pub error: Option<String>,
}

impl EvalRow {
    pub fn failed(id: String, dataset: String, task: String, error: String) -> Self {
        EvalRow {
            id,
            dataset,
            task,
            error: Some(error),
            ..Default::default()
        }
    }

    pub fn is_ok(&self) -> bool {
        self.error.is_none()
    }
}

/// Means over successful rows; the metric mean only over rows with a metric.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Aggregates {
    pub records: usize,
    pub failed: usize,
    pub mean_ratio: f64,
    pub mean_original_tokens: f64,
    pub mean_compressed_tokens: f64,
    pub mean_output_tokens: f64,
    pub mean_compression_latency_ms: f64,
    pub mean_scoring_latency_ms: f64,
    pub metric_count: usize,
    pub metric_mean: Option<f64>,
}

impl Aggregates {
    pub fn from_rows(rows: &[EvalRow]) -> Self {
        let ok: Vec<&EvalRow> = rows.iter().filter(|r| r.is_ok()).collect();
        let mean = |f: &dyn Fn(&EvalRow) -> f64| -> f64 {
            if ok.is_empty() {
                0.0
            } else {
                ok.iter().map(|r| f(r)).sum::<f64>() / ok.len() as f64
            }
        };
        let metrics: Vec<f64> = ok.iter().filter_map(|r| r.metric).collect();
        Aggregates {
            records: rows.len(),
            failed: rows.len() - ok.len(),
            mean_ratio: mean(&|r| r.ratio),
            mean_original_tokens: mean(&|r| r.original_tokens as f64),
            mean_compressed_tokens: mean(&|r| r.compressed_tokens as f64),
            mean_output_tokens: mean(&|r| r.output_tokens as f64),
            mean_compression_latency_ms: mean(&|r| r.compression_latency_ms),
            mean_scoring_latency_ms: mean(&|r| r.scoring_latency_ms),
            metric_count: metrics.len(),
            metric_mean: (!metrics.is_empty()).then(|| metrics.iter().sum::<f64>() / metrics.len() as f64),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub tokenizer: String,
    pub scorer: String,
    pub config: CompressionConfig,
    pub rows: Vec<EvalRow>,
    pub aggregates: Aggregates,
}

/// The structured summary file: everything but the rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportSummary {
    pub tokenizer: String,
    pub scorer: String,
    pub config: CompressionConfig,
    pub aggregates: Aggregates,
    pub columns: Vec<String>,
}

impl EvalReport {
    pub fn new(tokenizer: impl Into<String>, scorer: impl Into<String>, config: CompressionConfig, rows: Vec<EvalRow>) -> Self {
        let aggregates = Aggregates::from_rows(&rows);
        EvalReport {
            tokenizer: tokenizer.into(),
            scorer: scorer.into(),
            config,
            rows,
            aggregates,
        }
    }

    pub fn recompute(&mut self) {
        self.aggregates = Aggregates::from_rows(&self.rows);
    }

    /// True when the stored aggregates equal a fresh recomputation.
    pub fn verify(&self) -> bool {
        self.aggregates == Aggregates::from_rows(&self.rows)
    }

    /// A copy with every latency field zeroed, for run-to-run comparison.
    pub fn without_timings(&self) -> Self {
        let mut copy = self.clone();
        for row in &mut copy.rows {
            row.compression_latency_ms = 0.0;
            row.scoring_latency_ms = 0.0;
        }
        copy.recompute();
        copy
    }

    pub fn summary(&self) -> ReportSummary {
        ReportSummary {
            tokenizer: self.tokenizer.clone(),
            scorer: self.scorer.clone(),
            config: self.config.clone(),
            aggregates: self.aggregates.clone(),
            columns: CSV_COLUMNS.iter().map(|c| c.to_string()).collect(),
        }
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut writer = csv::Writer::from_writer(out);
        if self.rows.is_empty() {
            writer.write_record(CSV_COLUMNS)?;
        }
        for row in &self.rows {
            writer.serialize(row)?;
        }
        writer.flush()?;
        Ok(())
    }

    pub fn write_summary<W: Write>(&self, out: W) -> Result<()> {
        serde_json::to_writer_pretty(out, &self.summary())?;
        Ok(())
    }

    /// Writes `<stem>.csv` and `<stem>.json` next to each other.
    pub fn write_files(&self, stem: &Path) -> Result<()> {
        self.write_csv(File::create(stem.with_extension("csv"))?)?;
        let mut summary = File::create(stem.with_extension("json"))?;
        self.write_summary(&mut summary)?;
        summary.write_all(b"\n")?;
        Ok(())
    }
}

pub fn read_csv_rows<R: Read>(input: R) -> Result<Vec<EvalRow>> {
    let mut reader = csv::Reader::from_reader(input);
    reader.deserialize().map(|r| r.map_err(Into::into)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(id: &str, orig: usize, comp: usize, metric: Option<f64>) -> EvalRow {
        EvalRow {
            id: id.into(),
            dataset: "nq".into(),
            task: "open-domain-qa".into(),
            original_tokens: orig,
            compressed_tokens: comp,
            output_tokens: comp,
            ratio: comp as f64 / orig as f64,
            compression_latency_ms: 1.5,
            scoring_latency_ms: 0.5,
            metric,
            error: None,
        }
    }

    #[test]
    fn aggregates_skip_failures() {
        let rows = vec![
            row("a", 100, 50, Some(1.0)),
            row("b", 200, 50, Some(0.0)),
            EvalRow::failed("c".into(), "nq".into(), "qa".into(), "boom".into()),
        ];
        let agg = Aggregates::from_rows(&rows);
        assert_eq!(agg.records, 3);
        assert_eq!(agg.failed, 1);
        assert_eq!(agg.mean_ratio, 0.375);
        assert_eq!(agg.metric_mean, Some(0.5));
        assert_eq!(agg.mean_compressed_tokens, 50.0);
    }

    #[test]
    fn csv_round_trip_recomputes_aggregates() {
        let rows = vec![row("a", 3, 1, None), row("b", 7, 3, Some(1.0))];
        let report = EvalReport::new("whitespace", "uniform", CompressionConfig::default(), rows);
        let mut buf = Vec::new();
        report.write_csv(&mut buf).unwrap();
        let header = String::from_utf8(buf.clone()).unwrap();
        assert_eq!(header.lines().next().unwrap(), CSV_COLUMNS.join(","));
        let back = read_csv_rows(&buf[..]).unwrap();
        assert_eq!(back, report.rows);
        assert_eq!(Aggregates::from_rows(&back), report.aggregates);
    }

    #[test]
    fn empty_report() {
        let report = EvalReport::new("whitespace", "uniform", CompressionConfig::default(), vec![]);
        assert!(report.verify());
        assert_eq!(report.aggregates.metric_mean, None);
        let mut buf = Vec::new();
        report.write_csv(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap().trim_end(), CSV_COLUMNS.join(","));
    }
}
