//! JSON-lines dataset readers.
//!
//! NQ-style rows carry `question`, `answers` and `ctxs` (a list of
//! `{title, text}` passages); each passage becomes one context unit framed as
//! `Document [k](Title: ...) text`. LongBench-style rows carry `input`,
//! `context`, `answers` and the task name in `dataset`.

use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, Read};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{EvalError, Result};
use crate::templates::{frame_passage, PromptTemplate, TaskKind};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalRecord {
    pub id: String,
    pub question: String,
    pub answers: Vec<String>,
    pub context_units: Vec<String>,
    pub task_tag: String,
    /// Dataset name used to pick the prompt template.
    pub dataset: String,
}

impl EvalRecord {
    pub fn template(&self) -> PromptTemplate {
        PromptTemplate::for_dataset(&self.dataset)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DatasetFormat {
    Nq,
    LongBench,
}

impl FromStr for DatasetFormat {
    type Err = EvalError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "nq" => Ok(DatasetFormat::Nq),
            "longbench" | "lb" => Ok(DatasetFormat::LongBench),
            other => Err(EvalError::UnknownFormat(other.to_string())),
        }
    }
}

impl fmt::Display for DatasetFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DatasetFormat::Nq => "nq",
            DatasetFormat::LongBench => "longbench",
        })
    }
}

/// Opens a dataset file for streaming.
pub fn load_dataset(path: impl AsRef<Path>, format: DatasetFormat, strict: bool) -> Result<DatasetReader<BufReader<File>>> {
    let path = path.as_ref();
    let file = File::open(path)?;
    Ok(DatasetReader::new(BufReader::new(file), format, strict).with_path(path))
}

/// Iterator over records in file order. In strict mode the first malformed
/// row ends the stream with a schema error; otherwise bad rows are logged,
/// their line numbers collected, and reading continues.
#[derive(Debug)]
pub struct DatasetReader<R> {
    lines: std::io::Lines<R>,
    format: DatasetFormat,
    strict: bool,
    path: PathBuf,
    line_no: usize,
    skipped: Vec<usize>,
    done: bool,
}

impl<R: BufRead> DatasetReader<R> {
    pub fn new(reader: R, format: DatasetFormat, strict: bool) -> Self {
        DatasetReader {
            lines: reader.lines(),
            format,
            strict,
            path: PathBuf::from("<input>"),
            line_no: 0,
            skipped: Vec::new(),
            done: false,
        }
    }

    pub fn with_path(mut self, path: &Path) -> Self {
        self.path = path.to_path_buf();
        self
    }

    /// Line numbers (1-based) of rows skipped in lenient mode.
    pub fn skipped(&self) -> &[usize] {
        &self.skipped
    }

    fn schema_error(&self, message: String) -> EvalError {
        EvalError::Schema {
            path: self.path.display().to_string(),
            line: self.line_no,
            message,
        }
    }
}

impl<R: BufRead> Iterator for DatasetReader<R> {
    type Item = Result<EvalRecord>;

    fn next(&mut self) -> Option<Self::Item> {
        while !self.done {
            let line = match self.lines.next()? {
                Ok(line) => line,
                Err(e) => {
                    self.done = true;
                    return Some(Err(e.into()));
                }
            };
            self.line_no += 1;
            if line.trim().is_empty() {
                continue;
            }
            let parsed = serde_json::from_str::<Value>(&line)
                .map_err(|e| format!("invalid JSON: {e}"))
                .and_then(|row| parse_row(&row, self.format, self.line_no));
            match parsed {
                Ok(record) => return Some(Ok(record)),
                Err(message) if self.strict => {
                    self.done = true;
                    return Some(Err(self.schema_error(message)));
                }
                Err(message) => {
                    log::warn!("{}:{}: skipping row: {message}", self.path.display(), self.line_no);
                    self.skipped.push(self.line_no);
                }
            }
        }
        None
    }
}

/// Parses every row of an in-memory JSON-lines document.
pub fn parse_records(input: impl Read, format: DatasetFormat, strict: bool) -> Result<Vec<EvalRecord>> {
    DatasetReader::new(BufReader::new(input), format, strict).collect()
}

fn parse_row(row: &Value, format: DatasetFormat, line: usize) -> std::result::Result<EvalRecord, String> {
    if !row.is_object() {
        return Err("row is not an object".into());
    }
    match format {
        DatasetFormat::Nq => parse_nq(row, line),
        DatasetFormat::LongBench => parse_longbench(row, line),
    }
}

fn parse_nq(row: &Value, line: usize) -> std::result::Result<EvalRecord, String> {
    let question = required_str(row, "question")?;
    let answers = answers(row)?.ok_or("missing field `answers`")?;
    if answers.is_empty() {
        return Err("`answers` is empty".into());
    }
    let ctxs = row
        .get("ctxs")
        .and_then(Value::as_array)
        .ok_or("missing or non-list field `ctxs`")?;
    let mut units = Vec::with_capacity(ctxs.len());
    for (k, ctx) in ctxs.iter().enumerate() {
        let text = ctx
            .get("text")
            .and_then(Value::as_str)
            .ok_or_else(|| format!("ctxs[{k}] has no `text`"))?;
        let title = ctx.get("title").and_then(Value::as_str).unwrap_or("");
        units.push(frame_passage(k + 1, title, text));
    }
    if units.is_empty() {
        return Err("`ctxs` is empty".into());
    }
    Ok(EvalRecord {
        id: id_of(row, line),
        question,
        answers,
        context_units: units,
        task_tag: TaskKind::OpenDomainQa.tag().to_string(),
        dataset: "nq".into(),
    })
}

fn parse_longbench(row: &Value, line: usize) -> std::result::Result<EvalRecord, String> {
    let question = optional_str(row, "input").unwrap_or_default();
    let context = required_str(row, "context")?;
    if context.trim().is_empty() {
        return Err("`context` is empty".into());
    }
    let dataset = optional_str(row, "dataset")
        .or_else(|| optional_str(row, "task"))
        .ok_or("missing field `dataset`")?;
    let template = PromptTemplate::for_dataset(&dataset);
    let answers = answers(row)?.unwrap_or_default();
    if template.kind.requires_answers() && answers.is_empty() {
        return Err(format!("QA task `{dataset}` row has no answers"));
    }
    let context_units = if template.kind == TaskKind::MultiDocQa {
        split_passages(&context)
    } else {
        vec![context]
    };
    Ok(EvalRecord {
        id: id_of(row, line),
        question,
        answers,
        context_units,
        task_tag: template.kind.tag().to_string(),
        dataset,
    })
}

/// Splits multi-document contexts at their `Passage N:` headers. Text before
/// the first header stays attached to the first passage.
pub fn split_passages(context: &str) -> Vec<String> {
    let mut starts = Vec::new();
    let mut offset = 0;
    for line in context.split_inclusive('\n') {
        if is_passage_header(line) {
            starts.push(offset);
        }
        offset += line.len();
    }
    if starts.len() < 2 {
        return vec![context.to_string()];
    }
    starts[0] = 0;
    starts.push(context.len());
    starts
        .windows(2)
        .map(|w| context[w[0]..w[1]].trim().to_string())
        .filter(|u| !u.is_empty())
        .collect()
}

fn is_passage_header(line: &str) -> bool {
    line.trim_end()
        .strip_prefix("Passage ")
        .and_then(|rest| rest.strip_suffix(':'))
        .is_some_and(|n| !n.is_empty() && n.bytes().all(|b| b.is_ascii_digit()))
}

fn required_str(row: &Value, key: &str) -> std::result::Result<String, String> {
    match row.get(key) {
        Some(Value::String(s)) => Ok(s.clone()),
        Some(_) => Err(format!("field `{key}` is not a string")),
        None => Err(format!("missing field `{key}`")),
    }
}

fn optional_str(row: &Value, key: &str) -> Option<String> {
    row.get(key).and_then(Value::as_str).map(str::to_string)
}

fn answers(row: &Value) -> std::result::Result<Option<Vec<String>>, String> {
    match row.get("answers") {
        None | Some(Value::Null) => Ok(None),
        Some(Value::String(s)) => Ok(Some(vec![s.clone()])),
        Some(Value::Array(items)) => items
            .iter()
            .map(|v| v.as_str().map(str::to_string).ok_or_else(|| "`answers` holds a non-string".to_string()))
            .collect::<std::result::Result<Vec<_>, _>>()
            .map(Some),
        Some(_) => Err("`answers` is neither a list nor a string".into()),
    }
}

fn id_of(row: &Value, line: usize) -> String {
    for key in ["id", "_id"] {
        match row.get(key) {
            Some(Value::String(s)) => return s.clone(),
            Some(Value::Number(n)) => return n.to_string(),
            _ => {}
        }
    }
    format!("line-{line}")
}

/// A seeded, order-preserving sample of `fraction` of `items`.
pub fn sample_fraction<T: Clone>(items: &[T], fraction: f64, seed: u64) -> Vec<T> {
    let fraction = fraction.clamp(0.0, 1.0);
    let n = (items.len() as f64 * fraction).round() as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut picked = sample(&mut rng, items.len(), n).into_vec();
    picked.sort_unstable();
    picked.into_iter().map(|i| items[i].clone()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn nq_row(n: usize) -> String {
        let ctxs: Vec<Value> = (0..n)
            .map(|i| serde_json::json!({"title": format!("T{i}"), "text": format!("passage {i}")}))
            .collect();
        serde_json::json!({"question": "who?", "answers": ["x"], "ctxs": ctxs}).to_string()
    }

    #[test]
    fn nq_row_has_twenty_units() {
        let recs = parse_records(nq_row(20).as_bytes(), DatasetFormat::Nq, true).unwrap();
        assert_eq!(recs.len(), 1);
        assert_eq!(recs[0].context_units.len(), 20);
        assert_eq!(recs[0].context_units[0], "Document [1](Title: T0) passage 0");
        assert_eq!(recs[0].id, "line-1");
    }

    #[test]
    fn empty_input_is_empty_stream() {
        assert!(parse_records(&b""[..], DatasetFormat::Nq, true).unwrap().is_empty());
        assert!(parse_records(&b"\n\n"[..], DatasetFormat::LongBench, true).unwrap().is_empty());
    }

    #[test]
    fn missing_answers_strict_vs_lenient() {
        let bad = r#"{"question": "q", "ctxs": [{"title": "", "text": "t"}]}"#;
        let input = format!("{}\n{bad}\n{}\n", nq_row(2), nq_row(3));
        let err = parse_records(input.as_bytes(), DatasetFormat::Nq, true).unwrap_err();
        assert!(matches!(err, EvalError::Schema { line: 2, .. }), "{err}");

        let mut reader = DatasetReader::new(input.as_bytes(), DatasetFormat::Nq, false);
        let recs: Vec<_> = reader.by_ref().collect::<Result<_>>().unwrap();
        assert_eq!(recs.len(), 2);
        assert_eq!(reader.skipped(), &[2]);
    }

    #[test]
    fn longbench_rows() {
        let input = concat!(
            r#"{"input": "q1", "context": "Passage 1:\nA a.\nPassage 2:\nB b.", "answers": ["a"], "dataset": "hotpotqa", "_id": "h1"}"#,
            "\n",
            r#"{"input": "", "context": "Long report.", "answers": [], "dataset": "gov_report"}"#,
            "\n",
            r#"{"input": "q", "context": "doc", "answers": [], "dataset": "qasper"}"#,
        );
        let mut reader = DatasetReader::new(input.as_bytes(), DatasetFormat::LongBench, false);
        let recs: Vec<_> = reader.by_ref().collect::<Result<_>>().unwrap();
        assert_eq!(recs.len(), 2);
        assert_eq!(recs[0].id, "h1");
        assert_eq!(recs[0].context_units, vec!["Passage 1:\nA a.", "Passage 2:\nB b."]);
        assert_eq!(recs[1].task_tag, "summarization");
        assert_eq!(reader.skipped(), &[3]);
    }

    #[test]
    fn unknown_format() {
        assert!(matches!("csv".parse::<DatasetFormat>(), Err(EvalError::UnknownFormat(_))));
        assert_eq!("LongBench".parse::<DatasetFormat>().unwrap(), DatasetFormat::LongBench);
    }

    #[test]
    fn seeded_sampler() {
        let items: Vec<usize> = (0..100).collect();
        let a = sample_fraction(&items, 0.2, 7);
        assert_eq!(a.len(), 20);
        assert_eq!(a, sample_fraction(&items, 0.2, 7));
        assert_ne!(a, sample_fraction(&items, 0.2, 8));
        assert!(a.windows(2).all(|w| w[0] < w[1]));
    }
}
