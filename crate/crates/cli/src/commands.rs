use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;
use std::process::ExitCode;
use std::sync::Arc;

use r2c_core::scorer::Scorer;
use r2c_core::tokenize::{counter_by_name, TokenCounter};
use r2c_core::{Compressor, OutputOrder, Prompt};
use r2c_eval::dataset::{sample_fraction, DatasetReader};
use r2c_eval::{load_dataset, record_prompt, Ablation, DatasetFormat, EchoGenerator, EvalRecord, Harness};
use serde_json::json;

use crate::settings::{CommonArgs, Effective, FileConfig, ENDPOINT_ENV};
use crate::{CompressArgs, EvaluateArgs, Failure, InputArgs, InputFormat, ScoreArgs};

fn effective(config: Option<&Path>, common: &CommonArgs, jobs: Option<usize>) -> Result<Effective, Failure> {
    let file = match config {
        Some(path) => FileConfig::load(path)?,
        None => FileConfig::default(),
    };
    let env = std::env::var(ENDPOINT_ENV).ok().filter(|v| !v.is_empty());
    Effective::resolve(common, jobs, &file, env)
}

/// A prompt to compress and, for dataset input, the record it came from.
struct Item {
    prompt: Prompt,
    record: Option<EvalRecord>,
}

fn open_input(path: Option<&Path>) -> Result<Box<dyn BufRead>, Failure> {
    match path {
        Some(p) if p != Path::new("-") => {
            let file = File::open(p).map_err(|e| Failure::Runtime(format!("cannot open {}: {e}", p.display())))?;
            Ok(Box::new(BufReader::new(file)))
        }
        _ => Ok(Box::new(BufReader::new(io::stdin()))),
    }
}

fn read_items(args: &InputArgs) -> Result<Vec<Item>, Failure> {
    let mut input = open_input(args.input.as_deref())?;
    match args.input_format {
        InputFormat::Text => {
            let mut text = String::new();
            input.read_to_string(&mut text)?;
            if text.ends_with('\n') {
                text.pop();
                if text.ends_with('\r') {
                    text.pop();
                }
            }
            let prompt = Prompt::new(text)
                .with_question(args.question.as_str())
                .with_instruction(args.instruction.as_str());
            Ok(vec![Item { prompt, record: None }])
        }
        InputFormat::Jsonl => {
            let mut items = Vec::new();
            for (i, line) in input.lines().enumerate() {
                let line = line?;
                if line.trim().is_empty() {
                    continue;
                }
                let prompt: Prompt =
                    serde_json::from_str(&line).map_err(|e| Failure::Runtime(format!("line {}: {e}", i + 1)))?;
                items.push(Item { prompt, record: None });
            }
            Ok(items)
        }
        InputFormat::Nq | InputFormat::Longbench => {
            let format = if args.input_format == InputFormat::Nq {
                DatasetFormat::Nq
            } else {
                DatasetFormat::LongBench
            };
            DatasetReader::new(input, format, true)
                .map(|r| {
                    let record = r?;
                    Ok(Item {
                        prompt: record_prompt(&record),
                        record: Some(record),
                    })
                })
                .collect()
        }
    }
}

fn compressor_for(eff: &Effective, counter: &Arc<dyn TokenCounter>, record: Option<&EvalRecord>) -> Result<Compressor, Failure> {
    let mut config = eff.config.clone();
    if record.is_some_and(|r| r.dataset == "nq") && !eff.ordering_is_explicit() {
        config.ordering = OutputOrder::Sorted;
    }
    Ok(Compressor::new(config, counter.clone())?)
}

fn writer(path: Option<&Path>) -> Result<Box<dyn Write>, Failure> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

pub fn compress(config: Option<&Path>, args: &CompressArgs) -> Result<ExitCode, Failure> {
    let eff = effective(config, &args.common, None)?;
    let counter = counter_by_name(&eff.tokenizer)?;
    let gateway = eff.gateway();
    let scorer = gateway.bind(&eff.scorer)?;
    let items = read_items(&args.input)?;

    let mut out = writer(args.output.as_deref())?;
    let mut audit: Option<Box<dyn Write>> = match (&args.audit_file, args.audit) {
        (Some(path), _) => Some(Box::new(BufWriter::new(File::create(path)?))),
        (None, true) => Some(Box::new(io::stderr())),
        (None, false) => None,
    };
    for item in &items {
        let compressor = compressor_for(&eff, &counter, item.record.as_ref())?;
        let result = compressor.compress(&item.prompt, &scorer)?;
        if args.input.input_format == InputFormat::Text {
            writeln!(out, "{}", result.compressed_context)?;
        } else {
            let mut line = json!({
                "id": item.prompt.source_id,
                "compressed_context": result.compressed_context,
                "original_tokens": result.original_tokens,
                "compressed_tokens": result.compressed_tokens,
                "output_tokens": result.output_tokens,
            });
            if let Some(record) = &item.record {
                line["prompt"] = json!(record.template().render(&result.compressed_context, &record.question));
            }
            writeln!(out, "{line}")?;
        }
        if let Some(a) = audit.as_mut() {
            let entry = json!({"effective": eff, "source_id": item.prompt.source_id, "result": result});
            writeln!(a, "{entry}")?;
        }
    }
    out.flush()?;
    if let Some(mut a) = audit {
        a.flush()?;
    }
    Ok(ExitCode::SUCCESS)
}

pub fn score(config: Option<&Path>, args: &ScoreArgs) -> Result<ExitCode, Failure> {
    let eff = effective(config, &args.common, None)?;
    let counter = counter_by_name(&eff.tokenizer)?;
    let gateway = eff.gateway();
    let scorer = gateway.bind(&eff.scorer)?;
    let items = read_items(&args.input)?;
    let mut out = writer(None)?;
    for item in &items {
        let compressor = compressor_for(&eff, &counter, item.record.as_ref())?;
        let chunks = compressor.segment(&item.prompt)?;
        let scored = compressor.score_chunks(&item.prompt.question, chunks, &scorer)?;
        let chunks: Vec<_> = scored
            .chunks
            .iter()
            .zip(&scored.spans)
            .map(|(c, spans)| {
                json!({
                    "index": c.index_original,
                    "unit_index": c.unit_index,
                    "token_count": c.token_count,
                    "score": c.score,
                    "hard_split": c.hard_split,
                    "text": c.text,
                    "sentences": c.sentences.iter().map(|s| json!({
                        "index": s.index_in_chunk,
                        "token_count": s.token_count,
                        "score": s.score,
                        "text": s.text,
                    })).collect::<Vec<_>>(),
                    "spans": spans.iter().map(|s| json!({
                        "start": s.char_start,
                        "end": s.char_end,
                        "score": s.score,
                        "text": &c.text[s.char_start..s.char_end],
                    })).collect::<Vec<_>>(),
                })
            })
            .collect();
        let report = json!({
            "id": item.prompt.source_id,
            "scorer": scorer.name(),
            "tokenizer": counter.name(),
            "pooling": eff.config.pooling,
            "chunks": chunks,
            "backend_meta": scored.backend_meta,
        });
        if args.input.input_format == InputFormat::Text {
            serde_json::to_writer_pretty(&mut out, &report)?;
            writeln!(out)?;
        } else {
            writeln!(out, "{report}")?;
        }
    }
    out.flush()?;
    Ok(ExitCode::SUCCESS)
}

pub fn evaluate(config: Option<&Path>, args: &EvaluateArgs) -> Result<ExitCode, Failure> {
    let eff = effective(config, &args.common, args.jobs)?;
    let format: DatasetFormat = args.format.parse()?;
    let ablation: Ablation = args.ablation.parse()?;
    if let Some(f) = args.sample {
        if !(0.0..=1.0).contains(&f) {
            return Err(Failure::Usage(format!("--sample must lie in [0, 1], got {f}")));
        }
    }
    if args.audit {
        eprintln!("{}", serde_json::to_string(&eff)?);
    }
    let counter = counter_by_name(&eff.tokenizer)?;
    let gateway = eff.gateway();
    let scorer = gateway.bind(&eff.scorer)?;
    if let Some(remote) = gateway.remote() {
        remote.health()?;
    }

    let mut reader = load_dataset(&args.dataset, format, args.strict)?;
    let mut records = Vec::new();
    for record in reader.by_ref() {
        records.push(record?);
    }
    if !reader.skipped().is_empty() {
        eprintln!("r2c: skipped malformed rows at lines {:?}", reader.skipped());
    }
    if let Some(f) = args.sample {
        records = sample_fraction(&records, f, args.seed);
    }

    let generator = args.generator_reply.as_ref().map(EchoGenerator::new);
    let mut harness = Harness::new(eff.config.clone(), counter, &scorer)
        .with_jobs(eff.jobs)
        .with_ablation(ablation)
        .with_nq_ordering((!eff.ordering_is_explicit()).then_some(OutputOrder::Sorted));
    if let Some(g) = &generator {
        harness = harness.with_generator(g);
    }
    let report = harness.run(records)?;
    report.write_files(&args.report)?;

    let a = &report.aggregates;
    let mut out = io::stdout().lock();
    writeln!(out, "records: {} ({} failed)", a.records, a.failed)?;
    writeln!(out, "tokenizer: {}  scorer: {}  ablation: {ablation}", report.tokenizer, report.scorer)?;
    writeln!(out, "mean original tokens: {:.1}", a.mean_original_tokens)?;
    writeln!(out, "mean compressed tokens: {:.1}", a.mean_compressed_tokens)?;
    writeln!(out, "mean output tokens: {:.1}", a.mean_output_tokens)?;
    writeln!(out, "mean ratio: {:.4}", a.mean_ratio)?;
    writeln!(
        out,
        "mean compression latency: {:.2} ms (scoring {:.2} ms)",
        a.mean_compression_latency_ms, a.mean_scoring_latency_ms
    )?;
    match a.metric_mean {
        Some(m) => writeln!(out, "span em: {m:.4} over {} records", a.metric_count)?,
        None => writeln!(out, "span em: n/a")?,
    }
    writeln!(
        out,
        "report: {} {}",
        args.report.with_extension("csv").display(),
        args.report.with_extension("json").display()
    )?;
    if a.failed > 0 {
        for row in report.rows.iter().filter(|r| r.error.is_some()).take(5) {
            eprintln!("r2c: record {}: {}", row.id, row.error.as_deref().unwrap_or_default());
        }
        return Ok(ExitCode::FAILURE);
    }
    Ok(ExitCode::SUCCESS)
}
