//! Effective settings: flags over environment over config file over defaults.

use std::collections::BTreeMap;
use std::path::Path;
use std::sync::Arc;
use std::time::Duration;

use clap::Args;
use r2c_core::model::{OutputOrder, Pooling};
use r2c_core::scorer::{BoundScorer, RemoteConfig, RemoteScorer, ScorerGateway};
use r2c_core::CompressionConfig;
use serde::{Deserialize, Serialize};

use crate::Failure;

pub const ENDPOINT_ENV: &str = "R2C_SCORER_ENDPOINT";
pub const DEFAULT_SCORER: &str = "lexical";
pub const DEFAULT_TOKENIZER: &str = "cl100k";

/// Compression and scoring flags shared by every subcommand.
#[derive(Debug, Clone, Default, Args)]
pub struct CommonArgs {
    /// Target prompt length in tokens
    #[arg(long, value_name = "N")]
    pub target_tokens: Option<usize>,

    /// Share of the removal budget spent on whole chunks, in [0, 1]
    #[arg(long, value_parser = parse_unit_interval)]
    pub rho: Option<f64>,

    /// Exponent on inverted chunk scores when splitting the sentence budget
    #[arg(long, value_parser = parse_non_negative)]
    pub gamma: Option<f64>,

    /// Token score pooling: mean, max or sum
    #[arg(long)]
    pub pooling: Option<Pooling>,

    /// Output order of kept chunks: original or sorted
    #[arg(long)]
    pub ordering: Option<OutputOrder>,

    /// Token cap per chunk
    #[arg(long, value_name = "N")]
    pub max_chunk_tokens: Option<usize>,

    /// Carry unused chunk budget into the sentence stage
    #[arg(long)]
    pub slack_rollover: bool,

    /// uniform, lexical, remote, or remote:ENDPOINT
    #[arg(long)]
    pub scorer: Option<String>,

    /// whitespace, cl100k, o200k, or bpe:PATH
    #[arg(long)]
    pub tokenizer: Option<String>,
}

fn parse_unit_interval(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if (0.0..=1.0).contains(&v) {
        Ok(v)
    } else {
        Err(format!("{v} is outside [0, 1]"))
    }
}

fn parse_non_negative(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if v.is_finite() && v >= 0.0 {
        Ok(v)
    } else {
        Err(format!("{v} must be a finite non-negative number"))
    }
}

/// Contents of a `--config` TOML file. Every key is optional.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub target_tokens: Option<usize>,
    pub rho: Option<f64>,
    pub gamma: Option<f64>,
    pub pooling: Option<Pooling>,
    pub ordering: Option<OutputOrder>,
    pub max_chunk_tokens: Option<usize>,
    pub slack_rollover: Option<bool>,
    pub epsilon: Option<f64>,
    pub scorer: Option<String>,
    pub endpoint: Option<String>,
    pub tokenizer: Option<String>,
    pub timeout_secs: Option<u64>,
    pub max_retries: Option<u32>,
    pub max_in_flight: Option<usize>,
    pub jobs: Option<usize>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self, Failure> {
        let text = std::fs::read_to_string(path).map_err(|e| Failure::Usage(format!("cannot read config {}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| Failure::Usage(format!("invalid config {}: {e}", path.display())))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Source {
    Flag,
    Env,
    File,
    Default,
}

/// Resolved settings plus where each one came from.
#[derive(Debug, Clone, Serialize)]
pub struct Effective {
    pub config: CompressionConfig,
    pub scorer: String,
    pub endpoint: Option<String>,
    pub tokenizer: String,
    pub jobs: usize,
    pub sources: BTreeMap<&'static str, Source>,
    #[serde(skip)]
    remote: RemoteTuning,
}

#[derive(Debug, Clone, Default)]
struct RemoteTuning {
    timeout_secs: Option<u64>,
    max_retries: Option<u32>,
    max_in_flight: Option<usize>,
}

fn pick<T>(sources: &mut BTreeMap<&'static str, Source>, key: &'static str, flag: Option<T>, file: Option<T>, default: T) -> T {
    let (value, source) = match (flag, file) {
        (Some(v), _) => (v, Source::Flag),
        (None, Some(v)) => (v, Source::File),
        (None, None) => (default, Source::Default),
    };
    sources.insert(key, source);
    value
}

impl Effective {
    pub fn resolve(args: &CommonArgs, jobs: Option<usize>, file: &FileConfig, env_endpoint: Option<String>) -> Result<Self, Failure> {
        let mut s = BTreeMap::new();
        let d = CompressionConfig::default();
        let config = CompressionConfig {
            target_tokens: pick(&mut s, "target_tokens", args.target_tokens, file.target_tokens, d.target_tokens),
            rho: pick(&mut s, "rho", args.rho, file.rho, d.rho),
            gamma: pick(&mut s, "gamma", args.gamma, file.gamma, d.gamma),
            pooling: pick(&mut s, "pooling", args.pooling, file.pooling, d.pooling),
            ordering: pick(&mut s, "ordering", args.ordering, file.ordering, d.ordering),
            max_chunk_tokens: pick(&mut s, "max_chunk_tokens", args.max_chunk_tokens, file.max_chunk_tokens, d.max_chunk_tokens),
            epsilon: pick(&mut s, "epsilon", None, file.epsilon, d.epsilon),
            slack_rollover: pick(&mut s, "slack_rollover", args.slack_rollover.then_some(true), file.slack_rollover, false),
        };
        config.validate().map_err(|e| Failure::Usage(e.to_string()))?;

        let scorer_spec = pick(&mut s, "scorer", args.scorer.clone(), file.scorer.clone(), DEFAULT_SCORER.to_string());
        let (scorer, inline_endpoint) = match scorer_spec.split_once(':') {
            Some(("remote", url)) if !url.is_empty() => ("remote".to_string(), Some(url.to_string())),
            _ => (scorer_spec, None),
        };
        let scorer_source = s["scorer"];
        let endpoint = match (inline_endpoint, env_endpoint, file.endpoint.clone()) {
            (Some(url), _, _) if scorer_source == Source::Flag => Some((url, Source::Flag)),
            (_, Some(url), _) => Some((url, Source::Env)),
            (Some(url), None, _) => Some((url, scorer_source)),
            (None, None, Some(url)) => Some((url, Source::File)),
            (None, None, None) => None,
        };
        if let Some((_, source)) = &endpoint {
            s.insert("endpoint", *source);
        }
        if scorer == "remote" && endpoint.is_none() {
            return Err(Failure::Usage(format!(
                "the remote scorer needs an endpoint: use --scorer remote:URL, {ENDPOINT_ENV}, or `endpoint` in the config file"
            )));
        }
        let tokenizer = pick(&mut s, "tokenizer", args.tokenizer.clone(), file.tokenizer.clone(), DEFAULT_TOKENIZER.to_string());
        let jobs = pick(&mut s, "jobs", jobs, file.jobs, 1).max(1);
        Ok(Effective {
            config,
            scorer,
            endpoint: endpoint.map(|e| e.0),
            tokenizer,
            jobs,
            sources: s,
            remote: RemoteTuning {
                timeout_secs: file.timeout_secs,
                max_retries: file.max_retries,
                max_in_flight: file.max_in_flight,
            },
        })
    }

    pub fn ordering_is_explicit(&self) -> bool {
        self.sources.get("ordering") != Some(&Source::Default)
    }

    /// The offline backends, plus `remote` when an endpoint is known.
    pub fn gateway(&self) -> Backends {
        let mut gateway = ScorerGateway::with_offline_backends();
        let remote = self.endpoint.as_ref().map(|endpoint| {
            let mut cfg = RemoteConfig::new(endpoint.as_str());
            if let Some(t) = self.remote.timeout_secs {
                cfg.timeout = Duration::from_secs(t);
            }
            if let Some(r) = self.remote.max_retries {
                cfg.max_retries = r;
            }
            if let Some(n) = self.remote.max_in_flight {
                cfg.max_in_flight = n;
            }
            let scorer = Arc::new(RemoteScorer::new(cfg));
            gateway.register("remote", scorer.clone());
            scorer
        });
        Backends { gateway, remote }
    }
}

pub struct Backends {
    gateway: ScorerGateway,
    remote: Option<Arc<RemoteScorer>>,
}

impl Backends {
    pub fn bind(&self, name: &str) -> r2c_core::Result<BoundScorer<'_>> {
        self.gateway.bind(name)
    }

    pub fn remote(&self) -> Option<&RemoteScorer> {
        self.remote.as_deref()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn precedence() {
        let file = FileConfig {
            target_tokens: Some(300),
            rho: Some(0.5),
            scorer: Some("remote:http://file".into()),
            ..Default::default()
        };
        let args = CommonArgs {
            rho: Some(0.9),
            ..Default::default()
        };
        let eff = Effective::resolve(&args, None, &file, Some("http://env".into())).unwrap();
        assert_eq!(eff.config.target_tokens, 300);
        assert_eq!(eff.config.rho, 0.9);
        assert_eq!(eff.config.gamma, 1.0);
        assert_eq!(eff.endpoint.as_deref(), Some("http://env"));
        assert_eq!(eff.sources["rho"], Source::Flag);
        assert_eq!(eff.sources["target_tokens"], Source::File);
        assert_eq!(eff.sources["gamma"], Source::Default);
        assert_eq!(eff.sources["endpoint"], Source::Env);

        let args = CommonArgs {
            scorer: Some("remote:http://flag".into()),
            ..Default::default()
        };
        let eff = Effective::resolve(&args, None, &file, Some("http://env".into())).unwrap();
        assert_eq!(eff.endpoint.as_deref(), Some("http://flag"));
    }

    #[test]
    fn remote_without_endpoint_is_usage_error() {
        let args = CommonArgs {
            scorer: Some("remote".into()),
            ..Default::default()
        };
        assert!(matches!(
            Effective::resolve(&args, None, &FileConfig::default(), None),
            Err(Failure::Usage(_))
        ));
    }

    #[test]
    fn file_values_are_validated() {
        let file = FileConfig {
            rho: Some(1.5),
            ..Default::default()
        };
        assert!(matches!(
            Effective::resolve(&CommonArgs::default(), None, &file, None),
            Err(Failure::Usage(_))
        ));
    }
}
