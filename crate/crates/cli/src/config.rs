//! Run configuration: a TOML file overridden by command-line flags.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{bail, Context, Result};
use gecmf_core::evaluation::RerankMode;
use gecmf_core::{MaskStrategy, MatchMode, Scheme};
use serde::{Deserialize, Serialize};

pub const ENDPOINT_ENV: &str = "GECMF_ENDPOINT";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelKind {
    GoldMock,
    LexiconMock,
    Remote,
}

impl FromStr for ModelKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "gold-mock" => Ok(ModelKind::GoldMock),
            "lexicon-mock" => Ok(ModelKind::LexiconMock),
            "remote" => Ok(ModelKind::Remote),
            other => Err(format!("unknown model {other:?} (expected gold-mock, lexicon-mock or remote)")),
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ModelKind::GoldMock => "gold-mock",
            ModelKind::LexiconMock => "lexicon-mock",
            ModelKind::Remote => "remote",
        })
    }
}

/// Every setting optional; used both for the config file and for flags.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct Overrides {
    pub corpus: Option<PathBuf>,
    pub instances: Option<PathBuf>,
    #[serde(default, with = "opt_str")]
    pub scheme: Option<Scheme>,
    #[serde(default, with = "opt_str")]
    pub strategy: Option<MaskStrategy>,
    #[serde(default, with = "opt_str")]
    pub model: Option<ModelKind>,
    pub endpoint: Option<String>,
    pub top_k: Option<usize>,
    #[serde(default, with = "opt_str")]
    pub mode: Option<MatchMode>,
    pub include_deletions: Option<bool>,
    pub rerank: Option<RerankMode>,
    pub gold_rank: Option<usize>,
    pub jobs: Option<usize>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub timeout_secs: Option<u64>,
    pub retries: Option<u32>,
    pub max_in_flight: Option<usize>,
}

/// Round-trips enum fields through their `FromStr` / `Display` spelling so the
/// file accepts the same words as the flags.
mod opt_str {
    use std::fmt::Display;
    use std::str::FromStr;

    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<T: Display, S: Serializer>(v: &Option<T>, s: S) -> Result<S::Ok, S::Error> {
        match v {
            Some(v) => s.serialize_str(&v.to_string()),
            None => s.serialize_none(),
        }
    }

    pub fn deserialize<'de, T, D>(d: D) -> Result<Option<T>, D::Error>
    where
        T: FromStr<Err = String>,
        D: Deserializer<'de>,
    {
        Option::<String>::deserialize(d)?.map(|s| s.parse().map_err(serde::de::Error::custom)).transpose()
    }
}

impl Overrides {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        toml::from_str(&text).with_context(|| format!("parsing config {}", path.display()))
    }

    /// Fields set in `self` win over `base`.
    pub fn over(self, base: Overrides) -> Overrides {
        Overrides {
            corpus: self.corpus.or(base.corpus),
            instances: self.instances.or(base.instances),
            scheme: self.scheme.or(base.scheme),
            strategy: self.strategy.or(base.strategy),
            model: self.model.or(base.model),
            endpoint: self.endpoint.or(base.endpoint),
            top_k: self.top_k.or(base.top_k),
            mode: self.mode.or(base.mode),
            include_deletions: self.include_deletions.or(base.include_deletions),
            rerank: self.rerank.or(base.rerank),
            gold_rank: self.gold_rank.or(base.gold_rank),
            jobs: self.jobs.or(base.jobs),
            seed: self.seed.or(base.seed),
            out: self.out.or(base.out),
            timeout_secs: self.timeout_secs.or(base.timeout_secs),
            retries: self.retries.or(base.retries),
            max_in_flight: self.max_in_flight.or(base.max_in_flight),
        }
    }
}

/// Fully resolved settings, echoed into every run manifest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub corpus: Option<PathBuf>,
    pub instances: Option<PathBuf>,
    /// `None` means both schemes.
    pub scheme: Option<Scheme>,
    /// `None` means all three strategies.
    pub strategy: Option<MaskStrategy>,
    pub model: ModelKind,
    pub endpoint: Option<String>,
    pub top_k: usize,
    pub mode: Option<MatchMode>,
    pub include_deletions: bool,
    pub rerank: RerankMode,
    pub gold_rank: usize,
    pub jobs: Option<usize>,
    /// Reserved; every stage is deterministic today.
    pub seed: u64,
    pub out: PathBuf,
    pub timeout_secs: u64,
    pub retries: u32,
    pub max_in_flight: usize,
}

impl RunConfig {
    /// Resolves flags over file over defaults. The endpoint falls back to
    /// `env_endpoint` (the `GECMF_ENDPOINT` variable) last.
    pub fn resolve(flags: Overrides, file: Overrides, env_endpoint: Option<String>) -> Result<Self> {
        let o = flags.over(file);
        let config = RunConfig {
            corpus: o.corpus,
            instances: o.instances,
            scheme: o.scheme,
            strategy: o.strategy,
            model: o.model.unwrap_or(ModelKind::GoldMock),
            endpoint: o.endpoint.or(env_endpoint),
            top_k: o.top_k.unwrap_or(5),
            mode: o.mode,
            include_deletions: o.include_deletions.unwrap_or(false),
            rerank: o.rerank.unwrap_or_default(),
            gold_rank: o.gold_rank.unwrap_or(1),
            jobs: o.jobs,
            seed: o.seed.unwrap_or(0),
            out: o.out.unwrap_or_else(|| PathBuf::from("gecmf-out")),
            timeout_secs: o.timeout_secs.unwrap_or(30),
            retries: o.retries.unwrap_or(2),
            max_in_flight: o.max_in_flight.unwrap_or(8),
        };
        config.validate()?;
        Ok(config)
    }

    fn validate(&self) -> Result<()> {
        if self.top_k == 0 {
            bail!("--top-k must be at least 1");
        }
        if self.gold_rank == 0 {
            bail!("--gold-rank is 1-based");
        }
        if self.jobs == Some(0) {
            bail!("--jobs must be at least 1");
        }
        if self.max_in_flight == 0 {
            bail!("max-in-flight must be at least 1");
        }
        if self.model == ModelKind::Remote && self.endpoint.is_none() {
            bail!("the remote model needs --endpoint or {ENDPOINT_ENV}");
        }
        Ok(())
    }

    /// Worker threads: `--jobs`, else the logical CPU count, capped by the
    /// in-flight request limit for the remote model.
    pub fn worker_count(&self) -> usize {
        let jobs = self.jobs.unwrap_or_else(|| std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1));
        if self.model == ModelKind::Remote {
            jobs.min(self.max_in_flight)
        } else {
            jobs
        }
    }
}
