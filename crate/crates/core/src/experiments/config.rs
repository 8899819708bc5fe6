use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::distributions::DistributionSpec;
use crate::model::{validate, Discipline, Issue, Limits, ModelParams};

pub const DEFAULT_CYCLES: u64 = 10_000_000;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("config parse error at line {line}, column {column}: {message}")]
    Parse { line: usize, column: usize, message: String },
    #[error("invalid model: {}", .0.iter().map(|i| i.to_string()).collect::<Vec<_>>().join("; "))]
    Validation(Vec<Issue>),
    #[error("invalid run settings: {0}")]
    Run(String),
}

impl From<serde_json::Error> for ConfigError {
    fn from(e: serde_json::Error) -> Self {
        ConfigError::Parse { line: e.line(), column: e.column(), message: e.to_string() }
    }
}

fn one() -> u32 {
    1
}

fn default_cycles() -> u64 {
    DEFAULT_CYCLES
}

/// One queue's entry in the config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QueueConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub interarrival: Option<DistributionSpec>,
    pub service: DistributionSpec,
    #[serde(default = "one")]
    pub limit: u32,
    #[serde(default)]
    pub saturated: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SwitchoverConfig {
    pub s12: DistributionSpec,
    pub s23: DistributionSpec,
    pub s31: DistributionSpec,
    pub s13: DistributionSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Total cycles, warmup included.
    #[serde(default = "default_cycles")]
    pub cycles: u64,
    /// Defaults to 1% of `cycles`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub warmup: Option<u64>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "one")]
    pub replications: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    #[serde(default)]
    pub emit_trace: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self { cycles: DEFAULT_CYCLES, warmup: None, seed: 0, replications: 1, output: None, emit_trace: false }
    }
}

/// The on-disk document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub queues: [QueueConfig; 3],
    pub switchover: SwitchoverConfig,
    pub discipline: Discipline,
    #[serde(default)]
    pub run: RunConfig,
}

/// How long and how often to simulate.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunSpec {
    pub cycles: u64,
    pub warmup_cycles: u64,
    pub seed: u64,
    pub replications: u32,
    pub output: Option<PathBuf>,
    pub emit_trace: bool,
}

impl RunSpec {
    pub fn new(cycles: u64, warmup_cycles: u64, seed: u64, replications: u32) -> Result<Self, ConfigError> {
        if cycles <= warmup_cycles {
            return Err(ConfigError::Run(format!("cycles ({cycles}) must exceed warmup ({warmup_cycles})")));
        }
        if replications < 1 {
            return Err(ConfigError::Run("replications must be >= 1".into()));
        }
        Ok(Self { cycles, warmup_cycles, seed, replications, output: None, emit_trace: false })
    }

    /// Seeds of the replications: consecutive values from the master seed.
    pub fn seeds(&self) -> Vec<u64> {
        (0..u64::from(self.replications)).map(|i| self.seed.wrapping_add(i)).collect()
    }
}

/// A validated configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct Config {
    pub params: ModelParams,
    pub run: RunSpec,
    /// Non-fatal issues such as `zeta <= zeta*`.
    pub warnings: Vec<Issue>,
}

impl ConfigFile {
    pub fn from_params(params: &ModelParams, run: RunConfig) -> Self {
        let queue = |k: usize| QueueConfig {
            interarrival: params.interarrival[k],
            service: params.service[k],
            limit: params.limits.0[k],
            saturated: params.saturated[k],
        };
        let [s12, s23, s31, s13] = params.switchover;
        Self {
            queues: [queue(0), queue(1), queue(2)],
            switchover: SwitchoverConfig { s12, s23, s31, s13 },
            discipline: params.discipline,
            run,
        }
    }

    pub fn params(&self) -> ModelParams {
        ModelParams {
            interarrival: self.queues.each_ref().map(|q| q.interarrival),
            service: self.queues.each_ref().map(|q| q.service),
            switchover: [self.switchover.s12, self.switchover.s23, self.switchover.s31, self.switchover.s13],
            discipline: self.discipline,
            limits: Limits(self.queues.each_ref().map(|q| q.limit)),
            saturated: self.queues.each_ref().map(|q| q.saturated),
        }
    }

    pub fn validated(self) -> Result<Config, ConfigError> {
        let params = self.params();
        let (warnings, errors): (Vec<Issue>, Vec<Issue>) = validate(&params).into_iter().partition(Issue::is_warning);
        if !errors.is_empty() {
            return Err(ConfigError::Validation(errors));
        }
        let r = self.run;
        let warmup = r.warmup.unwrap_or(r.cycles / 100);
        let mut run = RunSpec::new(r.cycles, warmup, r.seed, r.replications)?;
        run.output = r.output;
        run.emit_trace = r.emit_trace;
        Ok(Config { params, run, warnings })
    }
}

pub fn parse_config(text: &str) -> Result<Config, ConfigError> {
    serde_json::from_str::<ConfigFile>(text)?.validated()
}

/// Build a config from an already parsed JSON document.
pub fn config_from_value(value: serde_json::Value) -> Result<Config, ConfigError> {
    serde_json::from_value::<ConfigFile>(value)?.validated()
}

pub fn read_text(path: &Path) -> Result<String, ConfigError> {
    std::fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.to_path_buf(), source })
}

pub fn load_config(path: &Path) -> Result<Config, ConfigError> {
    parse_config(&read_text(path)?)
}
