//! Run configuration: one TOML file drives every command. Relative paths
//! resolve against the file's directory; unknown keys are rejected.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::agent::{AgentParams, Variant};
use crate::catalog::FieldMap;
use crate::memory::ValueMode;
use crate::simulator::RuleParams;

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("invalid config {path}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error("{0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub domain: String,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_workers")]
    pub workers: usize,
    #[serde(default = "default_max_turns")]
    pub max_turns: u32,
    /// Label for episode ids and fixture keys; the variant name if unset.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub run_name: Option<String>,
    #[serde(default = "default_variant")]
    pub variant: Variant,
    pub paths: Paths,
    #[serde(default)]
    pub ingest: IngestConfig,
    #[serde(default)]
    pub profiles: ProfilesConfig,
    #[serde(default)]
    pub simulator: SimulatorConfig,
    #[serde(default)]
    pub memory: MemoryConfig,
    #[serde(default)]
    pub agent: AgentParams,
    #[serde(default)]
    pub gateway: GatewayConfig,
    #[serde(default)]
    pub embedder: EmbedderConfig,
    #[serde(skip)]
    base_dir: PathBuf,
}

fn default_workers() -> usize {
    4
}
fn default_max_turns() -> u32 {
    10
}
fn default_variant() -> Variant {
    Variant::Csi
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Paths {
    /// Catalog snapshot, written by `ingest` and read by everything else.
    pub catalog: PathBuf,
    pub profiles: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub index: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fixtures: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub raw_reviews: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub raw_metadata: Option<PathBuf>,
    #[serde(default = "default_out")]
    pub out: PathBuf,
}

fn default_out() -> PathBuf {
    PathBuf::from("out")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IngestConfig {
    pub k_core: usize,
    pub max_malformed_fraction: f64,
    pub fields: FieldMap,
}

impl Default for IngestConfig {
    fn default() -> Self {
        Self {
            k_core: 10,
            max_malformed_fraction: 0.01,
            fields: FieldMap::default(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProfilesConfig {
    /// Draw this many users per trait value after building.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sample_per_trait: Option<usize>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SimulatorKind {
    #[default]
    Rule,
    Llm,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulatorConfig {
    pub mode: SimulatorKind,
    pub rule: RuleParams,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MemoryMode {
    #[default]
    Off,
    Offline,
    Online,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MemoryConfig {
    pub mode: MemoryMode,
    pub value: ValueMode,
    /// Records to preload. Required offline; optional online.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
    /// Episodes between online memory updates.
    pub sync_every: usize,
}

impl Default for MemoryConfig {
    fn default() -> Self {
        Self {
            mode: MemoryMode::Off,
            value: ValueMode::Utterance,
            path: None,
            sync_every: 8,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BackendKind {
    Live,
    #[default]
    Scripted,
    Null,
}

impl BackendKind {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "live" => Some(Self::Live),
            "scripted" => Some(Self::Scripted),
            "null" => Some(Self::Null),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GatewayConfig {
    pub backend: BackendKind,
    pub base_url: String,
    pub model: String,
    /// Environment variable holding the API key.
    pub api_key_env: String,
    pub requests_per_minute: u32,
    pub timeout_secs: u64,
    pub temperature: f64,
    pub max_tokens: u32,
    pub json_retries: u32,
}

impl Default for GatewayConfig {
    fn default() -> Self {
        Self {
            backend: BackendKind::Scripted,
            base_url: "https://api.openai.com/v1".into(),
            model: "gpt-4o-mini".into(),
            api_key_env: "CONVSALES_API_KEY".into(),
            requests_per_minute: 60,
            timeout_secs: 120,
            temperature: 0.0,
            max_tokens: 1024,
            json_retries: 2,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EmbedderKind {
    #[default]
    Hash,
    Http,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EmbedderConfig {
    pub kind: EmbedderKind,
    pub dim: usize,
    pub base_url: String,
    pub model: String,
}

impl Default for EmbedderConfig {
    fn default() -> Self {
        Self {
            kind: EmbedderKind::Hash,
            dim: 256,
            base_url: "https://api.openai.com/v1".into(),
            model: "text-embedding-3-small".into(),
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str, base_dir: &Path) -> Result<Self, ConfigError> {
        let mut cfg: RunConfig = toml::from_str(text).map_err(|e| ConfigError::Parse {
            path: base_dir.to_path_buf(),
            message: e.to_string(),
        })?;
        cfg.base_dir = base_dir.to_path_buf();
        cfg.check()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = fs::read_to_string(path).map_err(|source| ConfigError::Read {
            path: path.to_path_buf(),
            source,
        })?;
        let base = path.parent().unwrap_or(Path::new(".")).to_path_buf();
        Self::from_toml(&text, &base).map_err(|e| match e {
            ConfigError::Parse { message, .. } => ConfigError::Parse {
                path: path.to_path_buf(),
                message,
            },
            other => other,
        })
    }

    fn check(&self) -> Result<(), ConfigError> {
        let bad = |m: &str| Err(ConfigError::Invalid(m.to_string()));
        if self.workers == 0 {
            return bad("workers must be at least 1");
        }
        if self.max_turns == 0 {
            return bad("max_turns must be at least 1");
        }
        if self.agent.suggest_k == 0 || self.agent.candidate_k == 0 || self.agent.retrieval_k == 0 {
            return bad("agent k values must be at least 1");
        }
        if self.agent.memory_k == 0 {
            return bad("agent.memory_k must be at least 1");
        }
        if self.memory.mode == MemoryMode::Offline && self.memory.path.is_none() {
            return bad("memory.path is required for offline memory");
        }
        if self.memory.sync_every == 0 {
            return bad("memory.sync_every must be at least 1");
        }
        let r = &self.simulator.rule;
        for (name, v) in [("theta_in", r.theta_in), ("theta_out", r.theta_out), ("theta_interest", r.theta_interest)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(ConfigError::Invalid(format!("simulator.rule.{name} must be in [0, 1]")));
            }
        }
        Ok(())
    }

    pub fn base_dir(&self) -> &Path {
        &self.base_dir
    }

    /// `p` relative to the config file's directory.
    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    pub fn run_label(&self) -> String {
        self.run_name.clone().unwrap_or_else(|| self.variant.name().to_string())
    }

    /// The config as JSON, with the output directory left out since it does
    /// not change results.
    pub fn to_json(&self) -> serde_json::Value {
        let mut v = serde_json::to_value(self).expect("config serializes");
        if let Some(paths) = v.get_mut("paths").and_then(|p| p.as_object_mut()) {
            paths.remove("out");
        }
        v
    }

    /// SHA-256 of [`RunConfig::to_json`], hex encoded.
    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.to_json().to_string().as_bytes()))
    }
}
