//! Run configuration: a TOML document, optionally overridden per key from
//! the command line.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::code_index::ScanOptions;
use crate::evolution::EvolutionConfig;
use crate::extractor::ExtractorConfig;
use crate::provider::{
    DeterministicProvider, ProviderBudget, RemoteConfig, RemoteProvider, SemanticProvider, DEFAULT_MIN_SIMILARITY,
};

/// Environment variable naming the config file.
pub const CONFIG_ENV: &str = "RPG_CONFIG";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProviderKind {
    Deterministic,
    Remote,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProviderSection {
    pub kind: ProviderKind,
    pub endpoint: Option<String>,
    pub model: Option<String>,
    pub max_payload_tokens: usize,
    pub retries: u32,
    /// Deterministic backend: read features from docstrings when present.
    pub use_docstrings: bool,
}

impl Default for ProviderSection {
    fn default() -> Self {
        Self {
            kind: ProviderKind::Deterministic,
            endpoint: None,
            model: None,
            max_payload_tokens: ProviderBudget::default().max_payload_tokens,
            retries: 3,
            use_docstrings: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvolutionSection {
    pub tau_drift: f64,
}

impl Default for EvolutionSection {
    fn default() -> Self {
        Self { tau_drift: EvolutionConfig::default().tau_drift }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RoutingSection {
    pub min_similarity: f64,
}

impl Default for RoutingSection {
    fn default() -> Self {
        Self { min_similarity: DEFAULT_MIN_SIMILARITY }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExtractorSection {
    pub min_scope_depth: usize,
    pub include: Vec<String>,
    pub exclude: Vec<String>,
}

impl Default for ExtractorSection {
    fn default() -> Self {
        let scan = ScanOptions::default();
        Self { min_scope_depth: 1, include: scan.include_globs, exclude: scan.exclude_globs }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PathsSection {
    pub graph: PathBuf,
    pub diagnostics: PathBuf,
}

impl Default for PathsSection {
    fn default() -> Self {
        Self { graph: "rpg.json".into(), diagnostics: "diagnostics.jsonl".into() }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub provider: ProviderSection,
    pub evolution: EvolutionSection,
    pub routing: RoutingSection,
    pub extractor: ExtractorSection,
    pub paths: PathsSection,
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("{path}: {source}")]
    Read {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Parse { path: String, message: String },
    #[error("override `{0}`: expected key=value")]
    Override(String),
    #[error("remote provider needs provider.endpoint and provider.model")]
    RemoteIncomplete,
    #[error("{0}")]
    Invalid(String),
}

impl Config {
    pub fn from_toml(text: &str, origin: &str) -> Result<Self, ConfigError> {
        let cfg: Config =
            toml::from_str(text).map_err(|e| ConfigError::Parse { path: origin.to_string(), message: e.to_string() })?;
        cfg.check()?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|source| ConfigError::Read { path: path.display().to_string(), source })?;
        Self::from_toml(&text, &path.display().to_string())
    }

    /// Explicit path, else `$RPG_CONFIG`, else defaults.
    pub fn load(explicit: Option<&Path>) -> Result<Self, ConfigError> {
        match explicit {
            Some(p) => Self::from_file(p),
            None => match std::env::var_os(CONFIG_ENV) {
                Some(p) => Self::from_file(Path::new(&p)),
                None => Ok(Self::default()),
            },
        }
    }

    /// Apply `section.key=value` overrides. Values are parsed as TOML and
    /// fall back to plain strings.
    pub fn with_overrides<S: AsRef<str>>(self, overrides: &[S]) -> Result<Self, ConfigError> {
        if overrides.is_empty() {
            return Ok(self);
        }
        let mut doc = toml::Table::try_from(&self).map_err(|e| ConfigError::Invalid(e.to_string()))?;
        for o in overrides {
            let o = o.as_ref();
            let (key, raw) = o.split_once('=').ok_or_else(|| ConfigError::Override(o.to_string()))?;
            let (section, field) = key.trim().split_once('.').ok_or_else(|| ConfigError::Override(o.to_string()))?;
            let value = toml::from_str::<toml::Table>(&format!("v = {raw}"))
                .ok()
                .and_then(|mut t| t.remove("v"))
                .unwrap_or_else(|| toml::Value::String(raw.trim().to_string()));
            let table = doc
                .entry(section.to_string())
                .or_insert_with(|| toml::Value::Table(Default::default()))
                .as_table_mut()
                .ok_or_else(|| ConfigError::Override(o.to_string()))?;
            table.insert(field.to_string(), value);
        }
        let text = toml::to_string(&doc).map_err(|e| ConfigError::Invalid(e.to_string()))?;
        Self::from_toml(&text, "--set")
    }

    fn check(&self) -> Result<(), ConfigError> {
        if !(0.0..=1.0).contains(&self.evolution.tau_drift) {
            return Err(ConfigError::Invalid(format!("evolution.tau_drift must be in [0, 1], got {}", self.evolution.tau_drift)));
        }
        if !(0.0..=1.0).contains(&self.routing.min_similarity) {
            return Err(ConfigError::Invalid(format!(
                "routing.min_similarity must be in [0, 1], got {}",
                self.routing.min_similarity
            )));
        }
        if self.provider.max_payload_tokens == 0 {
            return Err(ConfigError::Invalid("provider.max_payload_tokens must be positive".into()));
        }
        Ok(())
    }

    pub fn budget(&self) -> ProviderBudget {
        ProviderBudget { max_payload_tokens: self.provider.max_payload_tokens }
    }

    pub fn scan_options(&self) -> ScanOptions {
        ScanOptions { include_globs: self.extractor.include.clone(), exclude_globs: self.extractor.exclude.clone() }
    }

    pub fn extractor_config(&self) -> ExtractorConfig {
        ExtractorConfig { min_scope_depth: self.extractor.min_scope_depth, scan: self.scan_options() }
    }

    pub fn evolution_config(&self) -> EvolutionConfig {
        EvolutionConfig { tau_drift: self.evolution.tau_drift, min_scope_depth: self.extractor.min_scope_depth }
    }

    pub fn provider(&self) -> Result<Box<dyn SemanticProvider>, ConfigError> {
        match self.provider.kind {
            ProviderKind::Deterministic => Ok(Box::new(DeterministicProvider::new(
                self.budget(),
                self.routing.min_similarity,
                self.provider.use_docstrings,
            ))),
            ProviderKind::Remote => {
                let (Some(endpoint), Some(model)) = (&self.provider.endpoint, &self.provider.model) else {
                    return Err(ConfigError::RemoteIncomplete);
                };
                let rc = RemoteConfig {
                    model: model.clone(),
                    retries: self.provider.retries,
                    budget: self.budget(),
                    min_similarity: self.routing.min_similarity,
                };
                Ok(Box::new(RemoteProvider::http(endpoint, rc)))
            }
        }
    }
}
