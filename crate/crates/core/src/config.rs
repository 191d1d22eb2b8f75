//! Run configuration, read from TOML. Every section and key is optional.
//!
//! ```toml
//! [backend]
//! base_url = "https://api.openai.com/v1"
//! model_id = "gpt-4o-mini"
//! embedding_model_id = "text-embedding-3-small"
//! api_key_env = "TRACER_API_KEY"
//! concurrency = 4
//! timeout_secs = 60
//! max_retries = 3
//! # nli_url = "http://localhost:8080/nli"
//! # classifier_url = "http://localhost:8080/classify"
//!
//! [thresholds]
//! tau_low = 0.40
//! tau_high = 0.85
//! tau_che = 0.5
//! top_k = 5
//! assumption_max_number = 3
//!
//! [stages]
//! ablation = "cfg4"
//! relevance_check = true
//! refinement = true
//! reassess_only_true = false
//!
//! [paths]
//! # cache = "cache.jsonl"
//! # templates = "my-templates/"
//! # exemplars = "exemplars/"
//! # external_verdicts = "verdicts.jsonl"
//! ```

use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::alignment::RefinementThresholds;
use crate::causality::{DEFAULT_MAX_ASSUMPTIONS, DEFAULT_VAGUE_REFERENCES};
use crate::che::{CheParams, DEFAULT_TAU_CHE, DEFAULT_TOP_K};
use crate::eval::AblationConfig;
use crate::gateway::{GatewayConfig, RetryPolicy, API_KEY_ENV};
use crate::pipeline::{Exemplars, PipelineConfig};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("invalid config: {0}")]
    Toml(#[from] toml::de::Error),
    #[error("invalid config: {0}")]
    Invalid(String),
    #[error("{what} {path} does not exist")]
    MissingPath { what: &'static str, path: PathBuf },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BackendSettings {
    pub base_url: String,
    pub model_id: String,
    pub embedding_model_id: String,
    pub api_key_env: String,
    pub concurrency: usize,
    pub timeout_secs: u64,
    pub max_retries: u32,
    pub nli_url: Option<String>,
    pub classifier_url: Option<String>,
}

impl Default for BackendSettings {
    fn default() -> Self {
        let gw = GatewayConfig::default();
        BackendSettings {
            base_url: "https://api.openai.com/v1".into(),
            model_id: gw.model_id,
            embedding_model_id: gw.embedding_model_id,
            api_key_env: API_KEY_ENV.into(),
            concurrency: gw.max_in_flight,
            timeout_secs: 60,
            max_retries: gw.retry.max_retries,
            nli_url: None,
            classifier_url: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Thresholds {
    pub tau_low: f64,
    pub tau_high: f64,
    pub tau_che: f64,
    pub top_k: usize,
    pub assumption_max_number: usize,
}

impl Default for Thresholds {
    fn default() -> Self {
        let r = RefinementThresholds::default();
        Thresholds {
            tau_low: r.low.unwrap_or(0.40),
            tau_high: r.high.unwrap_or(0.85),
            tau_che: DEFAULT_TAU_CHE,
            top_k: DEFAULT_TOP_K,
            assumption_max_number: DEFAULT_MAX_ASSUMPTIONS,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StageToggles {
    pub ablation: String,
    pub relevance_check: bool,
    pub refinement: bool,
    pub reassess_only_true: bool,
}

impl Default for StageToggles {
    fn default() -> Self {
        StageToggles {
            ablation: AblationConfig::full().name(),
            relevance_check: true,
            refinement: true,
            reassess_only_true: false,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Paths {
    pub cache: Option<PathBuf>,
    pub templates: Option<PathBuf>,
    pub exemplars: Option<PathBuf>,
    pub external_verdicts: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub backend: BackendSettings,
    pub thresholds: Thresholds,
    pub stages: StageToggles,
    pub paths: Paths,
}

fn in_unit_interval(name: &str, x: f64, lo: f64) -> Result<(), ConfigError> {
    if x.is_finite() && (lo..=1.0).contains(&x) {
        Ok(())
    } else {
        Err(ConfigError::Invalid(format!("{name} = {x} is outside [{lo}, 1]")))
    }
}

fn require_path(what: &'static str, path: &Option<PathBuf>) -> Result<(), ConfigError> {
    match path {
        Some(p) if !p.exists() => Err(ConfigError::MissingPath { what, path: p.clone() }),
        _ => Ok(()),
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        Ok(toml::from_str(text)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ConfigError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    pub fn ablation(&self) -> Result<AblationConfig, ConfigError> {
        let cfg: AblationConfig = self
            .stages
            .ablation
            .parse()
            .map_err(|e: crate::eval::EvalError| ConfigError::Invalid(e.to_string()))?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let t = &self.thresholds;
        in_unit_interval("tau_low", t.tau_low, -1.0)?;
        in_unit_interval("tau_high", t.tau_high, -1.0)?;
        in_unit_interval("tau_che", t.tau_che, -1.0)?;
        if t.tau_low > t.tau_high {
            return Err(ConfigError::Invalid(format!(
                "tau_low ({}) exceeds tau_high ({})",
                t.tau_low, t.tau_high
            )));
        }
        if t.top_k == 0 {
            return Err(ConfigError::Invalid("top_k must be at least 1".into()));
        }
        if t.assumption_max_number == 0 {
            return Err(ConfigError::Invalid("assumption_max_number must be at least 1".into()));
        }
        if self.backend.concurrency == 0 {
            return Err(ConfigError::Invalid("concurrency must be at least 1".into()));
        }
        if self.backend.api_key_env.trim().is_empty() {
            return Err(ConfigError::Invalid("api_key_env is empty".into()));
        }
        self.ablation()?;
        require_path("templates directory", &self.paths.templates)?;
        require_path("exemplars directory", &self.paths.exemplars)?;
        require_path("external verdicts file", &self.paths.external_verdicts)?;
        if let Some(parent) = self.paths.cache.as_ref().and_then(|c| c.parent()) {
            if !parent.as_os_str().is_empty() && !parent.exists() {
                return Err(ConfigError::MissingPath {
                    what: "cache directory",
                    path: parent.to_path_buf(),
                });
            }
        }
        Ok(())
    }

    pub fn gateway_config(&self) -> GatewayConfig {
        GatewayConfig {
            model_id: self.backend.model_id.clone(),
            embedding_model_id: self.backend.embedding_model_id.clone(),
            retry: RetryPolicy {
                max_retries: self.backend.max_retries,
                ..RetryPolicy::default()
            },
            max_in_flight: self.backend.concurrency,
            ..GatewayConfig::default()
        }
    }

    pub fn timeout(&self) -> Duration {
        Duration::from_secs(self.backend.timeout_secs)
    }

    /// Few-shot text read from `<dir>/<slot>.txt`; absent files leave the slot empty.
    pub fn exemplars(&self) -> Result<Exemplars, ConfigError> {
        let Some(dir) = &self.paths.exemplars else {
            return Ok(Exemplars::default());
        };
        let read = |slot: &str| -> Result<String, ConfigError> {
            let path = dir.join(format!("{slot}.txt"));
            match std::fs::read_to_string(&path) {
                Ok(s) => Ok(s.trim_end().to_string()),
                Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(String::new()),
                Err(source) => Err(ConfigError::Read { path, source }),
            }
        };
        Ok(Exemplars {
            intent_generation: read("intent_generation")?,
            implicit_questions: read("implicit_questions")?,
            assumptions: read("assumptions")?,
        })
    }

    pub fn pipeline_config(&self) -> Result<PipelineConfig, ConfigError> {
        let t = &self.thresholds;
        Ok(PipelineConfig {
            ablation: self.ablation()?,
            thresholds: if self.stages.refinement {
                RefinementThresholds {
                    low: Some(t.tau_low),
                    high: Some(t.tau_high),
                }
            } else {
                RefinementThresholds::disabled()
            },
            relevance_check: self.stages.relevance_check,
            che: CheParams {
                k: t.top_k,
                tau: t.tau_che,
            },
            max_assumptions: t.assumption_max_number,
            vague_references: DEFAULT_VAGUE_REFERENCES.iter().map(|s| s.to_string()).collect(),
            exemplars: self.exemplars()?,
            reassess_only_true: self.stages.reassess_only_true,
        })
    }
}
