//! All model interaction goes through [`Gateway`]: template rendering,
//! completion and embedding calls, the response cache, retries and the
//! in-flight request limit.

mod backend;
mod cache;
mod mock;
mod openai;
mod parse;
mod template;

use std::collections::BTreeMap;
use std::sync::{Arc, Condvar, Mutex};
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use backend::{Backend, BackendError, BackendRequest, Decoding};
pub use cache::{completion_key, embedding_key, CacheError, CacheStats, CachedValue, ResponseCache};
pub use mock::{hashed_embedding, CallKind, CallRecord, MockBackend, MockFailure, MockRule, MockScript};
pub use openai::{OpenAiBackend, API_KEY_ENV};
pub use parse::{
    parse_binary_digit, parse_bracketed, parse_letter_choice, parse_reasoned_choice, ParseError,
};
pub use template::{bindings, bullet_list, has_placeholder, ids, Bindings, PromptTemplate, TemplateCatalog, TemplateError};

#[derive(Debug, Error)]
pub enum GatewayError {
    #[error(transparent)]
    Template(#[from] TemplateError),
    #[error("backend failed after {retries} retries: {error}")]
    Backend { error: BackendError, retries: u32 },
    #[error(transparent)]
    Cache(#[from] CacheError),
    #[error("cannot embed empty text")]
    EmptyText,
}

/// A text embedding tagged with the model that produced it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Embedding {
    pub vector: Vec<f64>,
    pub model_id: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompletionRequest {
    pub template_id: String,
    pub bindings: Bindings,
    pub decoding: Decoding,
    pub model_id: String,
    pub claim_id: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RetryPolicy {
    pub max_retries: u32,
    pub base_delay_ms: u64,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        RetryPolicy {
            max_retries: 3,
            base_delay_ms: 500,
        }
    }
}

impl RetryPolicy {
    fn delay(&self, attempt: u32) -> Duration {
        Duration::from_millis(self.base_delay_ms.saturating_mul(1 << attempt.min(16)))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GatewayConfig {
    pub model_id: String,
    pub embedding_model_id: String,
    pub decoding: Decoding,
    pub retry: RetryPolicy,
    pub max_in_flight: usize,
}

impl Default for GatewayConfig {
    fn default() -> Self {
        GatewayConfig {
            model_id: "gpt-4o-mini".into(),
            embedding_model_id: "text-embedding-3-small".into(),
            decoding: Decoding::default(),
            retry: RetryPolicy::default(),
            max_in_flight: 4,
        }
    }
}

/// Counters. `requests` counts rendered prompts per template whether or not
/// they were served from cache; `backend_*` count calls that left the process.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct GatewayStats {
    pub requests: BTreeMap<String, usize>,
    pub embed_requests: usize,
    pub backend_completions: usize,
    pub backend_embeddings: usize,
    pub cache_hits: usize,
    pub retries: usize,
}

impl GatewayStats {
    pub fn requests_for(&self, template_id: &str) -> usize {
        self.requests.get(template_id).copied().unwrap_or(0)
    }

    pub fn backend_calls(&self) -> usize {
        self.backend_completions + self.backend_embeddings
    }

    /// Counter-wise difference `self - earlier`.
    pub fn since(&self, earlier: &GatewayStats) -> GatewayStats {
        let requests = self
            .requests
            .iter()
            .map(|(k, v)| (k.clone(), v - earlier.requests_for(k)))
            .filter(|(_, v)| *v > 0)
            .collect();
        GatewayStats {
            requests,
            embed_requests: self.embed_requests - earlier.embed_requests,
            backend_completions: self.backend_completions - earlier.backend_completions,
            backend_embeddings: self.backend_embeddings - earlier.backend_embeddings,
            cache_hits: self.cache_hits - earlier.cache_hits,
            retries: self.retries - earlier.retries,
        }
    }
}

#[derive(Debug)]
struct InFlight {
    limit: usize,
    active: Mutex<usize>,
    freed: Condvar,
}

struct Permit<'a>(&'a InFlight);

impl InFlight {
    fn new(limit: usize) -> Self {
        InFlight {
            limit: limit.max(1),
            active: Mutex::new(0),
            freed: Condvar::new(),
        }
    }

    fn acquire(&self) -> Permit<'_> {
        let mut active = self.active.lock().unwrap();
        while *active >= self.limit {
            active = self.freed.wait(active).unwrap();
        }
        *active += 1;
        Permit(self)
    }
}

impl Drop for Permit<'_> {
    fn drop(&mut self) {
        *self.0.active.lock().unwrap() -= 1;
        self.0.freed.notify_one();
    }
}

pub struct Gateway {
    backend: Arc<dyn Backend>,
    cache: Arc<ResponseCache>,
    templates: TemplateCatalog,
    config: GatewayConfig,
    in_flight: InFlight,
    stats: Mutex<GatewayStats>,
}

impl std::fmt::Debug for Gateway {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Gateway")
            .field("backend", &self.backend.name())
            .field("config", &self.config)
            .finish_non_exhaustive()
    }
}

impl Gateway {
    /// Gateway with builtin templates, default config and an in-memory cache.
    pub fn new(backend: Arc<dyn Backend>) -> Self {
        Self::with_parts(
            backend,
            Arc::new(ResponseCache::in_memory()),
            TemplateCatalog::builtin(),
            GatewayConfig::default(),
        )
    }

    pub fn with_parts(
        backend: Arc<dyn Backend>,
        cache: Arc<ResponseCache>,
        templates: TemplateCatalog,
        config: GatewayConfig,
    ) -> Self {
        let in_flight = InFlight::new(config.max_in_flight);
        Gateway {
            backend,
            cache,
            templates,
            config,
            in_flight,
            stats: Mutex::new(GatewayStats::default()),
        }
    }

    pub fn config(&self) -> &GatewayConfig {
        &self.config
    }

    pub fn templates(&self) -> &TemplateCatalog {
        &self.templates
    }

    pub fn cache(&self) -> &ResponseCache {
        &self.cache
    }

    pub fn stats(&self) -> GatewayStats {
        self.stats.lock().unwrap().clone()
    }

    pub fn render(&self, template_id: &str, bindings: &Bindings) -> Result<String, GatewayError> {
        Ok(self.templates.get(template_id)?.render(bindings)?)
    }

    /// A request using the configured model and decoding.
    pub fn request(&self, template_id: &str, bindings: Bindings, claim_id: Option<&str>) -> CompletionRequest {
        CompletionRequest {
            template_id: template_id.to_string(),
            bindings,
            decoding: self.config.decoding,
            model_id: self.config.model_id.clone(),
            claim_id: claim_id.map(str::to_string),
        }
    }

    /// Render and complete with the configured model and decoding.
    pub fn prompt(
        &self,
        template_id: &str,
        bindings: Bindings,
        claim_id: Option<&str>,
    ) -> Result<String, GatewayError> {
        self.complete(&self.request(template_id, bindings, claim_id))
    }

    pub fn complete(&self, request: &CompletionRequest) -> Result<String, GatewayError> {
        let prompt = self.render(&request.template_id, &request.bindings)?;
        *self
            .stats
            .lock()
            .unwrap()
            .requests
            .entry(request.template_id.clone())
            .or_default() += 1;

        let key = completion_key(&request.model_id, &request.template_id, &prompt, &request.decoding);
        if let Some(CachedValue::Completion { text }) = self.cache.get(&key) {
            self.stats.lock().unwrap().cache_hits += 1;
            return Ok(text);
        }
        let backend_request = BackendRequest {
            template_id: &request.template_id,
            claim_id: request.claim_id.as_deref(),
            prompt: &prompt,
            model_id: &request.model_id,
            decoding: request.decoding,
        };
        let text = self.with_retries(|| {
            self.stats.lock().unwrap().backend_completions += 1;
            self.backend.complete(&backend_request)
        })?;
        self.cache
            .insert(key, CachedValue::Completion { text: text.clone() })?;
        Ok(text)
    }

    pub fn embed(&self, text: &str) -> Result<Embedding, GatewayError> {
        if text.trim().is_empty() {
            return Err(GatewayError::EmptyText);
        }
        self.stats.lock().unwrap().embed_requests += 1;
        let model_id = &self.config.embedding_model_id;
        let key = embedding_key(model_id, text);
        if let Some(CachedValue::Embedding { vector }) = self.cache.get(&key) {
            self.stats.lock().unwrap().cache_hits += 1;
            return Ok(Embedding {
                vector,
                model_id: model_id.clone(),
            });
        }
        let vector = self.with_retries(|| {
            self.stats.lock().unwrap().backend_embeddings += 1;
            self.backend.embed(model_id, text)
        })?;
        self.cache.insert(
            key,
            CachedValue::Embedding {
                vector: vector.clone(),
            },
        )?;
        Ok(Embedding {
            vector,
            model_id: model_id.clone(),
        })
    }

    fn with_retries<T>(&self, mut call: impl FnMut() -> Result<T, BackendError>) -> Result<T, GatewayError> {
        let policy = self.config.retry;
        let mut retries = 0;
        loop {
            let result = {
                let _permit = self.in_flight.acquire();
                call()
            };
            match result {
                Ok(value) => return Ok(value),
                Err(error) if error.is_transient() && retries < policy.max_retries => {
                    log::warn!("transient backend error (retry {}): {error}", retries + 1);
                    std::thread::sleep(policy.delay(retries));
                    retries += 1;
                    self.stats.lock().unwrap().retries += 1;
                }
                Err(error) => return Err(GatewayError::Backend { error, retries }),
            }
        }
    }
}
