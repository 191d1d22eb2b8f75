//! Deterministic scripted backend for offline runs and tests.
//!
//! A [`MockScript`] is a list of rules. Each completion is answered by the
//! first rule whose constraints all hold (template id, claim id, substrings
//! of the rendered prompt). Embeddings come from an exact-text table, with
//! an optional hashed bag-of-words fallback.

use std::collections::BTreeMap;
use std::path::Path;
use std::sync::Mutex;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::backend::{Backend, BackendError, BackendRequest};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MockFailure {
    Transport,
    Status(u16),
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MockRule {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub template_id: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub claim_id: Option<String>,
    /// Substrings that must all occur in the rendered prompt.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub contains: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub response: Option<String>,
    /// Returned in order across matching calls; the last one repeats.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub responses: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fail: Option<MockFailure>,
}

impl MockRule {
    pub fn template(template_id: impl Into<String>) -> Self {
        MockRule {
            template_id: Some(template_id.into()),
            ..Default::default()
        }
    }

    pub fn any() -> Self {
        MockRule::default()
    }

    pub fn claim(mut self, claim_id: impl Into<String>) -> Self {
        self.claim_id = Some(claim_id.into());
        self
    }

    pub fn contains(mut self, needle: impl Into<String>) -> Self {
        self.contains.push(needle.into());
        self
    }

    pub fn respond(mut self, text: impl Into<String>) -> Self {
        self.response = Some(text.into());
        self
    }

    pub fn respond_seq<I, S>(mut self, texts: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        self.responses = texts.into_iter().map(Into::into).collect();
        self
    }

    pub fn fail(mut self, failure: MockFailure) -> Self {
        self.fail = Some(failure);
        self
    }

    fn matches(&self, request: &BackendRequest<'_>) -> bool {
        self.template_id.as_deref().is_none_or(|t| t == request.template_id)
            && self.claim_id.as_deref().is_none_or(|c| Some(c) == request.claim_id)
            && self.contains.iter().all(|n| request.prompt.contains(n.as_str()))
    }

    fn sequence(&self) -> Vec<&str> {
        self.response
            .iter()
            .chain(self.responses.iter())
            .map(String::as_str)
            .collect()
    }
}

fn default_dim() -> usize {
    64
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MockScript {
    #[serde(default)]
    pub rules: Vec<MockRule>,
    #[serde(default)]
    pub embeddings: BTreeMap<String, Vec<f64>>,
    /// Use hashed bag-of-words vectors for texts missing from `embeddings`.
    #[serde(default = "default_true")]
    pub hashed_fallback: bool,
    #[serde(default = "default_dim")]
    pub embedding_dim: usize,
}

impl Default for MockScript {
    fn default() -> Self {
        MockScript {
            rules: Vec::new(),
            embeddings: BTreeMap::new(),
            hashed_fallback: true,
            embedding_dim: default_dim(),
        }
    }
}

impl MockScript {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn rule(mut self, rule: MockRule) -> Self {
        self.rules.push(rule);
        self
    }

    pub fn embedding(mut self, text: impl Into<String>, vector: Vec<f64>) -> Self {
        self.embeddings.insert(text.into(), vector);
        self
    }

    pub fn without_fallback(mut self) -> Self {
        self.hashed_fallback = false;
        self
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    pub fn load(path: impl AsRef<Path>) -> std::io::Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json(&text).map_err(std::io::Error::from)
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("mock script serializes")
    }
}

/// Deterministic embedding from lowercase word tokens hashed into `dim` buckets.
pub fn hashed_embedding(text: &str, dim: usize) -> Vec<f64> {
    let mut v = vec![0.0; dim.max(1)];
    let lowered = text.to_lowercase();
    for token in lowered
        .split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
    {
        let digest = Sha256::digest(token.as_bytes());
        let bucket = u64::from_le_bytes(digest[..8].try_into().unwrap()) as usize % v.len();
        let sign = if digest[8] & 1 == 0 { 1.0 } else { -1.0 };
        v[bucket] += sign;
    }
    v
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CallKind {
    Completion,
    Embedding,
}

/// One backend call as recorded in the mock's call log.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CallRecord {
    pub kind: CallKind,
    pub template_id: Option<String>,
    pub claim_id: Option<String>,
    pub text: String,
}

#[derive(Debug)]
pub struct MockBackend {
    script: MockScript,
    cursors: Mutex<Vec<usize>>,
    log: Mutex<Vec<CallRecord>>,
}

impl MockBackend {
    pub fn new(script: MockScript) -> Self {
        let cursors = Mutex::new(vec![0; script.rules.len()]);
        MockBackend {
            script,
            cursors,
            log: Mutex::new(Vec::new()),
        }
    }

    pub fn script(&self) -> &MockScript {
        &self.script
    }

    /// Snapshot of every call received so far, in arrival order.
    pub fn call_log(&self) -> Vec<CallRecord> {
        self.log.lock().unwrap().clone()
    }

    pub fn completion_calls(&self, template_id: &str) -> usize {
        self.log
            .lock()
            .unwrap()
            .iter()
            .filter(|c| c.kind == CallKind::Completion && c.template_id.as_deref() == Some(template_id))
            .count()
    }

    pub fn total_completion_calls(&self) -> usize {
        self.log
            .lock()
            .unwrap()
            .iter()
            .filter(|c| c.kind == CallKind::Completion)
            .count()
    }
}

impl Backend for MockBackend {
    fn complete(&self, request: &BackendRequest<'_>) -> Result<String, BackendError> {
        self.log.lock().unwrap().push(CallRecord {
            kind: CallKind::Completion,
            template_id: Some(request.template_id.to_string()),
            claim_id: request.claim_id.map(str::to_string),
            text: request.prompt.to_string(),
        });
        let Some(idx) = self.script.rules.iter().position(|r| r.matches(request)) else {
            return Err(BackendError::Unscripted {
                template_id: request.template_id.to_string(),
                claim_id: request.claim_id.map(str::to_string),
            });
        };
        let rule = &self.script.rules[idx];
        match &rule.fail {
            Some(MockFailure::Transport) => {
                return Err(BackendError::Transport("scripted transport failure".into()))
            }
            Some(MockFailure::Status(code)) => {
                return Err(BackendError::Status {
                    code: *code,
                    body: "scripted status failure".into(),
                })
            }
            None => {}
        }
        let seq = rule.sequence();
        if seq.is_empty() {
            return Err(BackendError::Unscripted {
                template_id: request.template_id.to_string(),
                claim_id: request.claim_id.map(str::to_string),
            });
        }
        let mut cursors = self.cursors.lock().unwrap();
        let at = cursors[idx].min(seq.len() - 1);
        cursors[idx] += 1;
        Ok(seq[at].to_string())
    }

    fn embed(&self, _model_id: &str, text: &str) -> Result<Vec<f64>, BackendError> {
        self.log.lock().unwrap().push(CallRecord {
            kind: CallKind::Embedding,
            template_id: None,
            claim_id: None,
            text: text.to_string(),
        });
        if let Some(v) = self.script.embeddings.get(text) {
            return Ok(v.clone());
        }
        if self.script.hashed_fallback {
            Ok(hashed_embedding(text, self.script.embedding_dim))
        } else {
            Err(BackendError::UnscriptedEmbedding(text.to_string()))
        }
    }

    fn name(&self) -> &str {
        "mock"
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gateway::backend::Decoding;

    fn req<'a>(template_id: &'a str, claim_id: Option<&'a str>, prompt: &'a str) -> BackendRequest<'a> {
        BackendRequest {
            template_id,
            claim_id,
            prompt,
            model_id: "m",
            decoding: Decoding::default(),
        }
    }

    #[test]
    fn first_matching_rule_wins() {
        let mock = MockBackend::new(
            MockScript::new()
                .rule(MockRule::template("relevance").claim("c2").respond("B"))
                .rule(MockRule::template("relevance").contains("jobs").respond("A"))
                .rule(MockRule::any().respond("fallback")),
        );
        assert_eq!(mock.complete(&req("relevance", Some("c1"), "jobs")).unwrap(), "A");
        assert_eq!(mock.complete(&req("relevance", Some("c2"), "jobs")).unwrap(), "B");
        assert_eq!(mock.complete(&req("other", None, "x")).unwrap(), "fallback");
        assert_eq!(mock.call_log().len(), 3);
        assert_eq!(mock.completion_calls("relevance"), 2);
    }

    #[test]
    fn sequences_repeat_last() {
        let mock = MockBackend::new(
            MockScript::new().rule(MockRule::template("t").respond_seq(["1", "2"])),
        );
        let got: Vec<_> = (0..3)
            .map(|_| mock.complete(&req("t", None, "")).unwrap())
            .collect();
        assert_eq!(got, ["1", "2", "2"]);
    }

    #[test]
    fn unscripted_and_failures() {
        let mock = MockBackend::new(
            MockScript::new().rule(MockRule::template("down").fail(MockFailure::Status(503))),
        );
        assert!(matches!(
            mock.complete(&req("x", None, "")),
            Err(BackendError::Unscripted { .. })
        ));
        let err = mock.complete(&req("down", None, "")).unwrap_err();
        assert!(err.is_transient());
    }

    #[test]
    fn embeddings_scripted_then_hashed() {
        let mock = MockBackend::new(MockScript::new().embedding("e1", vec![1.0, 0.0]));
        assert_eq!(mock.embed("m", "e1").unwrap(), vec![1.0, 0.0]);
        let a = mock.embed("m", "Jobs grew fast").unwrap();
        let b = mock.embed("m", "jobs GREW fast!").unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 64);

        let strict = MockBackend::new(MockScript::new().without_fallback());
        assert!(strict.embed("m", "x").is_err());
    }

    #[test]
    fn script_json_shape() {
        let script = MockScript::from_json(
            r#"{"rules":[{"template_id":"relevance","response":"A"},{"contains":["x"],"fail":"transport"}]}"#,
        )
        .unwrap();
        assert_eq!(script.rules.len(), 2);
        assert!(script.hashed_fallback);
        assert_eq!(script.rules[1].fail, Some(MockFailure::Transport));
        let back = MockScript::from_json(&script.to_json_pretty()).unwrap();
        assert_eq!(back, script);
    }
}
