//! Pluggable external models: a presented/hidden evidence classifier and an
//! NLI model, each reachable over a small JSON-over-HTTP contract.
//!
//! Classifier: `POST {url}` with `{"claim": .., "sentence": ..}`, answering
//! `{"label": "presented" | "hidden", "confidence": 0.93}`.
//!
//! NLI: `POST {url}` with `{"premise": .., "hypothesis": ..}`, answering
//! `{"label": "entail" | "contradict" | "neutral", "confidence": 0.8}`.
//! `entailment` and `contradiction` are accepted as aliases.

use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::che::NliVerdict;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EndpointError {
    #[error("endpoint transport error: {0}")]
    Transport(String),
    #[error("endpoint returned HTTP {code}: {body}")]
    Status { code: u16, body: String },
    #[error("malformed endpoint response: {0}")]
    Protocol(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ClassifierLabel {
    Presented,
    Hidden,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassifierOutput {
    pub label: ClassifierLabel,
    #[serde(default)]
    pub confidence: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ClassifierRequest {
    pub claim: String,
    pub sentence: String,
}

/// Decides whether an evidence sentence is presented in the claim.
pub trait EvidenceClassifier: Send + Sync {
    fn classify(&self, claim: &str, sentence: &str) -> Result<ClassifierOutput, EndpointError>;
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NliOutput {
    pub label: NliVerdict,
    #[serde(default)]
    pub confidence: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NliRequest {
    pub premise: String,
    pub hypothesis: String,
}

/// Three-way entailment between a premise sentence and a hypothesis.
pub trait NliModel: Send + Sync {
    fn infer(&self, premise: &str, hypothesis: &str) -> Result<NliOutput, EndpointError>;
}

fn post_json<T: Serialize, R: for<'de> Deserialize<'de>>(
    agent: &ureq::Agent,
    url: &str,
    body: &T,
) -> Result<R, EndpointError> {
    match agent.post(url).send_json(body) {
        Ok(resp) => resp
            .into_json()
            .map_err(|e| EndpointError::Protocol(e.to_string())),
        Err(ureq::Error::Status(code, resp)) => Err(EndpointError::Status {
            code,
            body: resp.into_string().unwrap_or_default(),
        }),
        Err(ureq::Error::Transport(t)) => Err(EndpointError::Transport(t.to_string())),
    }
}

#[derive(Debug)]
pub struct HttpClassifier {
    url: String,
    agent: ureq::Agent,
}

impl HttpClassifier {
    pub fn new(url: impl Into<String>, timeout: Duration) -> Self {
        HttpClassifier {
            url: url.into(),
            agent: ureq::AgentBuilder::new().timeout(timeout).build(),
        }
    }
}

impl EvidenceClassifier for HttpClassifier {
    fn classify(&self, claim: &str, sentence: &str) -> Result<ClassifierOutput, EndpointError> {
        post_json(
            &self.agent,
            &self.url,
            &ClassifierRequest {
                claim: claim.to_string(),
                sentence: sentence.to_string(),
            },
        )
    }
}

#[derive(Debug)]
pub struct HttpNli {
    url: String,
    agent: ureq::Agent,
}

impl HttpNli {
    pub fn new(url: impl Into<String>, timeout: Duration) -> Self {
        HttpNli {
            url: url.into(),
            agent: ureq::AgentBuilder::new().timeout(timeout).build(),
        }
    }
}

impl NliModel for HttpNli {
    fn infer(&self, premise: &str, hypothesis: &str) -> Result<NliOutput, EndpointError> {
        post_json(
            &self.agent,
            &self.url,
            &NliRequest {
                premise: premise.to_string(),
                hypothesis: hypothesis.to_string(),
            },
        )
    }
}

impl<F> EvidenceClassifier for F
where
    F: Fn(&str, &str) -> Result<ClassifierOutput, EndpointError> + Send + Sync,
{
    fn classify(&self, claim: &str, sentence: &str) -> Result<ClassifierOutput, EndpointError> {
        self(claim, sentence)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wire_formats() {
        let out: ClassifierOutput =
            serde_json::from_str(r#"{"label":"hidden","confidence":0.7}"#).unwrap();
        assert_eq!(out.label, ClassifierLabel::Hidden);
        let out: NliOutput = serde_json::from_str(r#"{"label":"contradiction"}"#).unwrap();
        assert_eq!(out.label, NliVerdict::Contradict);
        let out: NliOutput = serde_json::from_str(r#"{"label":"entail"}"#).unwrap();
        assert_eq!(out.label, NliVerdict::Entail);
        assert!(serde_json::from_str::<NliOutput>(r#"{"label":"maybe"}"#).is_err());
    }

    #[test]
    fn unreachable_endpoint_is_transport_error() {
        let c = HttpClassifier::new("http://127.0.0.1:9/classify", Duration::from_millis(200));
        assert!(matches!(c.classify("c", "s"), Err(EndpointError::Transport(_))));
    }
}
