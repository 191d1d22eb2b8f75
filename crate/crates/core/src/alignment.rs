//! Evidence alignment: is each evidence sentence presented in the claim or
//! hidden from it?
//!
//! The prompt pipeline runs a relevance check (when a ruling is available),
//! a presentation check, and an embedding-similarity refinement that can
//! override the model in either direction. An [`EvidenceClassifier`] can
//! replace the whole prompt pipeline.

use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::endpoints::{ClassifierLabel, EvidenceClassifier};
use crate::error::{StageError, StageResult};
use crate::gateway::{bindings, ids, parse_letter_choice, Embedding, Gateway};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimilarityError {
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("zero-norm vector")]
    ZeroVector,
    #[error("embeddings from different models: {0:?} vs {1:?}")]
    ModelMismatch(String, String),
}

/// Cosine similarity of raw vectors, clamped to [-1, 1].
pub fn cosine(u: &[f64], v: &[f64]) -> Result<f64, SimilarityError> {
    if u.len() != v.len() {
        return Err(SimilarityError::DimensionMismatch(u.len(), v.len()));
    }
    let dot: f64 = u.iter().zip(v).map(|(a, b)| a * b).sum();
    let nu = u.iter().map(|a| a * a).sum::<f64>().sqrt();
    let nv = v.iter().map(|b| b * b).sum::<f64>().sqrt();
    if nu == 0.0 || nv == 0.0 {
        return Err(SimilarityError::ZeroVector);
    }
    Ok((dot / (nu * nv)).clamp(-1.0, 1.0))
}

pub fn cosine_similarity(u: &Embedding, v: &Embedding) -> Result<f64, SimilarityError> {
    if u.model_id != v.model_id {
        return Err(SimilarityError::ModelMismatch(u.model_id.clone(), v.model_id.clone()));
    }
    cosine(&u.vector, &v.vector)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum AlignmentLabel {
    Presented,
    Hidden,
    Irrelevant,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Relevance {
    Relevant,
    Irrelevant,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Presentation {
    Presented,
    NotPresented,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Provenance {
    PromptPipeline,
    ExternalClassifier,
}

/// One evidence sentence with its alignment outcome.
///
/// `label` is `None` only when aligning this sentence failed; `error` then
/// says why. `similarity` is present exactly when refinement ran.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlignedEvidence {
    pub sentence: String,
    pub label: Option<AlignmentLabel>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub similarity: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub confidence: Option<f64>,
    pub provenance: Provenance,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl AlignedEvidence {
    pub fn is_hidden(&self) -> bool {
        self.label == Some(AlignmentLabel::Hidden)
    }

    pub fn is_presented(&self) -> bool {
        self.label == Some(AlignmentLabel::Presented)
    }
}

/// Similarity gates for refinement. `None` disables that direction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RefinementThresholds {
    /// A model-presented sentence below this similarity becomes Hidden.
    pub low: Option<f64>,
    /// A not-presented sentence at or above this similarity becomes Presented.
    pub high: Option<f64>,
}

impl Default for RefinementThresholds {
    fn default() -> Self {
        RefinementThresholds {
            low: Some(0.40),
            high: Some(0.85),
        }
    }
}

impl RefinementThresholds {
    pub fn disabled() -> Self {
        RefinementThresholds {
            low: None,
            high: None,
        }
    }

    pub fn enabled(&self) -> bool {
        self.low.is_some() || self.high.is_some()
    }
}

/// The refinement decision for a known similarity.
pub fn refine_label(
    provisional: Presentation,
    similarity: f64,
    thresholds: &RefinementThresholds,
) -> AlignmentLabel {
    match provisional {
        Presentation::Presented if thresholds.low.is_some_and(|t| similarity < t) => {
            AlignmentLabel::Hidden
        }
        Presentation::NotPresented if thresholds.high.is_some_and(|t| similarity >= t) => {
            AlignmentLabel::Presented
        }
        Presentation::Presented => AlignmentLabel::Presented,
        Presentation::NotPresented => AlignmentLabel::Hidden,
    }
}

pub fn check_relevance(
    gateway: &Gateway,
    claim_id: Option<&str>,
    claim: &str,
    ruling: &str,
    sentence: &str,
) -> StageResult<Relevance> {
    let text = gateway.prompt(
        ids::RELEVANCE,
        bindings([("claim", claim), ("ruling", ruling), ("evidence", sentence)]),
        claim_id,
    )?;
    Ok(match parse_letter_choice(&text, &['A', 'B'])? {
        'A' => Relevance::Relevant,
        _ => Relevance::Irrelevant,
    })
}

pub fn check_presentation(
    gateway: &Gateway,
    claim_id: Option<&str>,
    claim: &str,
    sentence: &str,
) -> StageResult<Presentation> {
    let text = gateway.prompt(
        ids::PRESENTATION,
        bindings([("claim", claim), ("evidence", sentence)]),
        claim_id,
    )?;
    Ok(match parse_letter_choice(&text, &['A', 'B'])? {
        'A' => Presentation::Presented,
        _ => Presentation::NotPresented,
    })
}

/// Embed claim and sentence and apply [`refine_label`].
pub fn refine_by_similarity(
    gateway: &Gateway,
    claim: &str,
    sentence: &str,
    provisional: Presentation,
    thresholds: &RefinementThresholds,
) -> StageResult<(AlignmentLabel, f64)> {
    let s = cosine_similarity(&gateway.embed(claim)?, &gateway.embed(sentence)?)?;
    Ok((refine_label(provisional, s, thresholds), s))
}

#[derive(Clone)]
pub struct Aligner {
    pub gateway: Arc<Gateway>,
    pub classifier: Option<Arc<dyn EvidenceClassifier>>,
    pub thresholds: RefinementThresholds,
    /// Run the relevance filter when the record has a ruling.
    pub relevance_check: bool,
}

impl Aligner {
    pub fn new(gateway: Arc<Gateway>) -> Self {
        Aligner {
            gateway,
            classifier: None,
            thresholds: RefinementThresholds::default(),
            relevance_check: true,
        }
    }

    pub fn with_classifier(mut self, classifier: Arc<dyn EvidenceClassifier>) -> Self {
        self.classifier = Some(classifier);
        self
    }

    /// Align every sentence. Output order and length match the input;
    /// a failing sentence is flagged and the rest proceed.
    pub fn align_evidence(
        &self,
        claim_id: Option<&str>,
        claim: &str,
        ruling: &[String],
        evidence: &[String],
    ) -> Vec<AlignedEvidence> {
        let ruling = ruling.join("\n");
        evidence
            .par_iter()
            .map(|sentence| {
                let provenance = if self.classifier.is_some() {
                    Provenance::ExternalClassifier
                } else {
                    Provenance::PromptPipeline
                };
                self.align_one(claim_id, claim, &ruling, sentence)
                    .unwrap_or_else(|e| AlignedEvidence {
                        sentence: sentence.clone(),
                        label: None,
                        similarity: None,
                        confidence: None,
                        provenance,
                        error: Some(e.to_string()),
                    })
            })
            .collect()
    }

    fn align_one(
        &self,
        claim_id: Option<&str>,
        claim: &str,
        ruling: &str,
        sentence: &str,
    ) -> Result<AlignedEvidence, StageError> {
        let mut out = AlignedEvidence {
            sentence: sentence.to_string(),
            label: None,
            similarity: None,
            confidence: None,
            provenance: Provenance::PromptPipeline,
            error: None,
        };
        if let Some(classifier) = &self.classifier {
            let verdict = classifier.classify(claim, sentence)?;
            out.provenance = Provenance::ExternalClassifier;
            out.confidence = verdict.confidence;
            out.label = Some(match verdict.label {
                ClassifierLabel::Presented => AlignmentLabel::Presented,
                ClassifierLabel::Hidden => AlignmentLabel::Hidden,
            });
            return Ok(out);
        }
        if self.relevance_check && !ruling.trim().is_empty() {
            let relevance = check_relevance(&self.gateway, claim_id, claim, ruling, sentence)?;
            if relevance == Relevance::Irrelevant {
                out.label = Some(AlignmentLabel::Irrelevant);
                return Ok(out);
            }
        }
        let provisional = check_presentation(&self.gateway, claim_id, claim, sentence)?;
        if self.thresholds.enabled() {
            let (label, s) =
                refine_by_similarity(&self.gateway, claim, sentence, provisional, &self.thresholds)?;
            out.label = Some(label);
            out.similarity = Some(s);
        } else {
            out.label = Some(refine_label(provisional, 0.0, &self.thresholds));
        }
        Ok(out)
    }
}
