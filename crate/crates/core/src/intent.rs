//! Intent: the implied conclusion a claim conveys.
//!
//! Annotation-time intents are extracted from an enhanced ruling; at
//! inference time they are generated from the claim and its evidence. Either
//! way an intent must pass four binary quality checks before use.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{StageError, StageResult};
use crate::gateway::{bindings, bullet_list, ids, parse_binary_digit, parse_bracketed, Gateway};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum IntentSource {
    RulingExtraction,
    EvidenceGeneration,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IntentRecord {
    pub text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rationale: Option<String>,
    pub source: IntentSource,
    /// Generated without any evidence context.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub low_context: bool,
}

/// Outcome of one quality criterion.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Criterion {
    Score(u8),
    Failed(String),
}

impl Criterion {
    pub fn passed(&self) -> bool {
        *self == Criterion::Score(1)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QualityScores {
    pub plausibility: Criterion,
    pub implicity: Criterion,
    pub sufficiency: Criterion,
    pub readability: Criterion,
}

impl QualityScores {
    pub fn from_flags(plausibility: bool, implicity: bool, sufficiency: bool, readability: bool) -> Self {
        let c = |b: bool| Criterion::Score(b as u8);
        QualityScores {
            plausibility: c(plausibility),
            implicity: c(implicity),
            sufficiency: c(sufficiency),
            readability: c(readability),
        }
    }

    /// Accepted iff all four criteria scored 1.
    pub fn accepted(&self) -> bool {
        [&self.plausibility, &self.implicity, &self.sufficiency, &self.readability]
            .iter()
            .all(|c| c.passed())
    }
}

/// An intent with its quality verdict. Rejected intents are kept for audit.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IntentAssessment {
    pub intent: IntentRecord,
    pub scores: QualityScores,
    pub accepted: bool,
}

/// Rewrite the ruling with supporting evidence. Returns the completion verbatim.
pub fn enhance_ruling(
    gateway: &Gateway,
    claim_id: Option<&str>,
    ruling: &[String],
    evidence: &[String],
) -> StageResult<String> {
    if ruling.iter().all(|p| p.trim().is_empty()) {
        return Err(StageError::Precondition("ruling is empty"));
    }
    let text = gateway.prompt(
        ids::RULING_ENHANCEMENT,
        bindings([("evidence", evidence.join("\n")), ("ruling", ruling.join("\n"))]),
        claim_id,
    )?;
    if text.trim().is_empty() {
        return Err(StageError::EmptyCompletion);
    }
    Ok(text)
}

/// Last bracketed item is the intent; the text before it is the rationale.
fn intent_from_completion(text: &str, source: IntentSource) -> StageResult<IntentRecord> {
    let items = parse_bracketed(text, None)?;
    let intent = items.last().cloned().ok_or(StageError::EmptyCompletion)?;
    let head = text
        .rfind(intent.as_str())
        .map(|at| &text[..at])
        .and_then(|h| h.rfind('<').map(|lt| &h[..lt]))
        .unwrap_or("");
    let rationale = head.replace(['<', '>'], "").trim().to_string();
    Ok(IntentRecord {
        text: intent,
        rationale: (!rationale.is_empty()).then_some(rationale),
        source,
        low_context: false,
    })
}

pub fn extract_intent(
    gateway: &Gateway,
    claim_id: Option<&str>,
    claim: &str,
    enhanced_ruling: &str,
    examples: &str,
) -> StageResult<IntentRecord> {
    let text = gateway.prompt(
        ids::INTENT_EXTRACTION,
        bindings([("claim", claim), ("ruling", enhanced_ruling), ("examples", examples)]),
        claim_id,
    )?;
    intent_from_completion(&text, IntentSource::RulingExtraction)
}

/// Few-shot intent generation from the claim and its evidence.
pub fn generate_intent(
    gateway: &Gateway,
    claim_id: Option<&str>,
    claim: &str,
    evidence: &[String],
    examples: &str,
) -> StageResult<IntentRecord> {
    let low_context = evidence.is_empty();
    let evidence_text = if low_context {
        "(no evidence available)".to_string()
    } else {
        bullet_list(evidence)
    };
    let text = gateway.prompt(
        ids::INTENT_GENERATION,
        bindings([("claim", claim), ("evidence", evidence_text.as_str()), ("examples", examples)]),
        claim_id,
    )?;
    let mut record = intent_from_completion(&text, IntentSource::EvidenceGeneration)?;
    record.low_context = low_context;
    Ok(record)
}

/// Run the four quality prompts. A criterion that fails to parse is marked failed.
pub fn score_quality(gateway: &Gateway, claim_id: Option<&str>, claim: &str, intent: &str) -> QualityScores {
    let with_claim = || bindings([("claim", claim), ("intent", intent)]);
    let intent_only = || bindings([("intent", intent)]);
    let jobs = [
        (ids::QUALITY_PLAUSIBILITY, with_claim()),
        (ids::QUALITY_IMPLICITY, with_claim()),
        (ids::QUALITY_SUFFICIENCY, intent_only()),
        (ids::QUALITY_READABILITY, intent_only()),
    ];
    let mut results: Vec<Criterion> = jobs
        .into_par_iter()
        .map(|(template, b)| {
            let scored = gateway
                .prompt(template, b, claim_id)
                .map_err(StageError::from)
                .and_then(|text| Ok(parse_binary_digit(&text)?));
            match scored {
                Ok(flag) => Criterion::Score(flag as u8),
                Err(e) => Criterion::Failed(e.to_string()),
            }
        })
        .collect();
    let readability = results.pop().unwrap();
    let sufficiency = results.pop().unwrap();
    let implicity = results.pop().unwrap();
    let plausibility = results.pop().unwrap();
    QualityScores {
        plausibility,
        implicity,
        sufficiency,
        readability,
    }
}

pub fn assess_intent(
    gateway: &Gateway,
    claim_id: Option<&str>,
    claim: &str,
    intent: IntentRecord,
) -> IntentAssessment {
    let scores = score_quality(gateway, claim_id, claim, &intent.text);
    let accepted = scores.accepted();
    IntentAssessment {
        intent,
        scores,
        accepted,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gateway::{MockBackend, MockRule, MockScript, ParseError};
    use std::sync::Arc;

    fn gateway(script: MockScript) -> (Arc<MockBackend>, Gateway) {
        let mock = Arc::new(MockBackend::new(script));
        (mock.clone(), Gateway::new(mock))
    }

    fn quality_script(p: &str, i: &str, s: &str, r: &str) -> MockScript {
        MockScript::new()
            .rule(MockRule::template(ids::QUALITY_PLAUSIBILITY).respond(p))
            .rule(MockRule::template(ids::QUALITY_IMPLICITY).respond(i))
            .rule(MockRule::template(ids::QUALITY_SUFFICIENCY).respond(s))
            .rule(MockRule::template(ids::QUALITY_READABILITY).respond(r))
    }

    #[test]
    fn enhance_ruling_cases() {
        let (_, gw) = gateway(
            MockScript::new()
                .rule(MockRule::template(ids::RULING_ENHANCEMENT).contains("blank").respond("  \n"))
                .rule(MockRule::template(ids::RULING_ENHANCEMENT).respond("Enhanced: more detail")),
        );
        let ruling = vec!["Our ruling: true.".to_string()];
        assert_eq!(
            enhance_ruling(&gw, None, &ruling, &[]).unwrap(),
            "Enhanced: more detail"
        );
        assert!(matches!(
            enhance_ruling(&gw, None, &[], &[]),
            Err(StageError::Precondition(_))
        ));
        assert!(matches!(
            enhance_ruling(&gw, None, &["blank".to_string()], &[]),
            Err(StageError::EmptyCompletion)
        ));
    }

    #[test]
    fn extraction_takes_last_bracketed_item() {
        let (_, gw) = gateway(
            MockScript::new()
                .rule(MockRule::template(ids::INTENT_EXTRACTION).contains("one").respond(
                    "reasoning... <economic policies caused the jobs boom>",
                ))
                .rule(MockRule::template(ids::INTENT_EXTRACTION).contains("two").respond(
                    "First <draft intent> then refined: <final intent>",
                ))
                .rule(MockRule::template(ids::INTENT_EXTRACTION).respond("no brackets")),
        );
        let r = extract_intent(&gw, None, "claim", "one", "").unwrap();
        assert_eq!(r.text, "economic policies caused the jobs boom");
        assert_eq!(r.rationale.as_deref(), Some("reasoning..."));
        assert_eq!(r.source, IntentSource::RulingExtraction);

        let r = extract_intent(&gw, None, "claim", "two", "").unwrap();
        assert_eq!(r.text, "final intent");
        assert_eq!(r.rationale.as_deref(), Some("First draft intent then refined:"));

        assert!(matches!(
            extract_intent(&gw, None, "claim", "three", ""),
            Err(StageError::Parse(ParseError::NoItemsFound))
        ));
    }

    #[test]
    fn generation_from_evidence() {
        let (mock, gw) = gateway(
            MockScript::new()
                .rule(MockRule::template(ids::INTENT_GENERATION).contains("bad claim").respond("oops"))
                .rule(MockRule::template(ids::INTENT_GENERATION).respond("so <policies work>")),
        );
        let r = generate_intent(&gw, None, "claim", &["e1".to_string()], "").unwrap();
        assert_eq!(r.text, "policies work");
        assert_eq!(r.source, IntentSource::EvidenceGeneration);
        assert!(!r.low_context);
        assert!(mock.call_log()[0].text.contains("- e1"));

        let r = generate_intent(&gw, None, "claim", &[], "").unwrap();
        assert!(r.low_context);

        assert!(generate_intent(&gw, None, "bad claim", &[], "").is_err());
    }

    #[test]
    fn quality_all_ones_accepted() {
        let (mock, gw) = gateway(quality_script("1", "1", "1", "1"));
        let scores = score_quality(&gw, None, "c", "i");
        assert!(scores.accepted());
        assert_eq!(mock.total_completion_calls(), 4);
    }

    #[test]
    fn quality_zero_rejects() {
        let (_, gw) = gateway(quality_script("0", "1", "1", "1"));
        let scores = score_quality(&gw, None, "c", "i");
        assert_eq!(scores.plausibility, Criterion::Score(0));
        assert!(!scores.accepted());
    }

    #[test]
    fn quality_unparseable_digit_marks_criterion() {
        let (_, gw) = gateway(quality_script("1", "1", "2", "1"));
        let scores = score_quality(&gw, None, "c", "i");
        assert!(matches!(scores.sufficiency, Criterion::Failed(ref m) if m.contains("0/1 digit")));
        assert!(!scores.accepted());
    }

    #[test]
    fn sufficiency_and_readability_see_intent_only() {
        let (mock, gw) = gateway(quality_script("1", "1", "1", "1"));
        score_quality(&gw, None, "THE-CLAIM", "THE-INTENT");
        for call in mock.call_log() {
            let t = call.template_id.unwrap();
            let sees_claim = call.text.contains("THE-CLAIM");
            let claim_expected = t == ids::QUALITY_PLAUSIBILITY || t == ids::QUALITY_IMPLICITY;
            assert_eq!(sees_claim, claim_expected, "{t}");
            assert!(call.text.contains("THE-INTENT"));
        }
    }

    #[test]
    fn acceptance_is_conjunction_of_flags() {
        for bits in 0u8..16 {
            let f = |i: u8| bits & (1 << i) != 0;
            let scores = QualityScores::from_flags(f(0), f(1), f(2), f(3));
            assert_eq!(scores.accepted(), bits == 15, "bits {bits:04b}");
        }
    }
}
