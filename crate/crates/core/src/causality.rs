//! Counterfactual testing of the assumptions behind an intent.
//!
//! An intent `Z` is linked to the claim `X` and to assumptions `Y_1..Y_n`.
//! Each assumption is negated in turn and the model says whether `Z` becomes
//! less likely; those that weaken `Z` are critical.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::error::{StageError, StageResult};
use crate::gateway::{bindings, bullet_list, ids, parse_bracketed, parse_letter_choice, Gateway};

pub const DEFAULT_MAX_QUESTIONS: usize = 3;
pub const DEFAULT_MAX_ASSUMPTIONS: usize = 3;
pub const DEFAULT_VAGUE_REFERENCES: [&str; 3] = ["the claim", "the evidence", "the intent"];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ImplicitQuestion(pub String);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CausalEffect {
    NoChange,
    Increase,
    Decrease,
}

impl CausalEffect {
    pub const ALL: [CausalEffect; 3] = [CausalEffect::NoChange, CausalEffect::Increase, CausalEffect::Decrease];

    pub fn letter(self) -> char {
        match self {
            CausalEffect::NoChange => 'A',
            CausalEffect::Increase => 'B',
            CausalEffect::Decrease => 'C',
        }
    }

    pub fn from_letter(letter: char) -> Option<Self> {
        match letter.to_ascii_uppercase() {
            'A' => Some(CausalEffect::NoChange),
            'B' => Some(CausalEffect::Increase),
            'C' => Some(CausalEffect::Decrease),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Assumption {
    pub text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub causal_effect: Option<CausalEffect>,
    /// Wording leans on a vague reference such as "the claim".
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub vague_reference: bool,
}

impl Assumption {
    pub fn new(text: impl Into<String>) -> Self {
        Assumption {
            text: text.into(),
            causal_effect: None,
            vague_reference: false,
        }
    }

    /// Only a decrease in the intent's probability makes an assumption critical.
    pub fn is_critical(&self) -> bool {
        self.causal_effect == Some(CausalEffect::Decrease)
    }
}

/// Case-insensitive whole-phrase check against a stoplist.
pub fn has_vague_reference<S: AsRef<str>>(text: &str, stoplist: &[S]) -> bool {
    let words: Vec<String> = text
        .split(|c: char| !c.is_alphanumeric() && c != '\'')
        .filter(|w| !w.is_empty())
        .map(str::to_lowercase)
        .collect();
    stoplist.iter().any(|phrase| {
        let phrase: Vec<String> = phrase
            .as_ref()
            .split_whitespace()
            .map(str::to_lowercase)
            .collect();
        !phrase.is_empty() && words.windows(phrase.len()).any(|w| w == phrase.as_slice())
    })
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ArgumentParseError {
    #[error("argument is not valid JSON: {0}")]
    Json(String),
    #[error("argument field {0:?} missing or not a string")]
    MissingField(String),
    #[error("unexpected argument field {0:?}")]
    UnexpectedField(String),
}

/// The star-shaped argument `{Z, linked_by: {X, Y_1..Y_n}}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CausalArgument {
    pub intent: String,
    pub claim: String,
    pub assumptions: Vec<Assumption>,
}

fn quoted(s: &str) -> String {
    serde_json::to_string(s).expect("strings serialize")
}

impl CausalArgument {
    /// An argument with no assumptions, used when assumption inference is
    /// switched off and evidence is matched against the intent directly.
    pub fn intent_only(claim: impl Into<String>, intent: impl Into<String>) -> Self {
        CausalArgument {
            intent: intent.into(),
            claim: claim.into(),
            assumptions: Vec::new(),
        }
    }

    /// Name of the node for the assumption at `index` (0-based): `Y_{index+1}`.
    pub fn node_name(index: usize) -> String {
        format!("Y_{}", index + 1)
    }

    /// The argument block embedded in the counterfactual and re-assessment prompts.
    pub fn to_argument_json(&self) -> String {
        let mut out = String::new();
        out.push_str("{\n");
        out.push_str(&format!("  \"Z\": {},\n", quoted(&self.intent)));
        out.push_str("  \"linked_by\": {\n");
        out.push_str(&format!("    \"X\": {}", quoted(&self.claim)));
        for (i, a) in self.assumptions.iter().enumerate() {
            out.push_str(&format!(",\n    \"{}\": {}", Self::node_name(i), quoted(&a.text)));
        }
        out.push_str("\n  }\n}");
        out
    }

    /// Inverse of [`to_argument_json`](Self::to_argument_json). Effects are not part of the text.
    pub fn parse_argument_json(text: &str) -> Result<Self, ArgumentParseError> {
        let value: serde_json::Value =
            serde_json::from_str(text).map_err(|e| ArgumentParseError::Json(e.to_string()))?;
        let field = |v: &serde_json::Value, k: &str| {
            v.get(k)
                .and_then(|x| x.as_str())
                .map(str::to_string)
                .ok_or_else(|| ArgumentParseError::MissingField(k.to_string()))
        };
        let intent = field(&value, "Z")?;
        let linked = value
            .get("linked_by")
            .and_then(|v| v.as_object())
            .ok_or_else(|| ArgumentParseError::MissingField("linked_by".into()))?;
        let claim = field(&value["linked_by"], "X")?;
        let n = linked.len() - 1;
        let mut assumptions = Vec::with_capacity(n);
        for i in 0..n {
            let name = Self::node_name(i);
            assumptions.push(Assumption::new(field(&value["linked_by"], &name)?));
        }
        if let Some(extra) = value
            .as_object()
            .and_then(|o| o.keys().find(|k| *k != "Z" && *k != "linked_by"))
        {
            return Err(ArgumentParseError::UnexpectedField(extra.clone()));
        }
        Ok(CausalArgument {
            intent,
            claim,
            assumptions,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuestionSet {
    pub questions: Vec<ImplicitQuestion>,
    /// Number of questions returned before truncation, when truncated.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub truncated_from: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AssumptionSet {
    pub assumptions: Vec<Assumption>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub truncated_from: Option<usize>,
}

pub fn generate_implicit_questions(
    gateway: &Gateway,
    claim_id: Option<&str>,
    claim: &str,
    intent: &str,
    hidden_evidence: &[String],
    examples: &str,
) -> StageResult<QuestionSet> {
    if intent.trim().is_empty() {
        return Err(StageError::Precondition("intent is empty"));
    }
    let text = gateway.prompt(
        ids::IMPLICIT_QUESTIONS,
        bindings([
            ("claim", claim.to_string()),
            ("intent", intent.to_string()),
            ("evidence", bullet_list(hidden_evidence)),
            ("examples", examples.to_string()),
        ]),
        claim_id,
    )?;
    let mut items = parse_bracketed(&text, None)?;
    let truncated_from = (items.len() > DEFAULT_MAX_QUESTIONS).then_some(items.len());
    if let Some(n) = truncated_from {
        log::debug!("truncating {n} implicit questions to {DEFAULT_MAX_QUESTIONS}");
    }
    items.truncate(DEFAULT_MAX_QUESTIONS);
    Ok(QuestionSet {
        questions: items.into_iter().map(ImplicitQuestion).collect(),
        truncated_from,
    })
}

#[allow(clippy::too_many_arguments)]
pub fn infer_assumptions<S: AsRef<str>>(
    gateway: &Gateway,
    claim_id: Option<&str>,
    claim: &str,
    intent: &str,
    questions: &[ImplicitQuestion],
    max_n: usize,
    stoplist: &[S],
    examples: &str,
) -> StageResult<AssumptionSet> {
    if questions.is_empty() {
        return Err(StageError::Precondition("no implicit questions"));
    }
    if max_n == 0 {
        return Err(StageError::Precondition("assumption limit must be at least 1"));
    }
    let question_text: Vec<&str> = questions.iter().map(|q| q.0.as_str()).collect();
    let text = gateway.prompt(
        ids::ASSUMPTIONS,
        bindings([
            ("claim", claim.to_string()),
            ("intention", intent.to_string()),
            ("questions", bullet_list(&question_text)),
            ("assumption_max_number", max_n.to_string()),
            ("examples", examples.to_string()),
        ]),
        claim_id,
    )?;
    let mut items = parse_bracketed(&text, Some("||"))?;
    let truncated_from = (items.len() > max_n).then_some(items.len());
    items.truncate(max_n);
    let assumptions = items
        .into_iter()
        .map(|text| Assumption {
            vague_reference: has_vague_reference(&text, stoplist),
            text,
            causal_effect: None,
        })
        .collect();
    Ok(AssumptionSet {
        assumptions,
        truncated_from,
    })
}

pub fn build_causal_graph(
    claim: &str,
    intent: &str,
    assumptions: Vec<Assumption>,
    max_n: usize,
) -> StageResult<CausalArgument> {
    if assumptions.is_empty() {
        return Err(StageError::EmptyAssumptions);
    }
    if assumptions.len() > max_n {
        return Err(StageError::Precondition("more assumptions than the configured limit"));
    }
    Ok(CausalArgument {
        intent: intent.to_string(),
        claim: claim.to_string(),
        assumptions,
    })
}

/// Ask how negating assumption `target` (0-based) moves the intent.
pub fn evaluate_counterfactual(
    gateway: &Gateway,
    claim_id: Option<&str>,
    graph: &CausalArgument,
    target: usize,
) -> StageResult<CausalEffect> {
    if target >= graph.assumptions.len() {
        return Err(StageError::AssumptionIndex {
            index: target,
            len: graph.assumptions.len(),
        });
    }
    let text = gateway.prompt(
        ids::COUNTERFACTUAL,
        bindings([
            ("argument", graph.to_argument_json()),
            ("letter", CausalArgument::node_name(target)),
        ]),
        claim_id,
    )?;
    let letter = parse_letter_choice(&text, &['A', 'B', 'C'])?;
    Ok(CausalEffect::from_letter(letter).expect("letter restricted to A-C"))
}

/// Evaluate every assumption; returns a fresh copy carrying the effects.
pub fn evaluate_all(
    gateway: &Gateway,
    claim_id: Option<&str>,
    graph: &CausalArgument,
) -> StageResult<CausalArgument> {
    let effects: Vec<CausalEffect> = (0..graph.assumptions.len())
        .into_par_iter()
        .map(|i| evaluate_counterfactual(gateway, claim_id, graph, i))
        .collect::<StageResult<_>>()?;
    let mut evaluated = graph.clone();
    for (a, e) in evaluated.assumptions.iter_mut().zip(effects) {
        a.causal_effect = Some(e);
    }
    Ok(evaluated)
}

/// Assumptions whose negation decreases the intent, in order.
pub fn select_critical_assumptions(graph: &CausalArgument) -> StageResult<Vec<Assumption>> {
    if let Some(i) = graph.assumptions.iter().position(|a| a.causal_effect.is_none()) {
        return Err(StageError::UnevaluatedAssumption(i));
    }
    Ok(graph
        .assumptions
        .iter()
        .filter(|a| a.is_critical())
        .cloned()
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gateway::{MockBackend, MockRule, MockScript, ParseError};
    use proptest::prelude::*;
    use std::sync::Arc;

    fn gateway(script: MockScript) -> (Arc<MockBackend>, Gateway) {
        let mock = Arc::new(MockBackend::new(script));
        (mock.clone(), Gateway::new(mock))
    }

    fn graph(n: usize) -> CausalArgument {
        CausalArgument {
            intent: "Z text".into(),
            claim: "X text".into(),
            assumptions: (1..=n).map(|i| Assumption::new(format!("a{i}"))).collect(),
        }
    }

    #[test]
    fn argument_layout() {
        let g = CausalArgument {
            intent: "policies work".into(),
            claim: "C".into(),
            assumptions: vec![Assumption::new("a1"), Assumption::new("a2")],
        };
        assert_eq!(
            g.to_argument_json(),
            "{\n  \"Z\": \"policies work\",\n  \"linked_by\": {\n    \"X\": \"C\",\n    \"Y_1\": \"a1\",\n    \"Y_2\": \"a2\"\n  }\n}"
        );
        let v: serde_json::Value = serde_json::from_str(&g.to_argument_json()).unwrap();
        assert_eq!(v["linked_by"]["Y_2"], "a2");
        assert!(v["linked_by"].get("Y_3").is_none());

        let single = graph(1).to_argument_json();
        assert!(single.contains("\"Y_1\"") && !single.contains("\"Y_2\""));
    }

    #[test]
    fn argument_parse_errors() {
        assert!(matches!(
            CausalArgument::parse_argument_json("{"),
            Err(ArgumentParseError::Json(_))
        ));
        assert!(matches!(
            CausalArgument::parse_argument_json(r#"{"Z":"z","linked_by":{"X":"x","Y_2":"b"}}"#),
            Err(ArgumentParseError::MissingField(f)) if f == "Y_1"
        ));
    }

    #[test]
    fn questions_parse_and_truncate() {
        let (_, gw) = gateway(
            MockScript::new()
                .rule(MockRule::template(ids::IMPLICIT_QUESTIONS).contains("two").respond(
                    "<Did job quality improve?> <Did participation rise?>",
                ))
                .rule(MockRule::template(ids::IMPLICIT_QUESTIONS).contains("four").respond(
                    "<q1> <q2> <q3> <q4>",
                ))
                .rule(MockRule::template(ids::IMPLICIT_QUESTIONS).respond("none here")),
        );
        let set = generate_implicit_questions(&gw, None, "c", "two", &[], "").unwrap();
        assert_eq!(set.questions.len(), 2);
        assert_eq!(set.truncated_from, None);
        let set = generate_implicit_questions(&gw, None, "c", "four", &[], "").unwrap();
        assert_eq!(set.questions.len(), 3);
        assert_eq!(set.questions[2].0, "q3");
        assert_eq!(set.truncated_from, Some(4));
        assert!(matches!(
            generate_implicit_questions(&gw, None, "c", "zero", &[], ""),
            Err(StageError::Parse(ParseError::NoItemsFound))
        ));
    }

    #[test]
    fn assumptions_parse_flag_truncate() {
        let (mock, gw) = gateway(
            MockScript::new()
                .rule(MockRule::template(ids::ASSUMPTIONS).contains("zz-pair").respond(
                    "rationale <New jobs were full-time>||<Participation was healthy>",
                ))
                .rule(MockRule::template(ids::ASSUMPTIONS).contains("zz-vague").respond(
                    "<The claim reflects reality>||<Wages rose>",
                ))
                .rule(MockRule::template(ids::ASSUMPTIONS).contains("zz-five").respond(
                    "<a>||<b>||<c>||<d>||<e>",
                )),
        );
        let q = vec![ImplicitQuestion("q?".into())];
        let stop = DEFAULT_VAGUE_REFERENCES;
        let set = infer_assumptions(&gw, None, "c", "zz-pair", &q, 3, &stop, "").unwrap();
        let texts: Vec<_> = set.assumptions.iter().map(|a| a.text.as_str()).collect();
        assert_eq!(texts, ["New jobs were full-time", "Participation was healthy"]);
        assert!(mock.call_log()[0].text.contains("1--3 assumptions"));

        let set = infer_assumptions(&gw, None, "c", "zz-vague", &q, 3, &stop, "").unwrap();
        assert!(set.assumptions[0].vague_reference);
        assert!(!set.assumptions[1].vague_reference);

        let set = infer_assumptions(&gw, None, "c", "zz-five", &q, 3, &stop, "").unwrap();
        assert_eq!(set.assumptions.len(), 3);
        assert_eq!(set.truncated_from, Some(5));

        assert!(matches!(
            infer_assumptions(&gw, None, "c", "zz-pair", &[], 3, &stop, ""),
            Err(StageError::Precondition(_))
        ));
    }

    #[test]
    fn vague_reference_matching() {
        let stop = DEFAULT_VAGUE_REFERENCES;
        assert!(has_vague_reference("As THE CLAIM says, jobs grew", &stop));
        assert!(!has_vague_reference("The claimant was right", &stop));
        assert!(!has_vague_reference("Evidence shows growth", &stop));
    }

    #[test]
    fn graph_construction() {
        let g = build_causal_graph("C", "Z", vec![Assumption::new("a")], 3).unwrap();
        assert_eq!(g.assumptions.len(), 1);
        assert!(matches!(
            build_causal_graph("C", "Z", vec![], 3),
            Err(StageError::EmptyAssumptions)
        ));
        assert!(build_causal_graph("C", "Z", vec![Assumption::new("a"), Assumption::new("b")], 1).is_err());
    }

    #[test]
    fn counterfactual_letters() {
        let (mock, gw) = gateway(
            MockScript::new()
                .rule(MockRule::template(ids::COUNTERFACTUAL).contains("do(Y_1").respond("C"))
                .rule(MockRule::template(ids::COUNTERFACTUAL).contains("do(Y_2").respond("A"))
                .rule(MockRule::template(ids::COUNTERFACTUAL).respond("E")),
        );
        let g = graph(3);
        assert_eq!(evaluate_counterfactual(&gw, None, &g, 0).unwrap(), CausalEffect::Decrease);
        assert_eq!(evaluate_counterfactual(&gw, None, &g, 1).unwrap(), CausalEffect::NoChange);
        assert!(matches!(
            evaluate_counterfactual(&gw, None, &g, 2),
            Err(StageError::Parse(ParseError::UnparseableChoice(_)))
        ));
        assert!(matches!(
            evaluate_counterfactual(&gw, None, &g, 3),
            Err(StageError::AssumptionIndex { .. })
        ));
        let prompt = &mock.call_log()[0].text;
        assert!(prompt.contains("ΔP(Z | do(Y_1 = ¬Y_1))"));
        assert!(prompt.contains("when we set Y_1 from Y_1 to ¬Y_1"));
        assert!(prompt.contains(&g.to_argument_json()));
    }

    #[test]
    fn evaluate_all_issues_one_call_per_assumption() {
        let (mock, gw) = gateway(
            MockScript::new()
                .rule(MockRule::template(ids::COUNTERFACTUAL).contains("do(Y_2").respond("A"))
                .rule(MockRule::template(ids::COUNTERFACTUAL).respond("C")),
        );
        let g = graph(3);
        let evaluated = evaluate_all(&gw, None, &g).unwrap();
        assert_eq!(mock.completion_calls(ids::COUNTERFACTUAL), 3);
        assert!(g.assumptions.iter().all(|a| a.causal_effect.is_none()));
        let critical = select_critical_assumptions(&evaluated).unwrap();
        let texts: Vec<_> = critical.iter().map(|a| a.text.as_str()).collect();
        assert_eq!(texts, ["a1", "a3"]);
    }

    #[test]
    fn critical_selection_rules() {
        let with = |effects: &[CausalEffect]| {
            let mut g = graph(effects.len());
            for (a, e) in g.assumptions.iter_mut().zip(effects) {
                a.causal_effect = Some(*e);
            }
            select_critical_assumptions(&g).unwrap().len()
        };
        use CausalEffect::*;
        assert_eq!(with(&[Decrease, NoChange, Decrease]), 2);
        assert_eq!(with(&[NoChange, NoChange]), 0);
        assert_eq!(with(&[Increase]), 0);
        assert!(matches!(
            select_critical_assumptions(&graph(2)),
            Err(StageError::UnevaluatedAssumption(0))
        ));
    }

    #[test]
    fn letter_effect_bijection() {
        for e in CausalEffect::ALL {
            assert_eq!(CausalEffect::from_letter(e.letter()), Some(e));
        }
        let letters: std::collections::HashSet<_> = CausalEffect::ALL.iter().map(|e| e.letter()).collect();
        assert_eq!(letters.len(), 3);
        assert_eq!(CausalEffect::from_letter('D'), None);
    }

    proptest! {
        #[test]
        fn argument_round_trips(
            intent in "\\PC{0,30}",
            claim in "\\PC{0,30}",
            texts in prop::collection::vec("\\PC{0,20}", 0..6),
        ) {
            let g = CausalArgument {
                intent,
                claim,
                assumptions: texts.into_iter().map(Assumption::new).collect(),
            };
            prop_assert_eq!(CausalArgument::parse_argument_json(&g.to_argument_json()).unwrap(), g);
        }
    }
}
