//! Base verdicts and their re-assessment against critical hidden evidence.

use std::collections::BTreeMap;
use std::io::BufRead;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::causality::CausalArgument;
use crate::che::CheCandidate;
use crate::corpus::{CorpusError, Label};
use crate::error::{StageError, StageResult};
use crate::gateway::{bindings, bullet_list, ids, parse_letter_choice, parse_reasoned_choice, Gateway};

pub const UNVERIFIABLE: &str = "Unverifiable";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum VerdictSource {
    CoT,
    External,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BaseVerdict {
    pub label: Label,
    pub justification: String,
    pub source: VerdictSource,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FinalVerdict {
    pub label: Label,
    pub reassessed: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub raw_choice: Option<char>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fallback_reason: Option<String>,
}

impl FinalVerdict {
    /// The base label carried through unchanged.
    pub fn preserved(base: &BaseVerdict, fallback_reason: Option<String>) -> Self {
        FinalVerdict {
            label: base.label,
            reassessed: false,
            raw_choice: None,
            fallback_reason,
        }
    }
}

fn label_from_letter(letter: char) -> Option<Label> {
    match letter {
        'A' => Some(Label::True),
        'B' => Some(Label::HalfTrue),
        'C' => Some(Label::False),
        _ => None,
    }
}

/// Zero-shot chain-of-thought verification over the full evidence list.
pub fn cot_verify(
    gateway: &Gateway,
    claim_id: Option<&str>,
    claim: &str,
    evidence: &[String],
) -> StageResult<BaseVerdict> {
    let text = gateway.prompt(
        ids::COT_VERIFY,
        bindings([("claim", claim.to_string()), ("evidence", bullet_list(evidence))]),
        claim_id,
    )?;
    let (reasoning, letter) = parse_reasoned_choice(&text, &['A', 'B', 'C'])?;
    if reasoning.trim().is_empty() {
        return Err(StageError::EmptyJustification);
    }
    Ok(BaseVerdict {
        label: label_from_letter(letter).expect("letter restricted to A-C"),
        justification: reasoning.trim().to_string(),
        source: VerdictSource::CoT,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExternalVerdictRecord {
    pub id: String,
    pub label: Label,
    pub justification: String,
}

/// Base verdicts produced by another verifier, keyed by claim id.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ExternalVerdicts {
    verdicts: BTreeMap<String, BaseVerdict>,
}

impl ExternalVerdicts {
    pub fn read<R: BufRead>(reader: R) -> Result<Self, CorpusError> {
        let mut verdicts = BTreeMap::new();
        for (i, line) in reader.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let rec: ExternalVerdictRecord = serde_json::from_str(&line).map_err(|e| CorpusError::Parse {
                line: i + 1,
                message: e.to_string(),
            })?;
            if rec.justification.trim().is_empty() {
                return Err(CorpusError::Validation {
                    id: rec.id,
                    message: "external verdict has an empty justification".into(),
                });
            }
            let verdict = BaseVerdict {
                label: rec.label,
                justification: rec.justification,
                source: VerdictSource::External,
            };
            if verdicts.insert(rec.id.clone(), verdict).is_some() {
                return Err(CorpusError::Validation {
                    id: rec.id,
                    message: "duplicate external verdict".into(),
                });
            }
        }
        Ok(ExternalVerdicts { verdicts })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, CorpusError> {
        let file = std::fs::File::open(path)?;
        Self::read(std::io::BufReader::new(file))
    }

    pub fn insert(&mut self, id: impl Into<String>, verdict: BaseVerdict) {
        self.verdicts.insert(id.into(), verdict);
    }

    pub fn get(&self, id: &str) -> StageResult<BaseVerdict> {
        self.verdicts
            .get(id)
            .cloned()
            .ok_or_else(|| StageError::MissingExternalVerdict(id.to_string()))
    }

    pub fn len(&self) -> usize {
        self.verdicts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.verdicts.is_empty()
    }
}

/// Revise `base` in light of the selected hidden evidence.
///
/// With no evidence the base label stands and no request is made. Option D
/// and unparseable answers also keep the base label, with the reason recorded.
pub fn reassess(
    gateway: &Gateway,
    claim_id: Option<&str>,
    base: &BaseVerdict,
    che: &[CheCandidate],
    graph: &CausalArgument,
) -> StageResult<FinalVerdict> {
    if che.is_empty() {
        return Ok(FinalVerdict::preserved(base, None));
    }
    let sentences: Vec<&str> = che.iter().map(|c| c.sentence.as_str()).collect();
    let text = gateway.prompt(
        ids::REASSESSMENT,
        bindings([
            ("evidence", bullet_list(&sentences)),
            ("argument", graph.to_argument_json()),
            ("justification", base.justification.clone()),
        ]),
        claim_id,
    )?;
    match parse_letter_choice(&text, &['A', 'B', 'C', 'D']) {
        Ok(letter) => Ok(match label_from_letter(letter) {
            Some(label) => FinalVerdict {
                label,
                reassessed: true,
                raw_choice: Some(letter),
                fallback_reason: None,
            },
            None => FinalVerdict {
                label: base.label,
                reassessed: true,
                raw_choice: Some(letter),
                fallback_reason: Some(UNVERIFIABLE.to_string()),
            },
        }),
        Err(e) => Ok(FinalVerdict::preserved(base, Some(e.to_string()))),
    }
}
