//! Shipped test assets: the unemployment scenario, seeded random fixtures,
//! and a corpus of malformed model responses.
//!
//! Layout of a scenario directory:
//!
//! ```text
//! fixtures/<name>/record.jsonl           one ClaimRecord
//! fixtures/<name>/mock.json              MockScript keyed by template id + claim id
//! fixtures/<name>/expected_report.jsonl  VerdictReport under the full pipeline
//! ```
//!
//! Expected reports are only rewritten when `TRACER_UPDATE_EXPECTED=1`.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::alignment::{check_presentation, check_relevance, Aligner, RefinementThresholds};
use crate::causality::{
    evaluate_counterfactual, generate_implicit_questions, infer_assumptions, Assumption, CausalArgument,
    ImplicitQuestion, DEFAULT_VAGUE_REFERENCES,
};
use crate::che::{CheCandidate, CheRetriever, NliVerdict};
use crate::corpus::{read_corpus, ClaimRecord, CorpusError, Label, RawRating, Split};
use crate::error::StageError;
use crate::gateway::{ids, Gateway, MockBackend, MockRule, MockScript, ParseError};
use crate::intent::{generate_intent, score_quality};
use crate::pipeline::{Pipeline, PipelineConfig, VerdictReport};
use crate::verdict::{cot_verify, reassess, BaseVerdict, VerdictSource};

pub const UPDATE_ENV: &str = "TRACER_UPDATE_EXPECTED";
pub const UNEMPLOYMENT_ID: &str = "unemployment";

pub const UNEMPLOYMENT_CLAIM: &str = "Under our administration, unemployment has fallen to its lowest level in half a century, demonstrating that our economic policies are working.";
pub const UNEMPLOYMENT_PRESENTED: &str = "Official labor statistics confirm the unemployment rate dropped to 3.5%, the lowest in 50 years.";
pub const UNEMPLOYMENT_PART_TIME: &str = "Most of the new jobs were part-time or gig-based, lacking benefits or job security.";
pub const UNEMPLOYMENT_PARTICIPATION: &str = "Labor force participation remained low, with many discouraged workers no longer counted.";
pub const UNEMPLOYMENT_HOSPITALITY: &str = "Job growth was particularly strong in the hospitality and retail sectors.";
pub const UNEMPLOYMENT_JUSTIFICATION: &str = "The claim is factually supported by official statistics.";
pub const UNEMPLOYMENT_INTENT: &str = "The administration's economic policies are succeeding and broadly benefiting workers.";
pub const UNEMPLOYMENT_ASSUMPTIONS: [&str; 3] = [
    "Most new jobs are stable full-time positions with benefits.",
    "Labor force participation has recovered alongside falling unemployment.",
    "The administration's policies caused the fall in unemployment.",
];

/// Directory holding the shipped scenario fixtures.
pub fn fixtures_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures")
}

pub fn unemployment_dir() -> PathBuf {
    fixtures_dir().join(UNEMPLOYMENT_ID)
}

pub fn unemployment_record() -> ClaimRecord {
    let mut r = ClaimRecord::new(UNEMPLOYMENT_ID, UNEMPLOYMENT_CLAIM);
    r.raw_rating = Some(RawRating::new("Half True"));
    r.gold_label = Some(Label::HalfTrue);
    r.evidence = vec![
        UNEMPLOYMENT_PRESENTED.to_string(),
        UNEMPLOYMENT_PART_TIME.to_string(),
        UNEMPLOYMENT_PARTICIPATION.to_string(),
        UNEMPLOYMENT_HOSPITALITY.to_string(),
    ];
    r.ruling = vec![
        "Our ruling: Although the unemployment figure is accurate, the omission of job quality and participation context distorts the implied economic success. We rate it Half-True.".to_string(),
    ];
    r
}

/// Script for every stage of the scenario, for all four ablation configurations.
pub fn unemployment_script() -> MockScript {
    let rule = |template: &str| MockRule::template(template).claim(UNEMPLOYMENT_ID);
    let [a1, a2, a3] = UNEMPLOYMENT_ASSUMPTIONS;
    let nli = |premise: &str, hypothesis: &str, letter: &str| {
        rule(ids::NLI).contains(premise).contains(hypothesis).respond(letter)
    };
    MockScript::new()
        .without_fallback()
        .embedding(UNEMPLOYMENT_CLAIM, vec![1.0, 0.0, 0.0, 0.0, 0.6, 0.0])
        .embedding(UNEMPLOYMENT_PRESENTED, vec![1.0, 0.0, 0.0, 0.0, 0.2, 0.0])
        .embedding(UNEMPLOYMENT_PART_TIME, vec![0.3, 1.0, 0.0, 0.2, 0.0, 0.0])
        .embedding(UNEMPLOYMENT_PARTICIPATION, vec![0.3, 0.0, 1.0, 0.0, 0.0, 0.0])
        .embedding(UNEMPLOYMENT_HOSPITALITY, vec![0.4, 0.5, 0.0, 1.0, 0.0, 0.0])
        .embedding(a1, vec![0.0, 1.0, 0.0, 0.3, 0.0, 0.0])
        .embedding(a2, vec![0.0, 0.0, 1.0, 0.0, 0.0, 0.2])
        .embedding(a3, vec![0.5, 0.0, 0.0, 0.0, 1.0, 0.0])
        .embedding(UNEMPLOYMENT_INTENT, vec![0.2, 0.8, 0.8, 0.5, 0.3, 0.0])
        .rule(rule(ids::RELEVANCE).respond("A"))
        .rule(rule(ids::PRESENTATION).contains(UNEMPLOYMENT_PRESENTED).respond("A"))
        .rule(rule(ids::PRESENTATION).respond("B"))
        .rule(rule(ids::COT_VERIFY).respond(format!(
            "{UNEMPLOYMENT_JUSTIFICATION}\nAnswer: A"
        )))
        .rule(rule(ids::INTENT_GENERATION).respond(format!(
            "The claim links record-low unemployment to the administration's policies and suggests workers are better off. <{UNEMPLOYMENT_INTENT}>"
        )))
        .rule(rule(ids::QUALITY_PLAUSIBILITY).respond("1"))
        .rule(rule(ids::QUALITY_IMPLICITY).respond("1"))
        .rule(rule(ids::QUALITY_SUFFICIENCY).respond("1"))
        .rule(rule(ids::QUALITY_READABILITY).respond("1"))
        .rule(rule(ids::IMPLICIT_QUESTIONS).respond(
            "<Are the new jobs stable, full-time positions?> <Has labor force participation recovered?>",
        ))
        .rule(rule(ids::ASSUMPTIONS).respond(format!("<{a1}>||<{a2}>||<{a3}>")))
        .rule(rule(ids::COUNTERFACTUAL).contains("do(Y_1").respond("C"))
        .rule(rule(ids::COUNTERFACTUAL).contains("do(Y_2").respond("C"))
        .rule(rule(ids::COUNTERFACTUAL).contains("do(Y_3").respond("A"))
        .rule(nli(UNEMPLOYMENT_PART_TIME, a1, "B"))
        .rule(nli(UNEMPLOYMENT_PARTICIPATION, a2, "B"))
        .rule(nli(UNEMPLOYMENT_PART_TIME, UNEMPLOYMENT_INTENT, "B"))
        .rule(nli(UNEMPLOYMENT_PARTICIPATION, UNEMPLOYMENT_INTENT, "B"))
        .rule(rule(ids::NLI).respond("C"))
        .rule(rule(ids::REASSESSMENT).respond("B"))
}

/// Pipeline settings the scenario's expected report was produced with.
pub fn scenario_config() -> PipelineConfig {
    PipelineConfig {
        thresholds: RefinementThresholds::default(),
        ..PipelineConfig::default()
    }
}

/// A claim, its mock script and the report the full pipeline must produce.
#[derive(Debug, Clone)]
pub struct ScenarioFixture {
    pub record: ClaimRecord,
    pub script: MockScript,
    /// The committed report line, without trailing newline.
    pub expected: Option<String>,
}

#[derive(Debug, thiserror::Error)]
pub enum FixtureError {
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error("mock script: {0}")]
    Script(String),
    #[error("{0}: expected exactly one record")]
    RecordCount(PathBuf),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl ScenarioFixture {
    pub fn load(dir: impl AsRef<Path>) -> Result<Self, FixtureError> {
        let dir = dir.as_ref();
        let record_path = dir.join("record.jsonl");
        let corpus = read_corpus(std::io::BufReader::new(std::fs::File::open(&record_path)?), Split::Test)?;
        if corpus.len() != 1 {
            return Err(FixtureError::RecordCount(record_path));
        }
        let script = MockScript::load(dir.join("mock.json")).map_err(|e| FixtureError::Script(e.to_string()))?;
        let expected = match std::fs::read_to_string(dir.join("expected_report.jsonl")) {
            Ok(s) => Some(s.trim_end().to_string()),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => None,
            Err(e) => return Err(e.into()),
        };
        Ok(ScenarioFixture {
            record: corpus.records.into_iter().next().unwrap(),
            script,
            expected,
        })
    }

    pub fn pipeline(&self, config: PipelineConfig) -> (Arc<MockBackend>, Pipeline) {
        let mock = Arc::new(MockBackend::new(self.script.clone()));
        let gateway = Arc::new(Gateway::new(mock.clone()));
        (mock, Pipeline::new(gateway, config))
    }

    pub fn run(&self) -> VerdictReport {
        self.pipeline(scenario_config()).1.run(&self.record)
    }
}

/// Write record, script and (when requested) expected report for the scenario.
pub fn write_unemployment(dir: impl AsRef<Path>, with_expected: bool) -> Result<ScenarioFixture, FixtureError> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir)?;
    let record = unemployment_record();
    record.validate()?;
    std::fs::write(
        dir.join("record.jsonl"),
        format!("{}\n", serde_json::to_string(&record).expect("records serialize")),
    )?;
    let script = unemployment_script();
    std::fs::write(dir.join("mock.json"), format!("{}\n", script.to_json_pretty()))?;
    let mut fixture = ScenarioFixture {
        record,
        script,
        expected: None,
    };
    if with_expected {
        let line = fixture.run().to_json_line();
        std::fs::write(dir.join("expected_report.jsonl"), format!("{line}\n"))?;
        fixture.expected = Some(line);
    }
    Ok(fixture)
}

/// True when the caller asked for committed expectations to be rewritten.
pub fn update_requested() -> bool {
    std::env::var(UPDATE_ENV).map(|v| v == "1").unwrap_or(false)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FixtureSizes {
    pub labels: usize,
    pub pool: usize,
}

/// A synthetic hidden-evidence pool with scripted embeddings and NLI answers.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticPool {
    pub query: String,
    pub sentences: Vec<String>,
    pub script: MockScript,
}

impl SyntheticPool {
    pub fn retriever(&self) -> (Arc<MockBackend>, CheRetriever) {
        let mock = Arc::new(MockBackend::new(self.script.clone()));
        (mock.clone(), CheRetriever::new(Arc::new(Gateway::new(mock))))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RandomFixture {
    pub seed: u64,
    pub gold: Vec<Label>,
    pub pred: Vec<Label>,
    pub pool: SyntheticPool,
}

fn random_label(rng: &mut ChaCha8Rng) -> Label {
    Label::ALL[rng.gen_range(0..3)]
}

pub fn generate_random_fixture(seed: u64, sizes: FixtureSizes) -> RandomFixture {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let gold: Vec<Label> = (0..sizes.labels).map(|_| random_label(&mut rng)).collect();
    let pred: Vec<Label> = gold
        .iter()
        .map(|g| if rng.gen_bool(0.6) { *g } else { random_label(&mut rng) })
        .collect();

    let dim = 8;
    let vector = |rng: &mut ChaCha8Rng| -> Vec<f64> {
        let v: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
        if v.iter().all(|x| *x == 0.0) {
            vec![1.0; dim]
        } else {
            v
        }
    };
    let query = format!("hq-{seed}-query");
    let mut script = MockScript::new().without_fallback().embedding(query.clone(), vector(&mut rng));
    let mut sentences = Vec::with_capacity(sizes.pool);
    for i in 0..sizes.pool {
        let s = format!("hs-{seed}-{i:04} synthetic hidden sentence");
        let base = script.embeddings[&query].clone();
        let noise = vector(&mut rng);
        let mix = rng.gen_range(0.0..1.0);
        let v: Vec<f64> = base.iter().zip(&noise).map(|(b, n)| mix * b + (1.0 - mix) * n).collect();
        let v = if v.iter().all(|x| x.abs() < 1e-12) { noise } else { v };
        let letter = ["A", "B", "C"][rng.gen_range(0..3)];
        script = script
            .embedding(s.clone(), v)
            .rule(MockRule::template(ids::NLI).contains(format!("hs-{seed}-{i:04} ")).respond(letter));
        sentences.push(s);
    }
    RandomFixture {
        seed,
        gold,
        pred,
        pool: SyntheticPool {
            query,
            sentences,
            script,
        },
    }
}

/// Valid records with random dates, ratings, evidence and rulings.
pub fn generate_synthetic_corpus(seed: u64, n: usize) -> Vec<ClaimRecord> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let base = chrono::NaiveDate::from_ymd_opt(2007, 1, 1).expect("valid date");
    (0..n)
        .map(|i| {
            let mut r = ClaimRecord::new(format!("syn-{seed}-{i:04}"), format!("Synthetic claim {i} with \"quotes\" and ünïcode."));
            if rng.gen_bool(0.8) {
                r.date = Some(base + chrono::Days::new(rng.gen_range(0..6000)));
            }
            if rng.gen_bool(0.9) {
                let rating = crate::corpus::RATINGS[rng.gen_range(0..crate::corpus::RATINGS.len())];
                r.raw_rating = Some(RawRating::new(rating));
                if rng.gen_bool(0.5) {
                    r.gold_label = crate::corpus::consolidate_label(&RawRating::new(rating)).ok();
                }
            }
            r.evidence = (0..rng.gen_range(0..5)).map(|j| format!("Evidence {j} for claim {i}.")).collect();
            r.ruling = (0..rng.gen_range(0..3)).map(|j| format!("Ruling paragraph {j} for claim {i}.")).collect();
            r
        })
        .collect()
}

/// What a malformed response must lead to.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ExpectedOutcome {
    UnparseableChoice,
    NoItemsFound,
    UnparseableDigit,
    EmptyJustification,
    /// Re-assessment kept the base label and recorded why.
    KeepsBase,
    /// A list was cut to `to` items from `from`.
    Truncated { from: usize, to: usize },
    /// A quality criterion failed, so the intent is rejected.
    IntentRejected,
    /// Alignment flagged the sentence with an error and no label.
    SentenceFlagged,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MalformedCase {
    pub name: &'static str,
    pub template_id: &'static str,
    pub response: &'static str,
    pub expected: ExpectedOutcome,
}

const fn case(
    name: &'static str,
    template_id: &'static str,
    response: &'static str,
    expected: ExpectedOutcome,
) -> MalformedCase {
    MalformedCase {
        name,
        template_id,
        response,
        expected,
    }
}

pub fn malformed_cases() -> Vec<MalformedCase> {
    use ExpectedOutcome::*;
    vec![
        case("counterfactual_out_of_range_letter", ids::COUNTERFACTUAL, "D", UnparseableChoice),
        case("counterfactual_empty", ids::COUNTERFACTUAL, "", UnparseableChoice),
        case("counterfactual_prose_only", ids::COUNTERFACTUAL, "Probably decreases", UnparseableChoice),
        case("counterfactual_letter_e", ids::COUNTERFACTUAL, "E.", UnparseableChoice),
        case("nli_out_of_range_letter", ids::NLI, "D", UnparseableChoice),
        case("nli_word_not_letter", ids::NLI, "entailment", UnparseableChoice),
        case("reassessment_out_of_range_letter", ids::REASSESSMENT, "E", KeepsBase),
        case("reassessment_empty", ids::REASSESSMENT, "", KeepsBase),
        case("reassessment_label_word", ids::REASSESSMENT, "Half-true", KeepsBase),
        case("presentation_word", ids::PRESENTATION, "Yes", SentenceFlagged),
        case("relevance_hedged", ids::RELEVANCE, "maybe", SentenceFlagged),
        case("verify_wrong_letter", ids::COT_VERIFY, "It is unclear.\nAnswer: E", UnparseableChoice),
        case("verify_no_reasoning", ids::COT_VERIFY, "Answer: B", EmptyJustification),
        case("verify_empty", ids::COT_VERIFY, "", UnparseableChoice),
        case("intent_unbracketed", ids::INTENT_GENERATION, "The policies work.", NoItemsFound),
        case("intent_empty_brackets", ids::INTENT_GENERATION, "<>", NoItemsFound),
        case("intent_blank_brackets", ids::INTENT_GENERATION, "rationale <   >", NoItemsFound),
        case("questions_numbered_list", ids::IMPLICIT_QUESTIONS, "1. Is it stable?\n2. Is it broad?", NoItemsFound),
        case("questions_too_many", ids::IMPLICIT_QUESTIONS, "<q1?> <q2?> <q3?> <q4?> <q5?>", Truncated { from: 5, to: 3 }),
        case("assumptions_too_many", ids::ASSUMPTIONS, "<a1>||<a2>||<a3>||<a4>", Truncated { from: 4, to: 3 }),
        case("assumptions_unbracketed_too_many", ids::ASSUMPTIONS, "a1 || a2 || a3 || a4 || a5", Truncated { from: 5, to: 3 }),
        case("assumptions_prose", ids::ASSUMPTIONS, "no assumptions here", NoItemsFound),
        case("assumptions_empty", ids::ASSUMPTIONS, "", NoItemsFound),
        case("quality_digit_two", ids::QUALITY_PLAUSIBILITY, "2", IntentRejected),
        case("quality_word", ids::QUALITY_READABILITY, "yes", IntentRejected),
    ]
}

fn parse_outcome(e: &StageError) -> Option<ExpectedOutcome> {
    match e {
        StageError::Parse(ParseError::UnparseableChoice(_)) => Some(ExpectedOutcome::UnparseableChoice),
        StageError::Parse(ParseError::NoItemsFound) => Some(ExpectedOutcome::NoItemsFound),
        StageError::Parse(ParseError::UnparseableDigit(_)) => Some(ExpectedOutcome::UnparseableDigit),
        StageError::EmptyJustification => Some(ExpectedOutcome::EmptyJustification),
        _ => None,
    }
}

impl MalformedCase {
    /// Feed the response to the stage that owns the template and describe
    /// what happened. `Err` carries anything that matches no known outcome.
    pub fn evaluate(&self) -> Result<ExpectedOutcome, String> {
        let script = MockScript::new()
            .rule(MockRule::template(self.template_id).respond(self.response))
            .rule(MockRule::any().respond("1"));
        let gw = Gateway::new(Arc::new(MockBackend::new(script)));
        let graph = CausalArgument {
            intent: "Z".into(),
            claim: "X".into(),
            assumptions: vec![Assumption::new("a1")],
        };
        let unexpected = |what: String| Err(what);
        let stage_err = |e: StageError| parse_outcome(&e).ok_or_else(|| e.to_string());
        match self.template_id {
            ids::COUNTERFACTUAL => match evaluate_counterfactual(&gw, None, &graph, 0) {
                Ok(effect) => unexpected(format!("parsed as {effect:?}")),
                Err(e) => stage_err(e),
            },
            ids::NLI => {
                let r = CheRetriever::new(Arc::new(gw));
                match r.nli_check(None, "premise", "hypothesis") {
                    Ok(v) => unexpected(format!("parsed as {v:?}")),
                    Err(e) => stage_err(e),
                }
            }
            ids::REASSESSMENT => {
                let base = BaseVerdict {
                    label: Label::True,
                    justification: "j".into(),
                    source: VerdictSource::CoT,
                };
                let che = [CheCandidate {
                    sentence: "s".into(),
                    assumption: "a1".into(),
                    similarity: 1.0,
                    nli: NliVerdict::Contradict,
                    selected: true,
                    linked_assumptions: vec![],
                }];
                match reassess(&gw, None, &base, &che, &graph) {
                    Ok(f) if f.label == base.label && !f.reassessed && f.fallback_reason.is_some() => {
                        Ok(ExpectedOutcome::KeepsBase)
                    }
                    Ok(f) => unexpected(format!("final verdict {f:?}")),
                    Err(e) => stage_err(e),
                }
            }
            ids::PRESENTATION | ids::RELEVANCE => {
                let result = if self.template_id == ids::PRESENTATION {
                    check_presentation(&gw, None, "claim", "sentence").map(|p| format!("{p:?}"))
                } else {
                    check_relevance(&gw, None, "claim", "ruling", "sentence").map(|r| format!("{r:?}"))
                };
                let aligner = Aligner::new(Arc::new(gw));
                let aligned = aligner.align_evidence(None, "claim", &["ruling".to_string()], &["sentence".to_string()]);
                match (result, aligned[0].label, aligned[0].error.is_some()) {
                    (Err(StageError::Parse(ParseError::UnparseableChoice(_))), None, true) => {
                        Ok(ExpectedOutcome::SentenceFlagged)
                    }
                    (r, label, _) => unexpected(format!("{r:?} / {label:?}")),
                }
            }
            ids::COT_VERIFY => match cot_verify(&gw, None, "claim", &[]) {
                Ok(v) => unexpected(format!("parsed as {v:?}")),
                Err(e) => stage_err(e),
            },
            ids::INTENT_GENERATION => match generate_intent(&gw, None, "claim", &[], "") {
                Ok(i) => unexpected(format!("parsed as {i:?}")),
                Err(e) => stage_err(e),
            },
            ids::IMPLICIT_QUESTIONS => match generate_implicit_questions(&gw, None, "claim", "intent", &[], "") {
                Ok(q) => match q.truncated_from {
                    Some(from) => Ok(ExpectedOutcome::Truncated {
                        from,
                        to: q.questions.len(),
                    }),
                    None => unexpected(format!("parsed {} questions", q.questions.len())),
                },
                Err(e) => stage_err(e),
            },
            ids::ASSUMPTIONS => {
                let q = [ImplicitQuestion("q?".into())];
                match infer_assumptions(&gw, None, "claim", "intent", &q, 3, &DEFAULT_VAGUE_REFERENCES, "") {
                    Ok(a) => match a.truncated_from {
                        Some(from) => Ok(ExpectedOutcome::Truncated {
                            from,
                            to: a.assumptions.len(),
                        }),
                        None => unexpected(format!("parsed {} assumptions", a.assumptions.len())),
                    },
                    Err(e) => stage_err(e),
                }
            }
            id if id.starts_with("quality_") => {
                let scores = score_quality(&gw, None, "claim", "intent");
                if scores.accepted() {
                    unexpected("intent accepted".into())
                } else {
                    Ok(ExpectedOutcome::IntentRejected)
                }
            }
            other => unexpected(format!("no stage for template {other}")),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn random_fixture_is_seeded() {
        let sizes = FixtureSizes { labels: 20, pool: 6 };
        assert_eq!(generate_random_fixture(7, sizes), generate_random_fixture(7, sizes));
        assert_ne!(generate_random_fixture(7, sizes).gold, generate_random_fixture(8, sizes).gold);
        let empty = generate_random_fixture(7, FixtureSizes { labels: 0, pool: 0 });
        assert!(empty.gold.is_empty() && empty.pred.is_empty() && empty.pool.sentences.is_empty());
        let f = generate_random_fixture(3, FixtureSizes { labels: 200, pool: 0 });
        assert_eq!(f.gold.len(), 200);
        assert_eq!(f.pred.len(), 200);
    }

    #[test]
    fn synthetic_corpus_is_valid() {
        let records = generate_synthetic_corpus(11, 50);
        assert_eq!(records, generate_synthetic_corpus(11, 50));
        let corpus = crate::corpus::Corpus::new(Split::Train, records).unwrap();
        assert_eq!(corpus.len(), 50);
    }

    #[test]
    fn malformed_cases_behave() {
        let cases = malformed_cases();
        assert!(cases.len() >= 20);
        for c in cases {
            assert_eq!(c.evaluate(), Ok(c.expected.clone()), "{}", c.name);
        }
    }

    #[test]
    fn shipped_unemployment_files_match_builders() {
        let f = ScenarioFixture::load(unemployment_dir()).unwrap();
        assert_eq!(f.record, unemployment_record());
        assert_eq!(f.script, unemployment_script());
    }
}
