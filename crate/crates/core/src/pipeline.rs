//! End-to-end processing of one claim record into a [`VerdictReport`].

use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::alignment::{AlignedEvidence, Aligner, RefinementThresholds};
use crate::causality::{
    build_causal_graph, evaluate_all, generate_implicit_questions, infer_assumptions, select_critical_assumptions,
    CausalArgument, ImplicitQuestion, DEFAULT_MAX_ASSUMPTIONS, DEFAULT_VAGUE_REFERENCES,
};
use crate::che::{CheCandidate, CheParams, CheRetriever};
use crate::corpus::{ClaimRecord, Label};
use crate::endpoints::{EvidenceClassifier, NliModel};
use crate::error::{StageError, StageResult};
use crate::eval::AblationConfig;
use crate::gateway::Gateway;
use crate::intent::{assess_intent, generate_intent, IntentAssessment};
use crate::verdict::{cot_verify, reassess, BaseVerdict, ExternalVerdicts, FinalVerdict};

pub const REPORT_SCHEMA: &str = "tracer.verdict_report/v1";

/// Few-shot demonstrations substituted into the `{examples}` slots.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct Exemplars {
    pub intent_generation: String,
    pub implicit_questions: String,
    pub assumptions: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    pub ablation: AblationConfig,
    pub thresholds: RefinementThresholds,
    pub relevance_check: bool,
    pub che: CheParams,
    pub max_assumptions: usize,
    pub vague_references: Vec<String>,
    pub exemplars: Exemplars,
    /// Skip every stage after the base verdict unless it is True.
    pub reassess_only_true: bool,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            ablation: AblationConfig::full(),
            thresholds: RefinementThresholds::default(),
            relevance_check: true,
            che: CheParams::default(),
            max_assumptions: DEFAULT_MAX_ASSUMPTIONS,
            vague_references: DEFAULT_VAGUE_REFERENCES.iter().map(|s| s.to_string()).collect(),
            exemplars: Exemplars::default(),
            reassess_only_true: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Alignment,
    BaseVerdict,
    Intent,
    ImplicitQuestions,
    Assumptions,
    Counterfactual,
    CheRetrieval,
    Reassessment,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StageStatus {
    Ok,
    Skipped,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageDiagnostic {
    pub stage: Stage,
    pub status: StageStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerdictReport {
    pub schema: String,
    pub id: String,
    pub claim: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gold_label: Option<Label>,
    pub ablation: String,
    pub aligned_evidence: Vec<AlignedEvidence>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub intent: Option<IntentAssessment>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub implicit_questions: Vec<ImplicitQuestion>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub causal_argument: Option<CausalArgument>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub critical_assumptions: Vec<String>,
    pub che: Vec<CheCandidate>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub base_verdict: Option<BaseVerdict>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub final_verdict: Option<FinalVerdict>,
    pub diagnostics: Vec<StageDiagnostic>,
}

impl VerdictReport {
    fn new(record: &ClaimRecord, ablation: AblationConfig) -> Self {
        VerdictReport {
            schema: REPORT_SCHEMA.to_string(),
            id: record.id.clone(),
            claim: record.claim.clone(),
            gold_label: record.label(),
            ablation: ablation.name(),
            aligned_evidence: Vec::new(),
            intent: None,
            implicit_questions: Vec::new(),
            causal_argument: None,
            critical_assumptions: Vec::new(),
            che: Vec::new(),
            base_verdict: None,
            final_verdict: None,
            diagnostics: Vec::new(),
        }
    }

    pub fn predicted(&self) -> Option<Label> {
        self.final_verdict.as_ref().map(|f| f.label)
    }

    pub fn diagnostic(&self, stage: Stage) -> Option<&StageDiagnostic> {
        self.diagnostics.iter().find(|d| d.stage == stage)
    }

    fn note(&mut self, stage: Stage, status: StageStatus, detail: Option<String>) {
        self.diagnostics.push(StageDiagnostic { stage, status, detail });
    }

    fn ok(&mut self, stage: Stage) {
        self.note(stage, StageStatus::Ok, None);
    }

    fn fail(&mut self, stage: Stage, error: &StageError) {
        log::warn!("claim {}: {stage:?} failed: {error}", self.id);
        self.note(stage, StageStatus::Failed, Some(error.to_string()));
    }

    /// Carry the base verdict through unchanged after an early stop.
    fn downgrade(&mut self) {
        if let Some(base) = &self.base_verdict {
            self.final_verdict = Some(FinalVerdict::preserved(base, None));
        }
    }

    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("reports serialize")
    }
}

#[derive(Clone)]
pub struct Pipeline {
    pub gateway: Arc<Gateway>,
    pub config: PipelineConfig,
    pub classifier: Option<Arc<dyn EvidenceClassifier>>,
    pub nli_model: Option<Arc<dyn NliModel>>,
    pub external_verdicts: Option<Arc<ExternalVerdicts>>,
}

impl Pipeline {
    pub fn new(gateway: Arc<Gateway>, config: PipelineConfig) -> Self {
        Pipeline {
            gateway,
            config,
            classifier: None,
            nli_model: None,
            external_verdicts: None,
        }
    }

    pub fn with_ablation(&self, ablation: AblationConfig) -> Self {
        let mut p = self.clone();
        p.config.ablation = ablation;
        p
    }

    fn aligner(&self) -> Aligner {
        Aligner {
            gateway: self.gateway.clone(),
            classifier: self.classifier.clone(),
            thresholds: self.config.thresholds,
            relevance_check: self.config.relevance_check,
        }
    }

    fn retriever(&self) -> CheRetriever {
        CheRetriever {
            gateway: self.gateway.clone(),
            nli_model: self.nli_model.clone(),
            params: self.config.che,
        }
    }

    fn base_verdict(&self, record: &ClaimRecord) -> StageResult<BaseVerdict> {
        match &self.external_verdicts {
            Some(ext) => ext.get(&record.id),
            None => cot_verify(&self.gateway, Some(&record.id), &record.claim, &record.evidence),
        }
    }

    /// Run every enabled stage. Failures are recorded in the report; a
    /// failure after the base verdict leaves the base label in place.
    pub fn run(&self, record: &ClaimRecord) -> VerdictReport {
        let cfg = &self.config;
        let id = Some(record.id.as_str());
        let mut report = VerdictReport::new(record, cfg.ablation);

        if cfg.ablation.intent {
            report.aligned_evidence =
                self.aligner()
                    .align_evidence(id, &record.claim, &record.ruling, &record.evidence);
            let failed = report.aligned_evidence.iter().filter(|a| a.error.is_some()).count();
            if failed == 0 {
                report.ok(Stage::Alignment);
            } else {
                let detail = format!("{failed} of {} sentences failed", report.aligned_evidence.len());
                report.note(Stage::Alignment, StageStatus::Failed, Some(detail));
            }
        }

        match self.base_verdict(record) {
            Ok(base) => {
                report.base_verdict = Some(base);
                report.ok(Stage::BaseVerdict);
            }
            Err(e) => {
                report.fail(Stage::BaseVerdict, &e);
                return report;
            }
        }

        if !cfg.ablation.intent {
            report.downgrade();
            return report;
        }
        if cfg.reassess_only_true && report.base_verdict.as_ref().map(|b| b.label) != Some(Label::True) {
            report.note(
                Stage::Reassessment,
                StageStatus::Skipped,
                Some("base verdict is not True".into()),
            );
            report.downgrade();
            return report;
        }
        if let Err((stage, e)) = self.omission_stages(record, &mut report) {
            report.fail(stage, &e);
            report.downgrade();
        }
        report
    }

    fn omission_stages(&self, record: &ClaimRecord, report: &mut VerdictReport) -> Result<(), (Stage, StageError)> {
        let cfg = &self.config;
        let id = Some(record.id.as_str());
        let at = |stage: Stage| move |e: StageError| (stage, e);
        let hidden: Vec<String> = report
            .aligned_evidence
            .iter()
            .filter(|a| a.is_hidden())
            .map(|a| a.sentence.clone())
            .collect();

        let intent = generate_intent(
            &self.gateway,
            id,
            &record.claim,
            &record.evidence,
            &cfg.exemplars.intent_generation,
        )
        .map_err(at(Stage::Intent))?;
        let assessment = assess_intent(&self.gateway, id, &record.claim, intent);
        let accepted = assessment.accepted;
        let intent_text = assessment.intent.text.clone();
        report.intent = Some(assessment);
        if !accepted {
            return Err((Stage::Intent, StageError::IntentUnavailable));
        }
        report.ok(Stage::Intent);

        let retriever = self.retriever();
        let (graph, che) = if !cfg.ablation.assumptions {
            let che = retriever
                .collect_for_queries(id, &[intent_text.as_str()], &hidden)
                .map_err(at(Stage::CheRetrieval))?;
            (CausalArgument::intent_only(&record.claim, &intent_text), che)
        } else {
            let questions = generate_implicit_questions(
                &self.gateway,
                id,
                &record.claim,
                &intent_text,
                &hidden,
                &cfg.exemplars.implicit_questions,
            )
            .map_err(at(Stage::ImplicitQuestions))?;
            report.implicit_questions = questions.questions.clone();
            report.note(
                Stage::ImplicitQuestions,
                StageStatus::Ok,
                questions.truncated_from.map(|n| format!("truncated from {n}")),
            );

            let assumptions = infer_assumptions(
                &self.gateway,
                id,
                &record.claim,
                &intent_text,
                &questions.questions,
                cfg.max_assumptions,
                &cfg.vague_references,
                &cfg.exemplars.assumptions,
            )
            .map_err(at(Stage::Assumptions))?;
            let vague = assumptions.assumptions.iter().filter(|a| a.vague_reference).count();
            let mut notes = Vec::new();
            if let Some(n) = assumptions.truncated_from {
                notes.push(format!("truncated from {n}"));
            }
            if vague > 0 {
                notes.push(format!("{vague} with vague references"));
            }
            let graph = build_causal_graph(&record.claim, &intent_text, assumptions.assumptions, cfg.max_assumptions)
                .map_err(at(Stage::Assumptions))?;
            report.note(
                Stage::Assumptions,
                StageStatus::Ok,
                (!notes.is_empty()).then(|| notes.join("; ")),
            );
            report.causal_argument = Some(graph.clone());

            let (graph, critical) = if cfg.ablation.causality {
                let evaluated = evaluate_all(&self.gateway, id, &graph).map_err(at(Stage::Counterfactual))?;
                report.causal_argument = Some(evaluated.clone());
                let critical = select_critical_assumptions(&evaluated).map_err(at(Stage::Counterfactual))?;
                report.ok(Stage::Counterfactual);
                (evaluated, critical)
            } else {
                let all = graph.assumptions.clone();
                (graph, all)
            };
            report.critical_assumptions = critical.iter().map(|a| a.text.clone()).collect();
            let che = retriever
                .collect_che(id, &critical, &hidden)
                .map_err(at(Stage::CheRetrieval))?;
            (graph, che)
        };
        report.che = che;
        report.ok(Stage::CheRetrieval);

        let base = report.base_verdict.clone().expect("base verdict present");
        let verdict = reassess(&self.gateway, id, &base, &report.che, &graph).map_err(at(Stage::Reassessment))?;
        if report.che.is_empty() {
            report.note(Stage::Reassessment, StageStatus::Skipped, Some("no critical hidden evidence".into()));
        } else {
            report.note(Stage::Reassessment, StageStatus::Ok, verdict.fallback_reason.clone());
        }
        report.final_verdict = Some(verdict);
        Ok(())
    }

    /// Process records concurrently on a pool of `concurrency` threads.
    /// Output order matches input order.
    pub fn run_corpus(&self, records: &[ClaimRecord], concurrency: usize) -> Vec<VerdictReport> {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(concurrency.max(1))
            .build()
            .expect("thread pool");
        pool.install(|| records.par_iter().map(|r| self.run(r)).collect())
    }
}

pub fn write_reports<W: std::io::Write>(reports: &[VerdictReport], mut writer: W) -> std::io::Result<()> {
    for r in reports {
        writeln!(writer, "{}", r.to_json_line())?;
    }
    writer.flush()
}

pub fn read_reports<R: std::io::BufRead>(reader: R) -> Result<Vec<VerdictReport>, crate::corpus::CorpusError> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| crate::corpus::CorpusError::Parse {
            line: i + 1,
            message: e.to_string(),
        })?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gateway::{ids, MockBackend, MockRule, MockScript};
    use crate::verdict::VerdictSource;

    fn record() -> ClaimRecord {
        let mut r = ClaimRecord::new("c1", "Unemployment fell to a record low.");
        r.evidence = vec!["Unemployment fell to 3.5 percent.".into(), "Most new jobs were part-time.".into()];
        r
    }

    fn quality_ok(script: MockScript) -> MockScript {
        script
            .rule(MockRule::template(ids::QUALITY_PLAUSIBILITY).respond("1"))
            .rule(MockRule::template(ids::QUALITY_IMPLICITY).respond("1"))
            .rule(MockRule::template(ids::QUALITY_SUFFICIENCY).respond("1"))
            .rule(MockRule::template(ids::QUALITY_READABILITY).respond("1"))
    }

    fn setup(script: MockScript, ablation: AblationConfig) -> (Arc<MockBackend>, Pipeline) {
        let mock = Arc::new(MockBackend::new(script));
        let gw = Arc::new(Gateway::new(mock.clone()));
        let config = PipelineConfig {
            ablation,
            thresholds: RefinementThresholds::disabled(),
            ..PipelineConfig::default()
        };
        (mock, Pipeline::new(gw, config))
    }

    fn base_script() -> MockScript {
        MockScript::new()
            .rule(MockRule::template(ids::COT_VERIFY).respond("Official data agree.\nAnswer: A"))
            .rule(MockRule::template(ids::PRESENTATION).contains("3.5").respond("A"))
            .rule(MockRule::template(ids::PRESENTATION).respond("B"))
            .rule(MockRule::template(ids::INTENT_GENERATION).respond("<The economy is strong>"))
    }

    #[test]
    fn cfg1_is_base_only() {
        let (mock, p) = setup(base_script(), AblationConfig::CFG1);
        let r = p.run(&record());
        assert_eq!(r.predicted(), Some(Label::True));
        assert!(!r.final_verdict.as_ref().unwrap().reassessed);
        assert_eq!(mock.total_completion_calls(), 1);
        assert_eq!(mock.completion_calls(ids::COT_VERIFY), 1);
        assert!(r.aligned_evidence.is_empty());
    }

    #[test]
    fn rejected_intent_passes_base_through() {
        let script = base_script().rule(MockRule::template(ids::QUALITY_PLAUSIBILITY).respond("0"));
        let script = quality_ok(script);
        let (mock, p) = setup(script, AblationConfig::CFG4);
        let r = p.run(&record());
        assert_eq!(r.predicted(), Some(Label::True));
        let d = r.diagnostic(Stage::Intent).unwrap();
        assert_eq!(d.status, StageStatus::Failed);
        assert!(d.detail.as_ref().unwrap().contains("quality filter"));
        assert!(!r.intent.as_ref().unwrap().accepted);
        assert_eq!(mock.completion_calls(ids::IMPLICIT_QUESTIONS), 0);
        assert_eq!(mock.completion_calls(ids::REASSESSMENT), 0);
    }

    #[test]
    fn base_failure_leaves_no_verdict() {
        let script = MockScript::new().rule(MockRule::template(ids::COT_VERIFY).respond("no idea"));
        let (_, p) = setup(script, AblationConfig::CFG1);
        let r = p.run(&record());
        assert!(r.base_verdict.is_none());
        assert!(r.final_verdict.is_none());
        assert_eq!(r.diagnostic(Stage::BaseVerdict).unwrap().status, StageStatus::Failed);
    }

    #[test]
    fn external_verdicts_skip_cot() {
        let (mock, mut p) = setup(base_script(), AblationConfig::CFG1);
        let mut ext = ExternalVerdicts::default();
        ext.insert(
            "c1",
            BaseVerdict {
                label: Label::False,
                justification: "j".into(),
                source: VerdictSource::External,
            },
        );
        p.external_verdicts = Some(Arc::new(ext));
        let r = p.run(&record());
        assert_eq!(r.predicted(), Some(Label::False));
        assert_eq!(mock.total_completion_calls(), 0);
    }

    #[test]
    fn only_true_restriction() {
        let script = MockScript::new().rule(MockRule::template(ids::COT_VERIFY).respond("Wrong.\nAnswer: C"));
        let (mock, mut p) = setup(quality_ok(script), AblationConfig::CFG4);
        p.config.reassess_only_true = true;
        let r = p.run(&record());
        assert_eq!(r.predicted(), Some(Label::False));
        assert_eq!(r.diagnostic(Stage::Reassessment).unwrap().status, StageStatus::Skipped);
        assert_eq!(mock.completion_calls(ids::INTENT_GENERATION), 0);
    }

    #[test]
    fn report_round_trips() {
        let (_, p) = setup(quality_ok(base_script()), AblationConfig::CFG2);
        let reports = p.run_corpus(&[record()], 2);
        let mut buf = Vec::new();
        write_reports(&reports, &mut buf).unwrap();
        let back = read_reports(buf.as_slice()).unwrap();
        assert_eq!(back, reports);
        assert_eq!(back[0].schema, REPORT_SCHEMA);
    }
}
