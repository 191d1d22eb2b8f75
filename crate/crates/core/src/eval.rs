//! Metrics over the three consolidated labels and the ablation configurations.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{ClaimRecord, Label};
use crate::gateway::GatewayStats;
use crate::pipeline::{Pipeline, VerdictReport};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EvalError {
    #[error("gold has {gold} labels but predictions have {pred}")]
    LengthMismatch { gold: usize, pred: usize },
    #[error("nothing to score")]
    EmptyInput,
    #[error("no prediction for claim {0:?}")]
    MissingPrediction(String),
    #[error("invalid ablation config: {0}")]
    InvalidAblation(String),
}

/// Counts indexed by `(gold, predicted)`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub counts: [[u64; 3]; 3],
}

impl ConfusionMatrix {
    pub fn add(&mut self, gold: Label, pred: Label) {
        self.counts[gold.index()][pred.index()] += 1;
    }

    pub fn get(&self, gold: Label, pred: Label) -> u64 {
        self.counts[gold.index()][pred.index()]
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn trace(&self) -> u64 {
        (0..3).map(|i| self.counts[i][i]).sum()
    }
}

pub fn confusion_matrix(gold: &[Label], pred: &[Label]) -> Result<ConfusionMatrix, EvalError> {
    if gold.len() != pred.len() {
        return Err(EvalError::LengthMismatch {
            gold: gold.len(),
            pred: pred.len(),
        });
    }
    if gold.is_empty() {
        return Err(EvalError::EmptyInput);
    }
    let mut m = ConfusionMatrix::default();
    for (g, p) in gold.iter().zip(pred) {
        m.add(*g, *p);
    }
    Ok(m)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

fn ratio(num: f64, den: f64) -> f64 {
    if den == 0.0 {
        0.0
    } else {
        num / den
    }
}

/// Precision, recall and F1 for one class; zero denominators give 0.
pub fn per_class_prf(m: &ConfusionMatrix, class: Label) -> ClassMetrics {
    let c = class.index();
    let tp = m.counts[c][c] as f64;
    let predicted: u64 = (0..3).map(|g| m.counts[g][c]).sum();
    let actual: u64 = m.counts[c].iter().sum();
    let precision = ratio(tp, predicted as f64);
    let recall = ratio(tp, actual as f64);
    ClassMetrics {
        precision,
        recall,
        f1: ratio(2.0 * precision * recall, precision + recall),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub n: u64,
    pub accuracy: f64,
    pub per_class: BTreeMap<Label, ClassMetrics>,
    pub macro_f1: f64,
    pub f1_half_true: f64,
    pub confusion: ConfusionMatrix,
}

pub fn summarize(m: &ConfusionMatrix) -> MetricsReport {
    let per_class: BTreeMap<Label, ClassMetrics> = Label::ALL.iter().map(|&l| (l, per_class_prf(m, l))).collect();
    let macro_f1 = per_class.values().map(|c| c.f1).sum::<f64>() / Label::ALL.len() as f64;
    MetricsReport {
        n: m.total(),
        accuracy: ratio(m.trace() as f64, m.total() as f64),
        f1_half_true: per_class[&Label::HalfTrue].f1,
        per_class,
        macro_f1,
        confusion: *m,
    }
}

/// Score predictions against gold by claim id. Every gold id must be predicted.
pub fn score_by_id(
    gold: &BTreeMap<String, Label>,
    pred: &BTreeMap<String, Label>,
) -> Result<MetricsReport, EvalError> {
    if gold.keys().all(|id| !pred.contains_key(id)) {
        return Err(EvalError::EmptyInput);
    }
    let mut m = ConfusionMatrix::default();
    for (id, g) in gold {
        let p = pred.get(id).ok_or_else(|| EvalError::MissingPrediction(id.clone()))?;
        m.add(*g, *p);
    }
    Ok(summarize(&m))
}

fn pct(x: f64) -> String {
    format!("{:.1}", x * 100.0)
}

/// Aligned plain-text table, one row per named report, values in percent.
pub fn format_table(rows: &[(String, &MetricsReport)]) -> String {
    let header = ["Config", "N", "Acc", "Macro-F1", "P(H)", "R(H)", "F1(H)", "F1(T)", "F1(F)"];
    let mut cells: Vec<Vec<String>> = vec![header.iter().map(|s| s.to_string()).collect()];
    for (name, r) in rows {
        let h = r.per_class[&Label::HalfTrue];
        cells.push(vec![
            name.clone(),
            r.n.to_string(),
            pct(r.accuracy),
            pct(r.macro_f1),
            pct(h.precision),
            pct(h.recall),
            pct(r.f1_half_true),
            pct(r.per_class[&Label::True].f1),
            pct(r.per_class[&Label::False].f1),
        ]);
    }
    let widths: Vec<usize> = (0..header.len())
        .map(|c| cells.iter().map(|row| row[c].chars().count()).max().unwrap_or(0))
        .collect();
    let mut out = String::new();
    for (i, row) in cells.iter().enumerate() {
        let line: Vec<String> = row
            .iter()
            .enumerate()
            .map(|(c, v)| {
                if c == 0 {
                    format!("{:<w$}", v, w = widths[c])
                } else {
                    format!("{:>w$}", v, w = widths[c])
                }
            })
            .collect();
        out.push_str(line.join("  ").trim_end());
        out.push('\n');
        if i == 0 {
            let rule: usize = widths.iter().sum::<usize>() + 2 * (widths.len() - 1);
            out.push_str(&"-".repeat(rule));
            out.push('\n');
        }
    }
    out
}

impl fmt::Display for MetricsReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&format_table(&[("all".to_string(), self)]))
    }
}

/// Which stages after the base verdict are switched on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct AblationConfig {
    pub intent: bool,
    pub assumptions: bool,
    pub causality: bool,
}

impl AblationConfig {
    pub const CFG1: AblationConfig = AblationConfig {
        intent: false,
        assumptions: false,
        causality: false,
    };
    pub const CFG2: AblationConfig = AblationConfig {
        intent: true,
        assumptions: false,
        causality: false,
    };
    pub const CFG3: AblationConfig = AblationConfig {
        intent: true,
        assumptions: true,
        causality: false,
    };
    pub const CFG4: AblationConfig = AblationConfig {
        intent: true,
        assumptions: true,
        causality: true,
    };
    pub const ALL: [AblationConfig; 4] = [Self::CFG1, Self::CFG2, Self::CFG3, Self::CFG4];

    pub fn full() -> Self {
        Self::CFG4
    }

    pub fn validate(&self) -> Result<(), EvalError> {
        if self.assumptions && !self.intent {
            return Err(EvalError::InvalidAblation("assumptions require intent".into()));
        }
        if self.causality && !self.assumptions {
            return Err(EvalError::InvalidAblation("causality requires assumptions".into()));
        }
        Ok(())
    }

    pub fn name(&self) -> String {
        match Self::ALL.iter().position(|c| c == self) {
            Some(i) => format!("cfg{}", i + 1),
            None => format!(
                "intent={},assumptions={},causality={}",
                self.intent, self.assumptions, self.causality
            ),
        }
    }
}

impl Default for AblationConfig {
    fn default() -> Self {
        Self::full()
    }
}

impl fmt::Display for AblationConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

impl FromStr for AblationConfig {
    type Err = EvalError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "cfg1" | "1" | "base" => Ok(Self::CFG1),
            "cfg2" | "2" => Ok(Self::CFG2),
            "cfg3" | "3" => Ok(Self::CFG3),
            "cfg4" | "4" | "full" => Ok(Self::CFG4),
            other => Err(EvalError::InvalidAblation(format!("unknown config {other:?}"))),
        }
    }
}

/// Parse a comma-separated list such as `cfg1,cfg3`, dropping duplicates.
pub fn parse_ablation_list(s: &str) -> Result<Vec<AblationConfig>, EvalError> {
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for part in s.split(',').filter(|p| !p.trim().is_empty()) {
        let cfg: AblationConfig = part.parse()?;
        if seen.insert(cfg.name()) {
            out.push(cfg);
        }
    }
    if out.is_empty() {
        return Err(EvalError::EmptyInput);
    }
    Ok(out)
}

/// Gold labels and predictions from a batch of reports.
pub fn score_reports(reports: &[VerdictReport]) -> Result<MetricsReport, EvalError> {
    let gold = reports
        .iter()
        .filter_map(|r| r.gold_label.map(|g| (r.id.clone(), g)))
        .collect();
    let pred = reports
        .iter()
        .filter_map(|r| r.predicted().map(|p| (r.id.clone(), p)))
        .collect();
    score_by_id(&gold, &pred)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationRun {
    pub config: AblationConfig,
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub metrics: Option<MetricsReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub metrics_error: Option<String>,
    /// Gateway traffic attributable to this configuration.
    pub calls: GatewayStats,
    #[serde(skip)]
    pub reports: Vec<VerdictReport>,
}

/// Run each configuration in turn over the same records.
pub fn run_ablation(
    pipeline: &Pipeline,
    records: &[ClaimRecord],
    configs: &[AblationConfig],
    concurrency: usize,
) -> Result<Vec<AblationRun>, EvalError> {
    for c in configs {
        c.validate()?;
    }
    let mut runs = Vec::with_capacity(configs.len());
    for &config in configs {
        let before = pipeline.gateway.stats();
        let reports = pipeline.with_ablation(config).run_corpus(records, concurrency);
        let calls = pipeline.gateway.stats().since(&before);
        let (metrics, metrics_error) = match score_reports(&reports) {
            Ok(m) => (Some(m), None),
            Err(e) => (None, Some(e.to_string())),
        };
        runs.push(AblationRun {
            config,
            name: config.name(),
            metrics,
            metrics_error,
            calls,
            reports,
        });
    }
    Ok(runs)
}

/// Table over the runs that could be scored.
pub fn ablation_table(runs: &[AblationRun]) -> String {
    let rows: Vec<(String, &MetricsReport)> = runs
        .iter()
        .filter_map(|r| r.metrics.as_ref().map(|m| (r.name.clone(), m)))
        .collect();
    format_table(&rows)
}
