//! Fact-checking corpora: rating consolidation, article segmentation,
//! temporal splitting and the line-delimited record format.

use std::collections::HashSet;
use std::fmt;
use std::io::{BufRead, Write};
use std::path::Path;
use std::str::FromStr;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Consolidated three-way veracity label.
///
/// Variant order is the report order: `True < HalfTrue < False`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Label {
    #[serde(rename = "True")]
    True,
    #[serde(rename = "Half-True")]
    HalfTrue,
    #[serde(rename = "False")]
    False,
}

impl Label {
    pub const ALL: [Label; 3] = [Label::True, Label::HalfTrue, Label::False];

    pub fn index(self) -> usize {
        match self {
            Label::True => 0,
            Label::HalfTrue => 1,
            Label::False => 2,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Label::True => "True",
            Label::HalfTrue => "Half-True",
            Label::False => "False",
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Label {
    type Err = CorpusError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match normalize_text(s).replace('-', " ").as_str() {
            "true" => Ok(Label::True),
            "half true" | "halftrue" => Ok(Label::HalfTrue),
            "false" => Ok(Label::False),
            _ => Err(CorpusError::UnknownLabel(s.to_string())),
        }
    }
}

/// The six original publisher ratings.
pub const RATINGS: [&str; 6] = [
    "True",
    "Mostly True",
    "Half True",
    "Mostly False",
    "False",
    "Pants on Fire",
];

/// Original six-level rating, kept verbatim so records re-emit unchanged.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RawRating(pub String);

impl RawRating {
    pub fn new(value: impl Into<String>) -> Self {
        RawRating(value.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("unknown rating {0:?}")]
    UnknownRating(String),
    #[error("unknown label {0:?}")]
    UnknownLabel(String),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("record {id:?}: {message}")]
    Validation { id: String, message: String },
    #[error("no test record carries a date")]
    EmptyTestDates,
    #[error("unknown split {0:?}")]
    UnknownSplit(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Lowercase, trim, and collapse inner whitespace runs to a single space.
fn normalize_text(s: &str) -> String {
    s.split_whitespace()
        .map(str::to_lowercase)
        .collect::<Vec<_>>()
        .join(" ")
}

/// Map a publisher rating onto the consolidated label.
pub fn consolidate_label(rating: &RawRating) -> Result<Label, CorpusError> {
    match normalize_text(rating.as_str()).as_str() {
        "true" => Ok(Label::True),
        "mostly true" | "half true" => Ok(Label::HalfTrue),
        "mostly false" | "false" | "pants on fire" => Ok(Label::False),
        _ => Err(CorpusError::UnknownRating(rating.0.clone())),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Dev,
    Test,
}

impl FromStr for Split {
    type Err = CorpusError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_lowercase().as_str() {
            "train" => Ok(Split::Train),
            "dev" => Ok(Split::Dev),
            "test" => Ok(Split::Test),
            _ => Err(CorpusError::UnknownSplit(s.to_string())),
        }
    }
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Split::Train => "train",
            Split::Dev => "dev",
            Split::Test => "test",
        })
    }
}

/// One fact-checked claim with its evidence and ruling paragraphs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClaimRecord {
    pub id: String,
    pub claim: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub date: Option<NaiveDate>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub raw_rating: Option<RawRating>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gold_label: Option<Label>,
    #[serde(default)]
    pub evidence: Vec<String>,
    #[serde(default)]
    pub ruling: Vec<String>,
}

impl ClaimRecord {
    pub fn new(id: impl Into<String>, claim: impl Into<String>) -> Self {
        ClaimRecord {
            id: id.into(),
            claim: claim.into(),
            date: None,
            raw_rating: None,
            gold_label: None,
            evidence: Vec::new(),
            ruling: Vec::new(),
        }
    }

    /// The gold label, falling back to the consolidated raw rating.
    pub fn label(&self) -> Option<Label> {
        self.gold_label.or_else(|| {
            self.raw_rating
                .as_ref()
                .and_then(|r| consolidate_label(r).ok())
        })
    }

    pub fn validate(&self) -> Result<(), CorpusError> {
        let fail = |message: String| CorpusError::Validation {
            id: self.id.clone(),
            message,
        };
        if self.id.trim().is_empty() {
            return Err(fail("empty id".into()));
        }
        if self.claim.trim().is_empty() {
            return Err(fail("empty claim".into()));
        }
        if let Some(raw) = &self.raw_rating {
            let consolidated = consolidate_label(raw).map_err(|e| fail(e.to_string()))?;
            if let Some(gold) = self.gold_label {
                if gold != consolidated {
                    return Err(fail(format!(
                        "gold label {gold} disagrees with rating {:?} ({consolidated})",
                        raw.as_str()
                    )));
                }
            }
        }
        let evidence: HashSet<&str> = self.evidence.iter().map(String::as_str).collect();
        if let Some(shared) = self.ruling.iter().find(|p| evidence.contains(p.as_str())) {
            return Err(fail(format!(
                "paragraph appears in both evidence and ruling: {shared:?}"
            )));
        }
        Ok(())
    }
}

/// Per-label tallies. Records with no label land in `unlabeled`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelCounts {
    pub true_count: usize,
    pub half_true: usize,
    pub false_count: usize,
    pub unlabeled: usize,
}

impl LabelCounts {
    pub fn get(&self, label: Label) -> usize {
        match label {
            Label::True => self.true_count,
            Label::HalfTrue => self.half_true,
            Label::False => self.false_count,
        }
    }

    pub fn total(&self) -> usize {
        self.true_count + self.half_true + self.false_count + self.unlabeled
    }
}

impl fmt::Display for LabelCounts {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "True={} HalfTrue={} False={}",
            self.true_count, self.half_true, self.false_count
        )?;
        if self.unlabeled > 0 {
            write!(f, " Unlabeled={}", self.unlabeled)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Corpus {
    pub split: Split,
    pub records: Vec<ClaimRecord>,
}

impl Corpus {
    /// Build a corpus, enforcing per-record invariants and id uniqueness.
    pub fn new(split: Split, records: Vec<ClaimRecord>) -> Result<Self, CorpusError> {
        let mut seen = HashSet::new();
        for record in &records {
            record.validate()?;
            if !seen.insert(record.id.as_str()) {
                return Err(CorpusError::Validation {
                    id: record.id.clone(),
                    message: "duplicate id".into(),
                });
            }
        }
        Ok(Corpus { split, records })
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn counts(&self) -> LabelCounts {
        let mut counts = LabelCounts::default();
        for record in &self.records {
            match record.label() {
                Some(Label::True) => counts.true_count += 1,
                Some(Label::HalfTrue) => counts.half_true += 1,
                Some(Label::False) => counts.false_count += 1,
                None => counts.unlabeled += 1,
            }
        }
        counts
    }

    pub fn get(&self, id: &str) -> Option<&ClaimRecord> {
        self.records.iter().find(|r| r.id == id)
    }
}

/// Default ruling-section markers.
pub const DEFAULT_RULING_CUES: [&str; 2] = ["our ruling", "our rating"];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ArticleSplit {
    pub evidence: Vec<String>,
    pub ruling: Vec<String>,
    /// False when no paragraph matched a cue; everything is then evidence.
    pub cue_found: bool,
}

/// Split article paragraphs at the first paragraph that opens with a ruling cue.
pub fn split_article<S: AsRef<str>>(paragraphs: &[String], cues: &[S]) -> ArticleSplit {
    let cues: Vec<String> = cues.iter().map(|c| normalize_text(c.as_ref())).collect();
    let start = paragraphs.iter().position(|p| {
        let normalized = normalize_text(p);
        cues.iter().any(|cue| !cue.is_empty() && normalized.starts_with(cue.as_str()))
    });
    match start {
        Some(at) => ArticleSplit {
            evidence: paragraphs[..at].to_vec(),
            ruling: paragraphs[at..].to_vec(),
            cue_found: true,
        },
        None => ArticleSplit {
            evidence: paragraphs.to_vec(),
            ruling: Vec::new(),
            cue_found: false,
        },
    }
}

/// Unsegmented article input: a claim with its raw paragraphs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArticleRecord {
    pub id: String,
    pub claim: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub date: Option<NaiveDate>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub raw_rating: Option<RawRating>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gold_label: Option<Label>,
    pub paragraphs: Vec<String>,
}

impl ArticleRecord {
    /// Segment into a claim record; the flag reports whether a ruling cue was found.
    pub fn into_record<S: AsRef<str>>(self, cues: &[S]) -> (ClaimRecord, bool) {
        let split = split_article(&self.paragraphs, cues);
        let gold_label = self.gold_label.or_else(|| {
            self.raw_rating
                .as_ref()
                .and_then(|r| consolidate_label(r).ok())
        });
        (
            ClaimRecord {
                id: self.id,
                claim: self.claim,
                date: self.date,
                raw_rating: self.raw_rating,
                gold_label,
                evidence: split.evidence,
                ruling: split.ruling,
            },
            split.cue_found,
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TemporalFilterReport {
    pub removed: usize,
    /// Undated training records, kept because overlap cannot be decided.
    pub undated_retained: usize,
    pub test_range: (NaiveDate, NaiveDate),
}

/// Drop training records dated inside the closed test date range.
pub fn temporal_filter(
    train: &Corpus,
    test: &Corpus,
) -> Result<(Corpus, TemporalFilterReport), CorpusError> {
    let mut dates = test.records.iter().filter_map(|r| r.date);
    let first = dates.next().ok_or(CorpusError::EmptyTestDates)?;
    let (lo, hi) = dates.fold((first, first), |(lo, hi), d| (lo.min(d), hi.max(d)));

    let mut removed = 0;
    let mut undated_retained = 0;
    let records = train
        .records
        .iter()
        .filter(|r| match r.date {
            Some(d) if d >= lo && d <= hi => {
                removed += 1;
                false
            }
            Some(_) => true,
            None => {
                undated_retained += 1;
                true
            }
        })
        .cloned()
        .collect();
    Ok((
        Corpus {
            split: train.split,
            records,
        },
        TemporalFilterReport {
            removed,
            undated_retained,
            test_range: (lo, hi),
        },
    ))
}

fn parse_lines<T, R>(reader: R) -> Result<Vec<T>, CorpusError>
where
    T: serde::de::DeserializeOwned,
    R: BufRead,
{
    let mut out = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let value = serde_json::from_str(&line).map_err(|e| CorpusError::Parse {
            line: idx + 1,
            message: e.to_string(),
        })?;
        out.push(value);
    }
    Ok(out)
}

pub fn read_corpus<R: BufRead>(reader: R, split: Split) -> Result<Corpus, CorpusError> {
    Corpus::new(split, parse_lines(reader)?)
}

/// Load and validate a line-delimited corpus file.
pub fn load_corpus(path: impl AsRef<Path>, split: Split) -> Result<Corpus, CorpusError> {
    let file = std::fs::File::open(path)?;
    let corpus = read_corpus(std::io::BufReader::new(file), split)?;
    log::info!("loaded {} {} records: {}", corpus.len(), split, corpus.counts());
    Ok(corpus)
}

/// Load raw articles and segment them. Returns the ids whose article had no ruling cue.
pub fn load_articles<S: AsRef<str>>(
    path: impl AsRef<Path>,
    split: Split,
    cues: &[S],
) -> Result<(Corpus, Vec<String>), CorpusError> {
    let file = std::fs::File::open(path)?;
    let articles: Vec<ArticleRecord> = parse_lines(std::io::BufReader::new(file))?;
    let mut missing_cue = Vec::new();
    let records = articles
        .into_iter()
        .map(|a| {
            let (record, found) = a.into_record(cues);
            if !found {
                missing_cue.push(record.id.clone());
            }
            record
        })
        .collect();
    Ok((Corpus::new(split, records)?, missing_cue))
}

pub fn write_corpus<W: Write>(corpus: &Corpus, mut writer: W) -> Result<(), CorpusError> {
    for record in &corpus.records {
        serde_json::to_writer(&mut writer, record).map_err(std::io::Error::from)?;
        writer.write_all(b"\n")?;
    }
    writer.flush()?;
    Ok(())
}

pub fn save_corpus(corpus: &Corpus, path: impl AsRef<Path>) -> Result<(), CorpusError> {
    let file = std::fs::File::create(path)?;
    write_corpus(corpus, std::io::BufWriter::new(file))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn date(y: i32, m: u32, d: u32) -> NaiveDate {
        NaiveDate::from_ymd_opt(y, m, d).unwrap()
    }

    fn dated(id: &str, d: Option<NaiveDate>) -> ClaimRecord {
        let mut r = ClaimRecord::new(id, format!("claim {id}"));
        r.date = d;
        r
    }

    fn paras(items: &[&str]) -> Vec<String> {
        items.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn consolidates_all_six_ratings() {
        let expected = [
            Label::True,
            Label::HalfTrue,
            Label::HalfTrue,
            Label::False,
            Label::False,
            Label::False,
        ];
        for (rating, want) in RATINGS.iter().zip(expected) {
            assert_eq!(consolidate_label(&RawRating::new(*rating)).unwrap(), want);
        }
    }

    #[test]
    fn rating_normalization() {
        let got = consolidate_label(&RawRating::new("pants on fire")).unwrap();
        assert_eq!(got, Label::False);
        let got = consolidate_label(&RawRating::new("  Mostly \t TRUE ")).unwrap();
        assert_eq!(got, Label::HalfTrue);
        assert!(matches!(
            consolidate_label(&RawRating::new("Barely Whatever")),
            Err(CorpusError::UnknownRating(_))
        ));
        assert!(consolidate_label(&RawRating::new("")).is_err());
    }

    #[test]
    fn label_ordering_and_parse() {
        assert!(Label::True < Label::HalfTrue && Label::HalfTrue < Label::False);
        assert_eq!("half-true".parse::<Label>().unwrap(), Label::HalfTrue);
        assert_eq!("Half-True".parse::<Label>().unwrap(), Label::HalfTrue);
        assert!("mostly".parse::<Label>().is_err());
    }

    #[test]
    fn split_article_cases() {
        let s = split_article(&paras(&["A.", "Our Ruling", "B."]), &DEFAULT_RULING_CUES);
        assert_eq!(s.evidence, paras(&["A."]));
        assert_eq!(s.ruling, paras(&["Our Ruling", "B."]));
        assert!(s.cue_found);

        let s = split_article(&paras(&["Our ruling", "B."]), &DEFAULT_RULING_CUES);
        assert!(s.evidence.is_empty());
        assert_eq!(s.ruling, paras(&["Our ruling", "B."]));

        let s = split_article(&paras(&["A.", "B."]), &DEFAULT_RULING_CUES);
        assert_eq!(s.evidence, paras(&["A.", "B."]));
        assert!(s.ruling.is_empty());
        assert!(!s.cue_found);

        let s = split_article(&paras(&["A.", "OUR  RATING: Half True"]), &DEFAULT_RULING_CUES);
        assert_eq!(s.ruling.len(), 1);
        let s = split_article(&paras(&["A.", "Verdict", "B."]), &["verdict"]);
        assert_eq!(s.evidence, paras(&["A."]));
    }

    #[test]
    fn temporal_filter_interval() {
        let train = Corpus::new(
            Split::Train,
            vec![
                dated("a", Some(date(2018, 6, 1))),
                dated("b", Some(date(2021, 3, 1))),
            ],
        )
        .unwrap();
        let test = Corpus::new(
            Split::Test,
            vec![
                dated("t1", Some(date(2020, 1, 1))),
                dated("t2", Some(date(2025, 12, 31))),
                dated("t3", None),
            ],
        )
        .unwrap();
        let (out, report) = temporal_filter(&train, &test).unwrap();
        assert_eq!(out.records.len(), 1);
        assert_eq!(out.records[0].id, "a");
        assert_eq!(report.removed, 1);
        assert_eq!(report.test_range, (date(2020, 1, 1), date(2025, 12, 31)));
    }

    #[test]
    fn temporal_filter_closed_bounds_and_undated() {
        let train = Corpus::new(
            Split::Train,
            vec![
                dated("edge", Some(date(2020, 1, 1))),
                dated("undated", None),
                dated("before", Some(date(2019, 12, 31))),
            ],
        )
        .unwrap();
        let test = Corpus::new(Split::Test, vec![dated("t", Some(date(2020, 1, 1)))]).unwrap();
        let (out, report) = temporal_filter(&train, &test).unwrap();
        let ids: Vec<_> = out.records.iter().map(|r| r.id.as_str()).collect();
        assert_eq!(ids, ["undated", "before"]);
        assert_eq!(report.undated_retained, 1);

        let undated_only =
            Corpus::new(Split::Train, vec![dated("x", None), dated("y", None)]).unwrap();
        let (out, report) = temporal_filter(&undated_only, &test).unwrap();
        assert_eq!(out, undated_only);
        assert_eq!(report.undated_retained, 2);
    }

    #[test]
    fn temporal_filter_requires_test_dates() {
        let train = Corpus::new(Split::Train, vec![]).unwrap();
        let test = Corpus::new(Split::Test, vec![dated("t", None)]).unwrap();
        assert!(matches!(
            temporal_filter(&train, &test),
            Err(CorpusError::EmptyTestDates)
        ));
    }

    #[test]
    fn disjoint_ranges_are_identity() {
        let train = Corpus::new(Split::Train, vec![dated("a", Some(date(2010, 1, 1)))]).unwrap();
        let test = Corpus::new(Split::Test, vec![dated("t", Some(date(2022, 1, 1)))]).unwrap();
        let (out, _) = temporal_filter(&train, &test).unwrap();
        assert_eq!(out, train);
    }

    #[test]
    fn duplicate_id_names_the_record() {
        let err = Corpus::new(Split::Dev, vec![dated("dup", None), dated("dup", None)]).unwrap_err();
        match err {
            CorpusError::Validation { id, .. } => assert_eq!(id, "dup"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn gold_must_match_rating() {
        let mut r = ClaimRecord::new("x", "c");
        r.raw_rating = Some(RawRating::new("Mostly True"));
        r.gold_label = Some(Label::True);
        assert!(r.validate().is_err());
        r.gold_label = Some(Label::HalfTrue);
        assert!(r.validate().is_ok());
    }

    #[test]
    fn parse_error_reports_line() {
        let input = "{\"id\":\"a\",\"claim\":\"c\"}\n\n{not json\n";
        match read_corpus(input.as_bytes(), Split::Test) {
            Err(CorpusError::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn empty_input_is_empty_corpus() {
        let corpus = read_corpus("".as_bytes(), Split::Test).unwrap();
        assert!(corpus.is_empty());
        assert_eq!(corpus.counts(), LabelCounts::default());
    }
}
