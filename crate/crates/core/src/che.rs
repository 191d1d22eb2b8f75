//! Critical hidden evidence: hidden sentences that support or contradict a
//! critical assumption, found by cosine ranking followed by an NLI gate.

use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::alignment::cosine_similarity;
use crate::causality::Assumption;
use crate::endpoints::NliModel;
use crate::error::StageResult;
use crate::gateway::{bindings, ids, parse_letter_choice, Gateway};

pub const DEFAULT_TOP_K: usize = 5;
pub const DEFAULT_TAU_CHE: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NliVerdict {
    #[serde(alias = "entailment")]
    Entail,
    #[serde(alias = "contradiction")]
    Contradict,
    Neutral,
}

impl NliVerdict {
    pub fn from_letter(letter: char) -> Option<Self> {
        match letter.to_ascii_uppercase() {
            'A' => Some(NliVerdict::Entail),
            'B' => Some(NliVerdict::Contradict),
            'C' => Some(NliVerdict::Neutral),
            _ => None,
        }
    }

    /// Entailment and contradiction both make a sentence relevant evidence.
    pub fn admits(self) -> bool {
        self != NliVerdict::Neutral
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheCandidate {
    pub sentence: String,
    /// The query text with the highest similarity to this sentence.
    pub assumption: String,
    pub similarity: f64,
    pub nli: NliVerdict,
    pub selected: bool,
    /// Every query that selected this sentence, in first-seen order.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub linked_assumptions: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CheParams {
    pub k: usize,
    pub tau: f64,
}

impl Default for CheParams {
    fn default() -> Self {
        CheParams {
            k: DEFAULT_TOP_K,
            tau: DEFAULT_TAU_CHE,
        }
    }
}

/// Retrieval over one claim's hidden-evidence pool.
#[derive(Clone)]
pub struct CheRetriever {
    pub gateway: Arc<Gateway>,
    pub nli_model: Option<Arc<dyn NliModel>>,
    pub params: CheParams,
}

impl CheRetriever {
    pub fn new(gateway: Arc<Gateway>) -> Self {
        CheRetriever {
            gateway,
            nli_model: None,
            params: CheParams::default(),
        }
    }

    pub fn with_nli_model(mut self, model: Arc<dyn NliModel>) -> Self {
        self.nli_model = Some(model);
        self
    }

    pub fn with_params(mut self, params: CheParams) -> Self {
        self.params = params;
        self
    }

    pub fn nli_check(&self, claim_id: Option<&str>, premise: &str, hypothesis: &str) -> StageResult<NliVerdict> {
        if let Some(model) = &self.nli_model {
            return Ok(model.infer(premise, hypothesis)?.label);
        }
        let text = self.gateway.prompt(
            ids::NLI,
            bindings([("premise", premise), ("hypothesis", hypothesis)]),
            claim_id,
        )?;
        let letter = parse_letter_choice(&text, &['A', 'B', 'C'])?;
        Ok(NliVerdict::from_letter(letter).expect("letter restricted to A-C"))
    }

    /// Pool sentences ordered by similarity to `query`, highest first; ties keep pool order.
    pub fn rank(&self, query: &str, pool: &[String]) -> StageResult<Vec<(String, f64)>> {
        let q = self.gateway.embed(query)?;
        let mut scored = pool
            .par_iter()
            .map(|s| {
                let e = self.gateway.embed(s)?;
                Ok((s.clone(), cosine_similarity(&q, &e)?))
            })
            .collect::<StageResult<Vec<_>>>()?;
        scored.sort_by(|a, b| b.1.total_cmp(&a.1));
        Ok(scored)
    }

    /// NLI-checked candidates among the `k` best sentences at or above `tau`.
    pub fn retrieve_che(&self, claim_id: Option<&str>, query: &str, pool: &[String]) -> StageResult<Vec<CheCandidate>> {
        if pool.is_empty() {
            return Ok(Vec::new());
        }
        let shortlist: Vec<(String, f64)> = self
            .rank(query, pool)?
            .into_iter()
            .filter(|(_, s)| *s >= self.params.tau)
            .take(self.params.k)
            .collect();
        shortlist
            .into_par_iter()
            .map(|(sentence, similarity)| {
                let nli = self.nli_check(claim_id, &sentence, query)?;
                Ok(CheCandidate {
                    assumption: query.to_string(),
                    linked_assumptions: vec![query.to_string()],
                    selected: nli.admits(),
                    sentence,
                    similarity,
                    nli,
                })
            })
            .collect()
    }

    /// Selected evidence across every critical assumption, deduplicated by sentence.
    pub fn collect_che(
        &self,
        claim_id: Option<&str>,
        critical: &[Assumption],
        pool: &[String],
    ) -> StageResult<Vec<CheCandidate>> {
        let queries: Vec<&str> = critical.iter().map(|a| a.text.as_str()).collect();
        self.collect_for_queries(claim_id, &queries, pool)
    }

    pub fn collect_for_queries(
        &self,
        claim_id: Option<&str>,
        queries: &[&str],
        pool: &[String],
    ) -> StageResult<Vec<CheCandidate>> {
        let mut all = Vec::new();
        for q in queries {
            all.extend(self.retrieve_che(claim_id, q, pool)?);
        }
        Ok(dedup_candidates(all))
    }
}

/// Keep selected candidates once per sentence, linked to the most similar query.
pub fn dedup_candidates(candidates: Vec<CheCandidate>) -> Vec<CheCandidate> {
    let mut out: Vec<CheCandidate> = Vec::new();
    for c in candidates.into_iter().filter(|c| c.selected) {
        match out.iter_mut().find(|o| o.sentence == c.sentence) {
            Some(existing) => {
                for link in &c.linked_assumptions {
                    if !existing.linked_assumptions.contains(link) {
                        existing.linked_assumptions.push(link.clone());
                    }
                }
                if c.similarity > existing.similarity {
                    existing.similarity = c.similarity;
                    existing.assumption = c.assumption;
                    existing.nli = c.nli;
                }
            }
            None => out.push(c),
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::endpoints::{EndpointError, NliOutput};
    use crate::gateway::{MockBackend, MockRule, MockScript};
    use proptest::prelude::*;

    fn unit(angle: f64) -> Vec<f64> {
        vec![angle.cos(), angle.sin()]
    }

    /// A vector whose cosine with `[1, 0]` is exactly `s`.
    fn at_similarity(s: f64) -> Vec<f64> {
        vec![s, (1.0 - s * s).sqrt()]
    }

    fn setup(script: MockScript, params: CheParams) -> (Arc<MockBackend>, CheRetriever) {
        let mock = Arc::new(MockBackend::new(script));
        let gw = Arc::new(Gateway::new(mock.clone()));
        (mock, CheRetriever::new(gw).with_params(params))
    }

    fn pool(items: &[&str]) -> Vec<String> {
        items.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn nli_letters() {
        let (_, r) = setup(
            MockScript::new()
                .rule(MockRule::template(ids::NLI).contains("p1").respond("B"))
                .rule(MockRule::template(ids::NLI).contains("p2").respond("C"))
                .rule(MockRule::template(ids::NLI).contains("p3").respond("A."))
                .rule(MockRule::template(ids::NLI).respond("maybe")),
            CheParams::default(),
        );
        assert_eq!(r.nli_check(None, "p1", "h").unwrap(), NliVerdict::Contradict);
        assert_eq!(r.nli_check(None, "p2", "h").unwrap(), NliVerdict::Neutral);
        assert_eq!(r.nli_check(None, "p3", "h").unwrap(), NliVerdict::Entail);
        assert!(r.nli_check(None, "p4", "h").is_err());
    }

    struct FixedNli(NliVerdict);
    impl NliModel for FixedNli {
        fn infer(&self, _: &str, _: &str) -> Result<NliOutput, EndpointError> {
            Ok(NliOutput {
                label: self.0,
                confidence: None,
            })
        }
    }

    #[test]
    fn endpoint_mode_skips_gateway_completions() {
        let (mock, r) = setup(MockScript::new(), CheParams::default());
        let r = r.with_nli_model(Arc::new(FixedNli(NliVerdict::Entail)));
        assert_eq!(r.nli_check(None, "p", "h").unwrap(), NliVerdict::Entail);
        assert_eq!(mock.total_completion_calls(), 0);
    }

    #[test]
    fn empty_pool_is_empty() {
        let (mock, r) = setup(MockScript::new(), CheParams::default());
        assert!(r.retrieve_che(None, "a", &[]).unwrap().is_empty());
        assert!(mock.call_log().is_empty());
    }

    #[test]
    fn ranking_then_gate_selects_first_only() {
        let (mock, r) = setup(
            MockScript::new()
                .embedding("assumption", vec![1.0, 0.0])
                .embedding("close", at_similarity(0.9))
                .embedding("far", at_similarity(0.2))
                .rule(MockRule::template(ids::NLI).contains("close").respond("B"))
                .rule(MockRule::template(ids::NLI).respond("A")),
            CheParams { k: 5, tau: 0.5 },
        );
        let got = r.retrieve_che(None, "assumption", &pool(&["far", "close"])).unwrap();
        assert_eq!(got.len(), 1);
        assert_eq!(got[0].sentence, "close");
        assert!((got[0].similarity - 0.9).abs() < 1e-12);
        assert_eq!(got[0].nli, NliVerdict::Contradict);
        assert!(got[0].selected);
        assert_eq!(mock.completion_calls(ids::NLI), 1);
    }

    #[test]
    fn all_neutral_selects_nothing() {
        let (_, r) = setup(
            MockScript::new()
                .embedding("q", vec![1.0, 0.0])
                .embedding("s1", at_similarity(0.95))
                .embedding("s2", at_similarity(0.9))
                .rule(MockRule::template(ids::NLI).respond("C")),
            CheParams::default(),
        );
        let got = r.retrieve_che(None, "q", &pool(&["s1", "s2"])).unwrap();
        assert_eq!(got.len(), 2);
        assert!(got.iter().all(|c| !c.selected));
        assert!(r.collect_for_queries(None, &["q"], &pool(&["s1", "s2"])).unwrap().is_empty());
    }

    #[test]
    fn top_k_limits_nli_calls() {
        let mut script = MockScript::new().embedding("q", vec![1.0, 0.0]);
        let names: Vec<String> = (0..8).map(|i| format!("s{i}")).collect();
        for (i, n) in names.iter().enumerate() {
            script = script.embedding(n.clone(), at_similarity(0.99 - i as f64 * 0.01));
        }
        let (mock, r) = setup(
            script.rule(MockRule::template(ids::NLI).respond("A")),
            CheParams { k: 3, tau: 0.5 },
        );
        let got = r.retrieve_che(None, "q", &names).unwrap();
        let sentences: Vec<_> = got.iter().map(|c| c.sentence.as_str()).collect();
        assert_eq!(sentences, ["s0", "s1", "s2"]);
        assert_eq!(mock.completion_calls(ids::NLI), 3);
    }

    #[test]
    fn shared_sentence_deduplicated_with_best_link() {
        let (_, r) = setup(
            MockScript::new()
                .embedding("a1", unit(0.0))
                .embedding("a2", unit(0.3))
                .embedding("shared", unit(0.2))
                .rule(MockRule::template(ids::NLI).respond("B")),
            CheParams::default(),
        );
        let critical = vec![Assumption::new("a1"), Assumption::new("a2")];
        let got = r.collect_che(None, &critical, &pool(&["shared"])).unwrap();
        assert_eq!(got.len(), 1);
        assert_eq!(got[0].assumption, "a2");
        assert_eq!(got[0].linked_assumptions, ["a1", "a2"]);
        assert!(r.collect_che(None, &[], &pool(&["shared"])).unwrap().is_empty());
    }

    #[test]
    fn nli_aliases() {
        let v: NliVerdict = serde_json::from_str("\"entailment\"").unwrap();
        assert_eq!(v, NliVerdict::Entail);
        let v: NliVerdict = serde_json::from_str("\"contradiction\"").unwrap();
        assert_eq!(v, NliVerdict::Contradict);
        assert_eq!(serde_json::to_string(&NliVerdict::Neutral).unwrap(), "\"neutral\"");
    }

    proptest! {
        #[test]
        fn dedup_is_idempotent(items in prop::collection::vec((0usize..4, 0usize..3, 0.0f64..1.0, any::<bool>()), 0..12)) {
            let cands: Vec<CheCandidate> = items
                .into_iter()
                .map(|(s, a, sim, sel)| CheCandidate {
                    sentence: format!("s{s}"),
                    assumption: format!("a{a}"),
                    similarity: sim,
                    nli: if sel { NliVerdict::Entail } else { NliVerdict::Neutral },
                    selected: sel,
                    linked_assumptions: vec![format!("a{a}")],
                })
                .collect();
            let once = dedup_candidates(cands);
            prop_assert_eq!(dedup_candidates(once.clone()), once.clone());
            let mut seen = std::collections::HashSet::new();
            prop_assert!(once.iter().all(|c| c.selected && seen.insert(c.sentence.clone())));
        }
    }
}
