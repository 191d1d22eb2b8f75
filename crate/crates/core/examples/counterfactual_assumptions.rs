//! Implicit questions, assumptions, and the counterfactual test that keeps
//! only assumptions whose negation weakens the intent.

use std::sync::Arc;

use tracer::causality::{
    build_causal_graph, evaluate_all, generate_implicit_questions, infer_assumptions, select_critical_assumptions,
    DEFAULT_MAX_ASSUMPTIONS, DEFAULT_VAGUE_REFERENCES,
};
use tracer::fixtures::{unemployment_record, unemployment_script, UNEMPLOYMENT_INTENT};
use tracer::gateway::{Gateway, MockBackend};

fn main() {
    let record = unemployment_record();
    let id = Some(record.id.as_str());
    let hidden = &record.evidence[1..];
    let gateway = Gateway::new(Arc::new(MockBackend::new(unemployment_script())));

    let questions =
        generate_implicit_questions(&gateway, id, &record.claim, UNEMPLOYMENT_INTENT, hidden, "").unwrap();
    for q in &questions.questions {
        println!("Q: {}", q.0);
    }
    let assumptions = infer_assumptions(
        &gateway,
        id,
        &record.claim,
        UNEMPLOYMENT_INTENT,
        &questions.questions,
        DEFAULT_MAX_ASSUMPTIONS,
        &DEFAULT_VAGUE_REFERENCES,
        "",
    )
    .unwrap();
    let graph =
        build_causal_graph(&record.claim, UNEMPLOYMENT_INTENT, assumptions.assumptions, DEFAULT_MAX_ASSUMPTIONS)
            .unwrap();
    println!("\n{}\n", graph.to_argument_json());

    let graph = evaluate_all(&gateway, id, &graph).unwrap();
    for a in &graph.assumptions {
        println!("{:?}  {}", a.causal_effect, a.text);
    }
    let critical = select_critical_assumptions(&graph).unwrap();
    println!("\n{} critical assumptions", critical.len());
}
