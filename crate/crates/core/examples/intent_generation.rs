//! Generate the claim's implied message and run the four quality checks.

use std::sync::Arc;

use tracer::fixtures::{unemployment_record, unemployment_script};
use tracer::gateway::{Gateway, MockBackend};
use tracer::intent::{assess_intent, generate_intent};

fn main() {
    let record = unemployment_record();
    let gateway = Gateway::new(Arc::new(MockBackend::new(unemployment_script())));
    let intent = generate_intent(&gateway, Some(&record.id), &record.claim, &record.evidence, "").unwrap();
    println!("intent: {}", intent.text);
    if let Some(r) = &intent.rationale {
        println!("rationale: {r}");
    }
    let assessment = assess_intent(&gateway, Some(&record.id), &record.claim, intent);
    println!("{:#?}", assessment.scores);
    println!("accepted: {}", assessment.accepted);
}
