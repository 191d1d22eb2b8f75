//! Retrieve hidden evidence that bears on each critical assumption.

use std::sync::Arc;

use tracer::causality::Assumption;
use tracer::che::CheRetriever;
use tracer::fixtures::{unemployment_record, unemployment_script, UNEMPLOYMENT_ASSUMPTIONS};
use tracer::gateway::{Gateway, MockBackend};

fn main() {
    let record = unemployment_record();
    let hidden = record.evidence[1..].to_vec();
    let gateway = Arc::new(Gateway::new(Arc::new(MockBackend::new(unemployment_script()))));
    let retriever = CheRetriever::new(gateway);

    for text in &UNEMPLOYMENT_ASSUMPTIONS[..2] {
        println!("assumption: {text}");
        for c in retriever.retrieve_che(Some(&record.id), text, &hidden).unwrap() {
            println!("  {:.3} {:?} selected={}  {}", c.similarity, c.nli, c.selected, c.sentence);
        }
    }

    let critical: Vec<Assumption> = UNEMPLOYMENT_ASSUMPTIONS[..2].iter().map(|t| Assumption::new(*t)).collect();
    let che = retriever.collect_che(Some(&record.id), &critical, &hidden).unwrap();
    println!("\nCHE:");
    for c in che {
        println!("  {}", c.sentence);
    }
}
