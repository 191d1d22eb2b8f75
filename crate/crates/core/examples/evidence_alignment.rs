//! Label each evidence sentence as presented in or hidden from the claim.

use std::sync::Arc;

use tracer::alignment::Aligner;
use tracer::fixtures::{unemployment_record, unemployment_script};
use tracer::gateway::{Gateway, MockBackend};

fn main() {
    let record = unemployment_record();
    let gateway = Arc::new(Gateway::new(Arc::new(MockBackend::new(unemployment_script()))));
    let aligner = Aligner::new(gateway);
    println!("claim: {}\n", record.claim);
    for a in aligner.align_evidence(Some(&record.id), &record.claim, &record.ruling, &record.evidence) {
        let label = a.label.map(|l| format!("{l:?}")).unwrap_or_else(|| "failed".into());
        println!("{label:<10} sim={:.3}  {}", a.similarity.unwrap_or(f64::NAN), a.sentence);
    }
}
