//! The full pipeline on the shipped scenario, offline.

use tracer::fixtures::{unemployment_dir, ScenarioFixture};

fn main() {
    let fixture = ScenarioFixture::load(unemployment_dir()).expect("shipped fixture");
    let report = fixture.run();
    if let Some(base) = &report.base_verdict {
        println!("base:  {} ({})", base.label, base.justification);
    }
    for c in &report.che {
        println!("CHE:   {}", c.sentence);
    }
    if let Some(f) = &report.final_verdict {
        println!("final: {} (reassessed={})", f.label, f.reassessed);
    }
    for d in &report.diagnostics {
        println!("{:?}: {:?}", d.stage, d.status);
    }
    println!("\n{}", serde_json::to_string_pretty(&report).unwrap());
}
