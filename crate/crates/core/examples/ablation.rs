//! Compare the four stage configurations on the shipped scenario.

use std::sync::Arc;

use tracer::eval::{ablation_table, run_ablation, AblationConfig};
use tracer::fixtures::{scenario_config, unemployment_record, unemployment_script};
use tracer::gateway::{Gateway, MockBackend};
use tracer::pipeline::Pipeline;

fn main() {
    let gateway = Arc::new(Gateway::new(Arc::new(MockBackend::new(unemployment_script()))));
    let pipeline = Pipeline::new(gateway, scenario_config());
    let runs = run_ablation(&pipeline, &[unemployment_record()], &AblationConfig::ALL, 1).unwrap();
    print!("{}", ablation_table(&runs));
    for r in &runs {
        let calls: Vec<String> = r.calls.requests.iter().map(|(k, v)| format!("{k}={v}")).collect();
        println!("{}: {}", r.name, calls.join(" "));
    }
}
