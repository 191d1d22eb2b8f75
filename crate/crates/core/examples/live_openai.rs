//! Run the scenario against an OpenAI-compatible endpoint.
//! Needs TRACER_API_KEY; TRACER_BASE_URL and TRACER_MODEL are optional.

use std::sync::Arc;
use std::time::Duration;

use tracer::config::RunConfig;
use tracer::fixtures::unemployment_record;
use tracer::gateway::{Gateway, OpenAiBackend, ResponseCache, TemplateCatalog, API_KEY_ENV};
use tracer::pipeline::Pipeline;

fn main() {
    let mut config = RunConfig::default();
    if let Ok(url) = std::env::var("TRACER_BASE_URL") {
        config.backend.base_url = url;
    }
    if let Ok(model) = std::env::var("TRACER_MODEL") {
        config.backend.model_id = model;
    }
    let Some(backend) = OpenAiBackend::from_env(&config.backend.base_url, Duration::from_secs(60)) else {
        eprintln!("{API_KEY_ENV} is not set; skipping");
        return;
    };
    let gateway = Gateway::with_parts(
        Arc::new(backend),
        Arc::new(ResponseCache::in_memory()),
        TemplateCatalog::builtin(),
        config.gateway_config(),
    );
    let pipeline = Pipeline::new(Arc::new(gateway), config.pipeline_config().unwrap());
    let report = pipeline.run(&unemployment_record());
    println!("{}", serde_json::to_string_pretty(&report).unwrap());
}
