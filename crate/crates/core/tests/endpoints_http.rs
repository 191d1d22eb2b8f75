use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;
use std::thread;
use std::time::Duration;

use tiny_http::{Header, Response, Server};
use tracer::che::NliVerdict;
use tracer::corpus::Label;
use tracer::endpoints::{ClassifierLabel, EndpointError, EvidenceClassifier, HttpClassifier, HttpNli, NliModel};
use tracer::fixtures::{scenario_config, unemployment_record, unemployment_script};
use tracer::gateway::{ids, Gateway, MockBackend};
use tracer::pipeline::Pipeline;

/// Serve `handler(body) -> (status, json)` on an ephemeral port; returns the base URL and a hit counter.
fn serve(handler: fn(&serde_json::Value) -> (u16, String)) -> (String, Arc<AtomicUsize>) {
    let server = Server::http("127.0.0.1:0").unwrap();
    let url = format!("http://{}/", server.server_addr().to_ip().unwrap());
    let hits = Arc::new(AtomicUsize::new(0));
    let counter = hits.clone();
    thread::spawn(move || {
        for mut req in server.incoming_requests() {
            counter.fetch_add(1, Ordering::SeqCst);
            let mut body = String::new();
            req.as_reader().read_to_string(&mut body).unwrap();
            let value = serde_json::from_str(&body).unwrap_or(serde_json::Value::Null);
            let (code, text) = handler(&value);
            let header = Header::from_bytes("Content-Type", "application/json").unwrap();
            let _ = req.respond(Response::from_string(text).with_status_code(code).with_header(header));
        }
    });
    (url, hits)
}

fn classifier_handler(v: &serde_json::Value) -> (u16, String) {
    let sentence = v["sentence"].as_str().unwrap_or_default();
    let label = if sentence.contains("3.5%") { "presented" } else { "hidden" };
    (200, format!(r#"{{"label":"{label}","confidence":0.9}}"#))
}

fn nli_handler(v: &serde_json::Value) -> (u16, String) {
    let premise = v["premise"].as_str().unwrap_or_default();
    let label = if premise.contains("part-time") || premise.contains("participation") {
        "contradiction"
    } else {
        "neutral"
    };
    (200, format!(r#"{{"label":"{label}"}}"#))
}

fn timeout() -> Duration {
    Duration::from_secs(5)
}

#[test]
fn http_classifier_round_trip() {
    let (url, hits) = serve(classifier_handler);
    let c = HttpClassifier::new(url, timeout());
    assert_eq!(c.classify("claim", "rate fell to 3.5%").unwrap().label, ClassifierLabel::Presented);
    let out = c.classify("claim", "other").unwrap();
    assert_eq!(out.label, ClassifierLabel::Hidden);
    assert_eq!(out.confidence, Some(0.9));
    assert_eq!(hits.load(Ordering::SeqCst), 2);
}

#[test]
fn http_nli_accepts_long_label_names() {
    let (url, _) = serve(nli_handler);
    let n = HttpNli::new(url, timeout());
    assert_eq!(n.infer("mostly part-time jobs", "h").unwrap().label, NliVerdict::Contradict);
    assert_eq!(n.infer("hotels hired", "h").unwrap().label, NliVerdict::Neutral);
}

#[test]
fn server_errors_surface_as_status() {
    let (url, _) = serve(|_| (503, "overloaded".to_string()));
    let err = HttpNli::new(url, timeout()).infer("p", "h").unwrap_err();
    assert_eq!(err, EndpointError::Status { code: 503, body: "overloaded".into() });
}

#[test]
fn malformed_body_is_protocol_error() {
    let (url, _) = serve(|_| (200, r#"{"label":"perhaps"}"#.to_string()));
    let err = HttpClassifier::new(url, timeout()).classify("c", "s").unwrap_err();
    assert!(matches!(err, EndpointError::Protocol(_)), "{err:?}");
}

#[test]
fn pipeline_uses_endpoints_instead_of_prompts() {
    let (classifier_url, classifier_hits) = serve(classifier_handler);
    let (nli_url, nli_hits) = serve(nli_handler);
    let mock = Arc::new(MockBackend::new(unemployment_script()));
    let mut pipeline = Pipeline::new(Arc::new(Gateway::new(mock.clone())), scenario_config());
    pipeline.classifier = Some(Arc::new(HttpClassifier::new(classifier_url, timeout())));
    pipeline.nli_model = Some(Arc::new(HttpNli::new(nli_url, timeout())));

    let report = pipeline.run(&unemployment_record());
    assert_eq!(report.predicted(), Some(Label::HalfTrue));
    assert_eq!(report.che.len(), 2);
    assert!(report.che.iter().all(|c| c.nli == NliVerdict::Contradict));
    assert_eq!(mock.completion_calls(ids::PRESENTATION), 0);
    assert_eq!(mock.completion_calls(ids::NLI), 0);
    assert_eq!(classifier_hits.load(Ordering::SeqCst), 4);
    assert!(nli_hits.load(Ordering::SeqCst) >= 2);
}
