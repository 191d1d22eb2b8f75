//! Command-line interface: `ingest`, `run`, `eval`, `ablate`, `cache-stats`, `cache-clear`.
//!
//! Exit codes: 0 success, 1 usage or configuration error, 2 data error.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::{ConfigError, RunConfig};
use crate::corpus::{load_articles, load_corpus, save_corpus, temporal_filter, CorpusError, Split, DEFAULT_RULING_CUES};
use crate::endpoints::{HttpClassifier, HttpNli};
use crate::eval::{ablation_table, format_table, parse_ablation_list, run_ablation, score_by_id, EvalError};
use crate::gateway::{Backend, CacheError, Gateway, GatewayStats, MockBackend, MockScript, OpenAiBackend, ResponseCache, TemplateCatalog};
use crate::pipeline::{read_reports, write_reports, Pipeline};
use crate::verdict::ExternalVerdicts;

pub const MANIFEST_SCHEMA: &str = "tracer.run_manifest/v1";

#[derive(Debug, Parser)]
#[command(name = "tracer", version, about = "Detect half-truths by re-assessing fact-check verdicts against hidden evidence")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Validate a corpus file, print label counts and optionally re-emit it.
    Ingest(IngestArgs),
    /// Run the pipeline over a corpus and write one report per claim.
    Run(RunArgs),
    /// Score a report file against gold labels.
    Eval(EvalArgs),
    /// Run several ablation configurations over the same corpus.
    Ablate(AblateArgs),
    /// Print response cache counts.
    CacheStats(CacheArgs),
    /// Empty the response cache.
    CacheClear(CacheArgs),
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    /// Corpus file (one JSON record per line).
    pub input: PathBuf,
    /// Write the validated corpus here.
    #[arg(long)]
    pub output: Option<PathBuf>,
    #[arg(long, default_value = "test")]
    pub split: Split,
    /// Input holds raw articles (`id`, `claim`, `paragraphs`, ...) to be segmented.
    #[arg(long)]
    pub articles: bool,
    /// Ruling cue phrase for article segmentation; repeatable.
    #[arg(long = "cue")]
    pub cues: Vec<String>,
    /// Drop records dated within this test corpus's date range.
    #[arg(long)]
    pub exclude_dates_of: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PipelineArgs {
    /// Corpus file to process.
    #[arg(long)]
    pub corpus: PathBuf,
    /// TOML configuration; flags override its values.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Serve every model call from this mock script instead of a live backend.
    #[arg(long)]
    pub mock: Option<PathBuf>,
    /// Persistent response cache (JSONL).
    #[arg(long)]
    pub cache: Option<PathBuf>,
    /// Maximum requests in flight.
    #[arg(long)]
    pub concurrency: Option<usize>,
    /// Presented sentences below this similarity become hidden.
    #[arg(long)]
    pub tau_low: Option<f64>,
    /// Hidden sentences at or above this similarity become presented.
    #[arg(long)]
    pub tau_high: Option<f64>,
    /// Minimum similarity for a hidden sentence to be considered evidence.
    #[arg(long)]
    pub tau_che: Option<f64>,
    /// Hidden sentences checked per assumption.
    #[arg(long)]
    pub top_k: Option<usize>,
    /// Upper bound on inferred assumptions.
    #[arg(long)]
    pub max_assumptions: Option<usize>,
    /// Disable similarity refinement of alignment labels.
    #[arg(long)]
    pub no_refinement: bool,
    /// Skip the relevance filter during alignment.
    #[arg(long)]
    pub no_relevance_check: bool,
    /// Only re-assess claims whose base verdict is True.
    #[arg(long)]
    pub reassess_only_true: bool,
    /// Base verdicts from another verifier (JSONL of id, label, justification).
    #[arg(long)]
    pub external_verdicts: Option<PathBuf>,
    /// Directory of `<template_id>.txt` overrides.
    #[arg(long)]
    pub templates: Option<PathBuf>,
    /// Directory of few-shot example files.
    #[arg(long)]
    pub exemplars: Option<PathBuf>,
    /// NLI endpoint used instead of the entailment prompt.
    #[arg(long)]
    pub nli_url: Option<String>,
    /// Evidence classifier endpoint used instead of the presentation prompt.
    #[arg(long)]
    pub classifier_url: Option<String>,
    /// OpenAI-compatible API base URL.
    #[arg(long)]
    pub base_url: Option<String>,
    /// Chat model id.
    #[arg(long)]
    pub model: Option<String>,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[command(flatten)]
    pub pipeline: PipelineArgs,
    /// cfg1 (base only) to cfg4 (full pipeline).
    #[arg(long)]
    pub ablation: Option<String>,
    /// Report file to write.
    #[arg(long)]
    pub output: PathBuf,
    /// Run manifest path; defaults to `<output>.manifest.json`.
    #[arg(long)]
    pub manifest: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Report file produced by `run`.
    #[arg(long)]
    pub reports: PathBuf,
    /// Corpus file carrying gold labels.
    #[arg(long)]
    pub gold: PathBuf,
    /// Write the metrics as JSON here.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct AblateArgs {
    #[command(flatten)]
    pub pipeline: PipelineArgs,
    /// Comma-separated configurations.
    #[arg(long, default_value = "cfg1,cfg2,cfg3,cfg4")]
    pub configs: String,
    /// Write per-configuration metrics and call counts as JSON here.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CacheArgs {
    #[arg(long)]
    pub cache: PathBuf,
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Config(String),
    #[error("{0}")]
    Data(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Config(_) => 1,
            CliError::Data(_) => 2,
        }
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Config(e.to_string())
    }
}

impl From<CorpusError> for CliError {
    fn from(e: CorpusError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<EvalError> for CliError {
    fn from(e: EvalError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<CacheError> for CliError {
    fn from(e: CacheError) -> Self {
        CliError::Data(e.to_string())
    }
}

fn io_error(path: &Path, e: std::io::Error) -> CliError {
    CliError::Data(format!("{}: {e}", path.display()))
}

/// Written next to the report file by `run`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub schema: String,
    pub ablation: String,
    pub records: usize,
    pub output: PathBuf,
    pub output_sha256: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mock: Option<PathBuf>,
    pub config: RunConfig,
    pub stats: GatewayStats,
}

pub fn sha256_file(path: &Path) -> Result<String, CliError> {
    let bytes = std::fs::read(path).map_err(|e| io_error(path, e))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

fn resolve_config(args: &PipelineArgs, ablation: Option<&str>) -> Result<RunConfig, CliError> {
    let mut c = match &args.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    let t = &mut c.thresholds;
    if let Some(v) = args.tau_low {
        t.tau_low = v;
    }
    if let Some(v) = args.tau_high {
        t.tau_high = v;
    }
    if let Some(v) = args.tau_che {
        t.tau_che = v;
    }
    if let Some(v) = args.top_k {
        t.top_k = v;
    }
    if let Some(v) = args.max_assumptions {
        t.assumption_max_number = v;
    }
    if let Some(v) = args.concurrency {
        c.backend.concurrency = v;
    }
    if let Some(v) = &args.base_url {
        c.backend.base_url = v.clone();
    }
    if let Some(v) = &args.model {
        c.backend.model_id = v.clone();
    }
    if args.nli_url.is_some() {
        c.backend.nli_url = args.nli_url.clone();
    }
    if args.classifier_url.is_some() {
        c.backend.classifier_url = args.classifier_url.clone();
    }
    if args.no_refinement {
        c.stages.refinement = false;
    }
    if args.no_relevance_check {
        c.stages.relevance_check = false;
    }
    if args.reassess_only_true {
        c.stages.reassess_only_true = true;
    }
    if let Some(a) = ablation {
        c.stages.ablation = a.to_string();
    }
    if args.cache.is_some() {
        c.paths.cache = args.cache.clone();
    }
    if args.templates.is_some() {
        c.paths.templates = args.templates.clone();
    }
    if args.exemplars.is_some() {
        c.paths.exemplars = args.exemplars.clone();
    }
    if args.external_verdicts.is_some() {
        c.paths.external_verdicts = args.external_verdicts.clone();
    }
    c.validate()?;
    Ok(c)
}

/// Build the pipeline. In live mode the API key must be present before anything else happens.
fn build_pipeline(config: &RunConfig, mock: Option<&Path>) -> Result<Pipeline, CliError> {
    let backend: Arc<dyn Backend> = match mock {
        Some(path) => {
            let script = MockScript::load(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
            Arc::new(MockBackend::new(script))
        }
        None => {
            let key = std::env::var(&config.backend.api_key_env)
                .ok()
                .filter(|k| !k.trim().is_empty())
                .ok_or_else(|| {
                    CliError::Config(format!(
                        "{} is not set; export it or pass --mock for an offline run",
                        config.backend.api_key_env
                    ))
                })?;
            Arc::new(OpenAiBackend::new(&config.backend.base_url, key, config.timeout()))
        }
    };
    let cache = match &config.paths.cache {
        Some(p) => ResponseCache::open(p)?,
        None => ResponseCache::in_memory(),
    };
    let templates = match &config.paths.templates {
        Some(dir) => TemplateCatalog::load_dir(dir).map_err(|e| CliError::Config(e.to_string()))?,
        None => TemplateCatalog::builtin(),
    };
    let gateway = Arc::new(Gateway::with_parts(backend, Arc::new(cache), templates, config.gateway_config()));
    let mut pipeline = Pipeline::new(gateway, config.pipeline_config()?);
    if let Some(url) = &config.backend.nli_url {
        pipeline.nli_model = Some(Arc::new(HttpNli::new(url, config.timeout())));
    }
    if let Some(url) = &config.backend.classifier_url {
        pipeline.classifier = Some(Arc::new(HttpClassifier::new(url, config.timeout())));
    }
    if let Some(path) = &config.paths.external_verdicts {
        pipeline.external_verdicts = Some(Arc::new(ExternalVerdicts::load(path)?));
    }
    Ok(pipeline)
}

fn cmd_ingest(args: &IngestArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let mut corpus = if args.articles {
        let cues: Vec<String> = if args.cues.is_empty() {
            DEFAULT_RULING_CUES.iter().map(|s| s.to_string()).collect()
        } else {
            args.cues.clone()
        };
        let (corpus, missing) = load_articles(&args.input, args.split, &cues)?;
        if !missing.is_empty() {
            writeln!(out, "no ruling cue in {} articles: {}", missing.len(), missing.join(", ")).ok();
        }
        corpus
    } else {
        load_corpus(&args.input, args.split)?
    };
    if let Some(test_path) = &args.exclude_dates_of {
        let test = load_corpus(test_path, Split::Test)?;
        let (filtered, report) = temporal_filter(&corpus, &test)?;
        writeln!(
            out,
            "temporal filter: removed {} records dated {}..={}; kept {} undated",
            report.removed, report.test_range.0, report.test_range.1, report.undated_retained
        )
        .ok();
        corpus = filtered;
    }
    writeln!(out, "{}", corpus.counts()).ok();
    if let Some(path) = &args.output {
        save_corpus(&corpus, path)?;
    }
    Ok(())
}

fn cmd_run(args: &RunArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let config = resolve_config(&args.pipeline, args.ablation.as_deref())?;
    let pipeline = build_pipeline(&config, args.pipeline.mock.as_deref())?;
    let corpus = load_corpus(&args.pipeline.corpus, Split::Test)?;

    let before = pipeline.gateway.stats();
    let reports = pipeline.run_corpus(&corpus.records, config.backend.concurrency);
    let stats = pipeline.gateway.stats().since(&before);

    let file = std::fs::File::create(&args.output).map_err(|e| io_error(&args.output, e))?;
    write_reports(&reports, std::io::BufWriter::new(file)).map_err(|e| io_error(&args.output, e))?;

    for r in &reports {
        let show = |l: Option<crate::corpus::Label>| l.map_or("-".to_string(), |l| l.to_string());
        writeln!(
            out,
            "{}\tbase={}\tfinal={}\tche={}",
            r.id,
            show(r.base_verdict.as_ref().map(|b| b.label)),
            show(r.predicted()),
            r.che.len()
        )
        .ok();
    }
    if reports.iter().any(|r| r.gold_label.is_some()) {
        match crate::eval::score_reports(&reports) {
            Ok(m) => {
                write!(out, "{}", format_table(&[(config.stages.ablation.clone(), &m)])).ok();
            }
            Err(e) => {
                writeln!(out, "metrics unavailable: {e}").ok();
            }
        }
    }

    let manifest = RunManifest {
        schema: MANIFEST_SCHEMA.to_string(),
        ablation: config.stages.ablation.clone(),
        records: reports.len(),
        output: args.output.clone(),
        output_sha256: sha256_file(&args.output)?,
        mock: args.pipeline.mock.clone(),
        config,
        stats,
    };
    let manifest_path = args.manifest.clone().unwrap_or_else(|| {
        let mut p = args.output.clone().into_os_string();
        p.push(".manifest.json");
        PathBuf::from(p)
    });
    let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    std::fs::write(&manifest_path, text + "\n").map_err(|e| io_error(&manifest_path, e))?;
    writeln!(
        out,
        "wrote {} reports to {} (sha256 {}); backend calls: {}",
        manifest.records,
        args.output.display(),
        manifest.output_sha256,
        manifest.stats.backend_calls()
    )
    .ok();
    Ok(())
}

fn cmd_eval(args: &EvalArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let file = std::fs::File::open(&args.reports).map_err(|e| io_error(&args.reports, e))?;
    let reports = read_reports(std::io::BufReader::new(file))?;
    let gold_corpus = load_corpus(&args.gold, Split::Test)?;
    let gold = gold_corpus
        .records
        .iter()
        .filter_map(|r| r.label().map(|l| (r.id.clone(), l)))
        .collect();
    let pred = reports
        .iter()
        .filter_map(|r| r.predicted().map(|p| (r.id.clone(), p)))
        .collect();
    let metrics = score_by_id(&gold, &pred)?;
    write!(out, "{}", format_table(&[("eval".to_string(), &metrics)])).ok();
    if let Some(path) = &args.output {
        let text = serde_json::to_string_pretty(&metrics).expect("metrics serialize");
        std::fs::write(path, text + "\n").map_err(|e| io_error(path, e))?;
    }
    Ok(())
}

fn cmd_ablate(args: &AblateArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let configs = parse_ablation_list(&args.configs).map_err(|e| CliError::Usage(e.to_string()))?;
    let config = resolve_config(&args.pipeline, None)?;
    let pipeline = build_pipeline(&config, args.pipeline.mock.as_deref())?;
    let corpus = load_corpus(&args.pipeline.corpus, Split::Test)?;
    let runs = run_ablation(&pipeline, &corpus.records, &configs, config.backend.concurrency)?;
    write!(out, "{}", ablation_table(&runs)).ok();
    for r in &runs {
        if let Some(e) = &r.metrics_error {
            writeln!(out, "{}: metrics unavailable: {e}", r.name).ok();
        }
        let calls: Vec<String> = r.calls.requests.iter().map(|(k, v)| format!("{k}={v}")).collect();
        writeln!(out, "{} requests: {}", r.name, calls.join(" ")).ok();
    }
    if let Some(path) = &args.output {
        let text = serde_json::to_string_pretty(&runs).expect("runs serialize");
        std::fs::write(path, text + "\n").map_err(|e| io_error(path, e))?;
    }
    Ok(())
}

fn cmd_cache_stats(args: &CacheArgs, out: &mut dyn Write) -> Result<(), CliError> {
    if !args.cache.exists() {
        return Err(CliError::Data(format!("{} does not exist", args.cache.display())));
    }
    let s = ResponseCache::open(&args.cache)?.stats();
    writeln!(out, "entries={} completions={} embeddings={}", s.entries, s.completions, s.embeddings).ok();
    Ok(())
}

fn cmd_cache_clear(args: &CacheArgs, out: &mut dyn Write) -> Result<(), CliError> {
    if !args.cache.exists() {
        writeln!(out, "cleared 0 entries").ok();
        return Ok(());
    }
    let entries = ResponseCache::open(&args.cache).map(|c| c.stats().entries).ok();
    std::fs::write(&args.cache, "").map_err(|e| io_error(&args.cache, e))?;
    match entries {
        Some(n) => writeln!(out, "cleared {n} entries").ok(),
        None => writeln!(out, "cleared unreadable cache").ok(),
    };
    Ok(())
}

pub fn execute(cli: &Cli, out: &mut dyn Write) -> Result<(), CliError> {
    match &cli.command {
        Command::Ingest(a) => cmd_ingest(a, out),
        Command::Run(a) => cmd_run(a, out),
        Command::Eval(a) => cmd_eval(a, out),
        Command::Ablate(a) => cmd_ablate(a, out),
        Command::CacheStats(a) => cmd_cache_stats(a, out),
        Command::CacheClear(a) => cmd_cache_clear(a, out),
    }
}

/// Parse `args` (including the program name) and run; returns the exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let target: &mut dyn Write = if code == 0 { out } else { err };
            write!(target, "{}", e.render()).ok();
            return code;
        }
    };
    match execute(&cli, out) {
        Ok(()) => 0,
        Err(e) => {
            writeln!(err, "error: {e}").ok();
            e.exit_code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn call(args: &[&str]) -> (i32, String, String) {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let code = run(std::iter::once("tracer").chain(args.iter().copied()), &mut out, &mut err);
        (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
    }

    #[test]
    fn help_exits_zero() {
        for sub in [vec!["--help"], vec!["run", "--help"], vec!["cache-clear", "--help"]] {
            let (code, out, _) = call(&sub);
            assert_eq!(code, 0);
            assert!(out.contains("Usage"));
        }
    }

    #[test]
    fn usage_errors_exit_one() {
        assert_eq!(call(&["frobnicate"]).0, 1);
        assert_eq!(call(&["run"]).0, 1);
    }

    #[test]
    fn exit_code_mapping() {
        assert_eq!(CliError::Usage(String::new()).exit_code(), 1);
        assert_eq!(CliError::Config(String::new()).exit_code(), 1);
        assert_eq!(CliError::Data(String::new()).exit_code(), 2);
    }
}
