//! Prompt templates with `{name}` placeholders.
//!
//! A placeholder is an identifier wrapped in braces (`{claim}`,
//! `{assumption_max_number}`). Braces around anything else, such as the
//! `{0, 1}` in the quality prompts, are literal text.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::path::Path;
use std::sync::OnceLock;

use regex::Regex;
use thiserror::Error;

pub type Bindings = BTreeMap<String, String>;

/// Build a binding map from `(name, value)` pairs.
pub fn bindings<K, V>(pairs: impl IntoIterator<Item = (K, V)>) -> Bindings
where
    K: Into<String>,
    V: Into<String>,
{
    pairs
        .into_iter()
        .map(|(k, v)| (k.into(), v.into()))
        .collect()
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TemplateError {
    #[error("missing binding {0:?}")]
    MissingBinding(String),
    #[error("unknown binding {0:?}")]
    UnknownBinding(String),
    #[error("unknown template {0:?}")]
    UnknownTemplate(String),
    #[error("template {template_id:?}: declared bindings {declared:?} do not match placeholders {found:?}")]
    BindingSetMismatch {
        template_id: String,
        declared: BTreeSet<String>,
        found: BTreeSet<String>,
    },
    #[error("reading template catalog: {0}")]
    Io(String),
}

fn placeholder_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"\{([a-z_][a-z0-9_]*)\}").unwrap())
}

/// One `- item` line per entry, the list format used for multi-sentence bindings.
pub fn bullet_list<S: AsRef<str>>(items: &[S]) -> String {
    items
        .iter()
        .map(|s| format!("- {}", s.as_ref()))
        .collect::<Vec<_>>()
        .join("\n")
}

/// True if `text` contains anything that looks like a placeholder.
pub fn has_placeholder(text: &str) -> bool {
    placeholder_re().is_match(text)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PromptTemplate {
    id: String,
    body: String,
    required: BTreeSet<String>,
}

impl PromptTemplate {
    /// Build a template whose required bindings are the placeholders in `body`.
    pub fn new(id: impl Into<String>, body: impl Into<String>) -> Self {
        let body = body.into();
        let required = placeholder_re()
            .captures_iter(&body)
            .map(|c| c[1].to_string())
            .collect();
        PromptTemplate {
            id: id.into(),
            body,
            required,
        }
    }

    /// Build a template with an explicit binding set, checked against the body.
    pub fn with_bindings<I, S>(
        id: impl Into<String>,
        body: impl Into<String>,
        declared: I,
    ) -> Result<Self, TemplateError>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let template = Self::new(id, body);
        let declared: BTreeSet<String> = declared.into_iter().map(Into::into).collect();
        if declared != template.required {
            return Err(TemplateError::BindingSetMismatch {
                template_id: template.id,
                declared,
                found: template.required,
            });
        }
        Ok(template)
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn body(&self) -> &str {
        &self.body
    }

    pub fn required_bindings(&self) -> &BTreeSet<String> {
        &self.required
    }

    /// Substitute every placeholder. Bindings must match the placeholder set exactly.
    pub fn render(&self, bindings: &Bindings) -> Result<String, TemplateError> {
        if let Some(missing) = self.required.iter().find(|k| !bindings.contains_key(*k)) {
            return Err(TemplateError::MissingBinding(missing.clone()));
        }
        if let Some(extra) = bindings.keys().find(|k| !self.required.contains(*k)) {
            return Err(TemplateError::UnknownBinding(extra.clone()));
        }
        Ok(placeholder_re()
            .replace_all(&self.body, |caps: &regex::Captures<'_>| {
                bindings[&caps[1]].clone()
            })
            .into_owned())
    }
}

/// Identifiers of the shipped templates.
pub mod ids {
    pub const RELEVANCE: &str = "relevance";
    pub const PRESENTATION: &str = "presentation";
    pub const RULING_ENHANCEMENT: &str = "ruling_enhancement";
    pub const INTENT_EXTRACTION: &str = "intent_extraction";
    pub const INTENT_GENERATION: &str = "intent_generation";
    pub const QUALITY_PLAUSIBILITY: &str = "quality_plausibility";
    pub const QUALITY_IMPLICITY: &str = "quality_implicity";
    pub const QUALITY_SUFFICIENCY: &str = "quality_sufficiency";
    pub const QUALITY_READABILITY: &str = "quality_readability";
    pub const IMPLICIT_QUESTIONS: &str = "implicit_questions";
    pub const ASSUMPTIONS: &str = "assumptions";
    pub const COUNTERFACTUAL: &str = "counterfactual";
    pub const REASSESSMENT: &str = "reassessment";
    pub const NLI: &str = "nli";
    pub const COT_VERIFY: &str = "cot_verify";
}

const BUILTIN: [(&str, &str); 15] = [
    (ids::RELEVANCE, include_str!("../../templates/relevance.txt")),
    (ids::PRESENTATION, include_str!("../../templates/presentation.txt")),
    (
        ids::RULING_ENHANCEMENT,
        include_str!("../../templates/ruling_enhancement.txt"),
    ),
    (
        ids::INTENT_EXTRACTION,
        include_str!("../../templates/intent_extraction.txt"),
    ),
    (
        ids::INTENT_GENERATION,
        include_str!("../../templates/intent_generation.txt"),
    ),
    (
        ids::QUALITY_PLAUSIBILITY,
        include_str!("../../templates/quality_plausibility.txt"),
    ),
    (
        ids::QUALITY_IMPLICITY,
        include_str!("../../templates/quality_implicity.txt"),
    ),
    (
        ids::QUALITY_SUFFICIENCY,
        include_str!("../../templates/quality_sufficiency.txt"),
    ),
    (
        ids::QUALITY_READABILITY,
        include_str!("../../templates/quality_readability.txt"),
    ),
    (
        ids::IMPLICIT_QUESTIONS,
        include_str!("../../templates/implicit_questions.txt"),
    ),
    (ids::ASSUMPTIONS, include_str!("../../templates/assumptions.txt")),
    (
        ids::COUNTERFACTUAL,
        include_str!("../../templates/counterfactual.txt"),
    ),
    (ids::REASSESSMENT, include_str!("../../templates/reassessment.txt")),
    (ids::NLI, include_str!("../../templates/nli.txt")),
    (ids::COT_VERIFY, include_str!("../../templates/cot_verify.txt")),
];

#[derive(Debug, Clone)]
pub struct TemplateCatalog {
    templates: HashMap<String, PromptTemplate>,
}

impl Default for TemplateCatalog {
    fn default() -> Self {
        Self::builtin()
    }
}

impl TemplateCatalog {
    pub fn empty() -> Self {
        TemplateCatalog {
            templates: HashMap::new(),
        }
    }

    /// The templates compiled into the crate.
    pub fn builtin() -> Self {
        let mut catalog = Self::empty();
        for (id, body) in BUILTIN {
            catalog.insert(PromptTemplate::new(id, body));
        }
        catalog
    }

    /// Builtins overridden by every `<template_id>.txt` in `dir`.
    pub fn load_dir(dir: impl AsRef<Path>) -> Result<Self, TemplateError> {
        let mut catalog = Self::builtin();
        let entries =
            std::fs::read_dir(dir.as_ref()).map_err(|e| TemplateError::Io(e.to_string()))?;
        for entry in entries {
            let path = entry.map_err(|e| TemplateError::Io(e.to_string()))?.path();
            if path.extension().and_then(|e| e.to_str()) != Some("txt") {
                continue;
            }
            let Some(id) = path.file_stem().and_then(|s| s.to_str()) else {
                continue;
            };
            let body =
                std::fs::read_to_string(&path).map_err(|e| TemplateError::Io(e.to_string()))?;
            catalog.insert(PromptTemplate::new(id, body));
        }
        Ok(catalog)
    }

    pub fn insert(&mut self, template: PromptTemplate) {
        self.templates.insert(template.id.clone(), template);
    }

    pub fn get(&self, id: &str) -> Result<&PromptTemplate, TemplateError> {
        self.templates
            .get(id)
            .ok_or_else(|| TemplateError::UnknownTemplate(id.to_string()))
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.templates.keys().map(String::as_str)
    }
}
