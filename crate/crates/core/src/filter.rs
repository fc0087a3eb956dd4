//! Decides which environments need translation: a protected list first,
//! then a binary LLM judgement for everything else.

use crate::diag::{Warning, WarningKind};
use crate::llm::{Agent, ChatRequest, LlmClient};
use crate::parser::{Granularity, TranslationUnit};
use crate::prompts::GenerationParams;
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;
use std::fs;
use std::io;
use std::path::Path;
use thiserror::Error;

const BUNDLED_LIST: &str = include_str!("../assets/protected_envs.txt");

/// Environment names that are never translated.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProtectedEnvList {
    names: BTreeSet<String>,
}

impl Default for ProtectedEnvList {
    fn default() -> Self {
        Self::parse(BUNDLED_LIST)
    }
}

impl ProtectedEnvList {
    /// One name per line; `#` starts a comment.
    pub fn parse(text: &str) -> Self {
        let names = text
            .lines()
            .map(|l| l.split('#').next().unwrap_or("").trim())
            .filter(|l| !l.is_empty())
            .map(str::to_string)
            .collect();
        Self { names }
    }

    pub fn load(path: &Path) -> io::Result<Self> {
        Ok(Self::parse(&fs::read_to_string(path)?))
    }

    pub fn contains(&self, name: &str) -> bool {
        self.names.contains(name)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.names.iter().map(String::as_str)
    }

    pub fn insert(&mut self, name: impl Into<String>) {
        self.names.insert(name.into());
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum DecisionSource {
    Predefined,
    Llm,
    Default,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FilterDecision {
    pub unit_id: usize,
    pub translate: bool,
    pub source: DecisionSource,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FilterError {
    #[error("unit {0} is not an environment unit")]
    NotAnEnvironment(usize),
}

/// Everything the Filter agent needs besides the unit.
#[derive(Debug, Clone)]
pub struct FilterSettings {
    pub system_prompt: String,
    pub model: String,
    pub params: GenerationParams,
    /// Total LLM calls allowed before falling back to "do not translate".
    pub attempts: u32,
}

/// Accepts exactly `True` or `False`, ignoring surrounding whitespace.
pub fn parse_label(reply: &str) -> Option<bool> {
    match reply.trim() {
        "True" => Some(true),
        "False" => Some(false),
        _ => None,
    }
}

pub fn classify_unit(
    unit: &TranslationUnit,
    list: &ProtectedEnvList,
    llm: &LlmClient,
    settings: &FilterSettings,
) -> Result<(FilterDecision, Vec<Warning>), FilterError> {
    if unit.granularity != Granularity::Environment {
        return Err(FilterError::NotAnEnvironment(unit.id));
    }
    let name = unit.env_name.as_deref().unwrap_or("");
    if list.contains(name) {
        let decision = FilterDecision { unit_id: unit.id, translate: false, source: DecisionSource::Predefined };
        return Ok((decision, Vec::new()));
    }

    let req = ChatRequest {
        agent: Agent::Filter,
        system_prompt: settings.system_prompt.clone(),
        user_message: unit.source_text.clone(),
        temperature: settings.params.temperature,
        max_new_tokens: settings.params.max_new_tokens,
        model: settings.model.clone(),
    };
    let mut last_problem = String::new();
    for _ in 0..settings.attempts.max(1) {
        match llm.chat(&req) {
            Ok(reply) => match parse_label(&reply) {
                Some(translate) => {
                    let decision = FilterDecision { unit_id: unit.id, translate, source: DecisionSource::Llm };
                    return Ok((decision, Vec::new()));
                }
                None => last_problem = format!("unparseable reply {:?}", truncate(&reply, 60)),
            },
            Err(e) => last_problem = e.to_string(),
        }
    }
    let warning = Warning::new(
        WarningKind::FilterDefaulted,
        format!("environment {name} (unit {}): {last_problem}; kept untranslated", unit.id),
    );
    let decision = FilterDecision { unit_id: unit.id, translate: false, source: DecisionSource::Default };
    Ok((decision, vec![warning]))
}

/// Classifies every ENVIRONMENT unit and records the outcome on the unit.
pub fn apply_filter(
    units: &mut [TranslationUnit],
    list: &ProtectedEnvList,
    llm: &LlmClient,
    settings: &FilterSettings,
) -> (Vec<FilterDecision>, Vec<Warning>) {
    let mut decisions = Vec::new();
    let mut warnings = Vec::new();
    for unit in units.iter_mut().filter(|u| u.granularity == Granularity::Environment) {
        let (decision, w) = classify_unit(unit, list, llm, settings).expect("filtered to environments");
        unit.needs_translation = decision.translate;
        decisions.push(decision);
        warnings.extend(w);
    }
    (decisions, warnings)
}

fn truncate(s: &str, max: usize) -> &str {
    match s.char_indices().nth(max) {
        Some((i, _)) => &s[..i],
        None => s,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::llm::{MockRule, RuleBackend, ScriptedBackend};
    use crate::parser::{enumerate_units, extract_environments, PlaceholderMap};

    fn settings() -> FilterSettings {
        FilterSettings {
            system_prompt: "filter".into(),
            model: "m".into(),
            params: GenerationParams { temperature: 0.0, max_new_tokens: 50 },
            attempts: 3,
        }
    }

    fn env_unit(block: &str) -> TranslationUnit {
        let (text, env_map, _) = extract_environments(block);
        let units = enumerate_units(&text, &env_map, &PlaceholderMap::default());
        units.into_iter().find(|u| u.granularity == Granularity::Environment).unwrap()
    }

    #[test]
    fn protected_environment_needs_no_call() {
        let llm = LlmClient::echo();
        let unit = env_unit("\\begin{tikzpicture}\\draw (0,0) -- (1,1);\\end{tikzpicture}");
        let (d, w) = classify_unit(&unit, &ProtectedEnvList::default(), &llm, &settings()).unwrap();
        assert_eq!((d.translate, d.source), (false, DecisionSource::Predefined));
        assert!(w.is_empty());
        assert_eq!(llm.call_count(), 0);
    }

    #[test]
    fn custom_environment_asks_the_model() {
        let backend = RuleBackend::new(&[MockRule { agent: None, pattern: "mybox".into(), reply: " True\n".into() }]).unwrap();
        let llm = LlmClient::new(Box::new(backend));
        let unit = env_unit("\\begin{mybox}A graph is a pair of sets.\\end{mybox}");
        let (d, _) = classify_unit(&unit, &ProtectedEnvList::default(), &llm, &settings()).unwrap();
        assert_eq!((d.translate, d.source), (true, DecisionSource::Llm));
        assert_eq!(llm.transcript()[0].user_message, unit.source_text);
    }

    #[test]
    fn garbage_replies_default_to_false() {
        let llm = LlmClient::new(Box::new(ScriptedBackend::new(vec!["Maybe".into(); 3])));
        let unit = env_unit("\\begin{mybox}x\\end{mybox}");
        let (d, w) = classify_unit(&unit, &ProtectedEnvList::default(), &llm, &settings()).unwrap();
        assert_eq!((d.translate, d.source), (false, DecisionSource::Default));
        assert_eq!(w.len(), 1);
        assert_eq!(w[0].kind, WarningKind::FilterDefaulted);
        assert_eq!(llm.call_count(), 3);
    }

    #[test]
    fn label_parsing_is_strict() {
        assert_eq!(parse_label("True"), Some(true));
        assert_eq!(parse_label("\n False  "), Some(false));
        for bad in ["true", "'True'", "True.", "Yes", ""] {
            assert_eq!(parse_label(bad), None, "{bad}");
        }
    }

    #[test]
    fn list_parsing_and_case_sensitivity() {
        let list = ProtectedEnvList::parse("# c\nequation  # trailing\n\n  Foo\n");
        assert!(list.contains("equation"));
        assert!(list.contains("Foo"));
        assert!(!list.contains("foo"));
        assert_eq!(list.names().count(), 2);
    }

    #[test]
    fn non_environment_unit_is_rejected() {
        let units = enumerate_units("text", &PlaceholderMap::default(), &PlaceholderMap::default());
        let r = classify_unit(&units[0], &ProtectedEnvList::default(), &LlmClient::echo(), &settings());
        assert_eq!(r.unwrap_err(), FilterError::NotAnEnvironment(0));
    }
}
