//! The Translator, Validator, Summarizer and Terminology Extractor, and the
//! loop that drives them over a document's units.

mod pipeline;
mod summary;
mod terms;
mod validator;

pub use pipeline::{run_pipeline, PipelineError, PipelineOutcome, UnitRecord};
pub use summary::{update_summary, Summary, SUMMARY_WORD_LIMIT};
pub use terms::{extract_terms, parse_term_reply, TermDictionary, TermPair};
pub use validator::{
    command_findings, placeholder_findings, validate_translations, Dimension, ErrorReport, Finding,
    DEFAULT_COMMAND_ALLOWLIST,
};

use crate::llm::{Agent, ChatRequest, LlmClient, LlmError};
use crate::parser::TranslationUnit;
use crate::prompts::{language_name, GenerationParams, PromptSet};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AgentParams {
    pub translator: GenerationParams,
    pub corrector: GenerationParams,
    pub validator: GenerationParams,
    pub terminology: GenerationParams,
    pub summarizer: GenerationParams,
    pub filter: GenerationParams,
}

impl Default for AgentParams {
    fn default() -> Self {
        let general = GenerationParams { temperature: 0.7, max_new_tokens: 8192 };
        Self {
            translator: general,
            corrector: general,
            validator: general,
            terminology: general,
            summarizer: general,
            filter: GenerationParams { temperature: 0.0, max_new_tokens: 50 },
        }
    }
}

impl AgentParams {
    pub fn for_agent(&self, agent: Agent) -> GenerationParams {
        match agent {
            Agent::Translator => self.translator,
            Agent::Corrector => self.corrector,
            Agent::Validator => self.validator,
            Agent::Terminology => self.terminology,
            Agent::Summarizer => self.summarizer,
            Agent::Filter => self.filter,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub source_language: String,
    pub target_language: String,
    pub model: String,
    pub max_validation_rounds: u32,
    /// Most-recent dictionary pairs injected into a translator prompt.
    pub term_dict_cap: usize,
    /// Run the LLM completeness check after the mechanical checks pass.
    pub content_check: bool,
    pub command_allowlist: Vec<String>,
    pub params: AgentParams,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            source_language: "en".into(),
            target_language: "zh".into(),
            model: "gpt-4o".into(),
            max_validation_rounds: 3,
            term_dict_cap: 200,
            content_check: true,
            command_allowlist: DEFAULT_COMMAND_ALLOWLIST.iter().map(|s| s.to_string()).collect(),
            params: AgentParams::default(),
        }
    }
}

/// Shared handles every agent call needs.
pub struct AgentContext<'a> {
    pub llm: &'a LlmClient,
    /// Templates already rendered for the target language.
    pub prompts: &'a PromptSet,
    pub config: &'a PipelineConfig,
    pub target_name: String,
}

impl<'a> AgentContext<'a> {
    pub fn new(llm: &'a LlmClient, prompts: &'a PromptSet, config: &'a PipelineConfig) -> Self {
        Self { llm, prompts, config, target_name: language_name(&config.target_language) }
    }

    pub fn request(&self, agent: Agent, system_prompt: String, user_message: String) -> ChatRequest {
        let params = self.config.params.for_agent(agent);
        ChatRequest {
            agent,
            system_prompt,
            user_message,
            temperature: params.temperature,
            max_new_tokens: params.max_new_tokens,
            model: self.config.model.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AgentError {
    #[error("unit {0} is not marked for translation")]
    NotTranslatable(usize),
    #[error("unit {0} has no findings to correct")]
    NoFindings(usize),
    #[error(transparent)]
    Llm(#[from] LlmError),
}

/// Translator system prompt: the template followed by the current summary
/// and dictionary.
fn translator_system_prompt(ctx: &AgentContext<'_>, summary: &Summary, dict: &TermDictionary) -> String {
    let summary_text = if summary.text.is_empty() { "None" } else { summary.text.as_str() };
    let dict_text = if dict.is_empty() { "None".to_string() } else { dict.render(ctx.config.term_dict_cap) };
    format!(
        "{}\n\n[Summary]\n{summary_text}\n\n[Term Dictionary]\n{dict_text}\n",
        ctx.prompts.translator.trim_end()
    )
}

/// Drops a ```` ``` ```` fence around the whole reply and re-applies the
/// source's leading and trailing whitespace, so unit joins stay intact.
pub fn normalize_output(source: &str, reply: &str) -> String {
    let mut body = reply.trim();
    if let Some(inner) = body.strip_prefix("```").and_then(|b| b.strip_suffix("```")) {
        let inner = inner.strip_prefix("latex").or_else(|| inner.strip_prefix("tex")).unwrap_or(inner);
        body = inner.trim();
    }
    let lead = &source[..source.len() - source.trim_start().len()];
    let trail = &source[source.trim_end().len()..];
    if source.trim().is_empty() {
        return source.to_string();
    }
    format!("{lead}{body}{trail}")
}

pub fn translate_unit(
    unit: &TranslationUnit,
    summary: &Summary,
    dict: &TermDictionary,
    ctx: &AgentContext<'_>,
) -> Result<String, AgentError> {
    if !unit.needs_translation {
        return Err(AgentError::NotTranslatable(unit.id));
    }
    let system = translator_system_prompt(ctx, summary, dict);
    let req = ctx.request(Agent::Translator, system, unit.source_text.clone());
    let reply = ctx.llm.chat(&req)?;
    Ok(normalize_output(&unit.source_text, &reply))
}

pub fn retranslate_unit(
    unit: &TranslationUnit,
    prev_translation: &str,
    findings: &[&Finding],
    ctx: &AgentContext<'_>,
) -> Result<String, AgentError> {
    if findings.is_empty() {
        return Err(AgentError::NoFindings(unit.id));
    }
    let reports: Vec<String> = findings
        .iter()
        .map(|f| format!("- [{:?}] {}", f.dimension, f.description))
        .collect();
    let user = format!(
        "[Original]\n{}\n\n[Translation]\n{prev_translation}\n\n[Error Reports]\n{}",
        unit.source_text,
        reports.join("\n")
    );
    let req = ctx.request(Agent::Corrector, ctx.prompts.corrector.clone(), user);
    let reply = ctx.llm.chat(&req)?;
    Ok(normalize_output(&unit.source_text, &reply))
}
