//! Run configuration: a TOML file with `${VAR}` interpolation, overlaid by
//! command-line flags.

use crate::agents::{AgentParams, PipelineConfig, DEFAULT_COMMAND_ALLOWLIST};
use crate::evaluator::{Engine, FcScoreParams, LogParser, LogPatterns};
use crate::generator::default_preamble_templates;
use crate::llm::{MockRule, Prices, RetryPolicy, RuleBackend};
use once_cell::sync::Lazy;
use regex::Regex;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ConfigError {
    #[error("{}: {message}", path.display())]
    Read { path: PathBuf, message: String },
    #[error("config parse error: {0}")]
    Parse(String),
    #[error("environment variable {0} is not set")]
    MissingVar(String),
    #[error("invalid config: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EngineChoice {
    /// xelatex for CJK targets, pdflatex otherwise.
    Auto,
    Pdflatex,
    Xelatex,
}

impl EngineChoice {
    pub fn resolve(self, target_language: &str) -> Engine {
        match self {
            Self::Pdflatex => Engine::Pdflatex,
            Self::Xelatex => Engine::Xelatex,
            Self::Auto => {
                let base = target_language.split(['-', '_']).next().unwrap_or("").to_ascii_lowercase();
                if matches!(base.as_str(), "zh" | "ja" | "ko") {
                    Engine::Xelatex
                } else {
                    Engine::Pdflatex
                }
            }
        }
    }
}

impl FromStr for EngineChoice {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "auto" => Ok(Self::Auto),
            "pdflatex" => Ok(Self::Pdflatex),
            "xelatex" => Ok(Self::Xelatex),
            _ => Err(format!("unknown engine {s:?} (expected auto, pdflatex or xelatex)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MockMode {
    Echo,
    Scripted,
    Rules,
}

impl FromStr for MockMode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "echo" => Ok(Self::Echo),
            "scripted" => Ok(Self::Scripted),
            "rules" => Ok(Self::Rules),
            _ => Err(format!("unknown mock mode {s:?} (expected echo, scripted or rules)")),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MockConfig {
    /// Offline backend; absent means the HTTP endpoint is used.
    pub mode: Option<MockMode>,
    /// Replies for scripted mode: a JSON file, or a directory holding
    /// `<doc-id>.json` per document.
    pub transcript: Option<PathBuf>,
    pub rules: Vec<MockRule>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub source_language: String,
    pub target_language: String,
    pub endpoint: String,
    /// Falls back to `OPENAI_API_KEY` when unset.
    pub api_key: Option<String>,
    pub model: String,
    pub request_timeout_secs: u64,
    pub max_validation_rounds: u32,
    pub term_dict_cap: usize,
    pub content_check: bool,
    pub filter_attempts: u32,
    pub command_allowlist: Vec<String>,
    pub engine: EngineChoice,
    /// Explicit engine executable, bypassing the PATH lookup.
    pub engine_program: Option<PathBuf>,
    pub compile: bool,
    pub compile_timeout_secs: u64,
    pub compile_passes: u32,
    pub inject_preamble: bool,
    pub protected_envs: Option<PathBuf>,
    pub prompts_dir: Option<PathBuf>,
    pub out_dir: PathBuf,
    /// Documents processed concurrently.
    pub jobs: usize,
    pub params: AgentParams,
    pub retry: RetryPolicy,
    pub prices: Prices,
    pub mock: MockConfig,
    /// Lines inserted before `\begin{document}`, keyed by target language.
    pub preamble: BTreeMap<String, String>,
    pub fc_score: FcScoreParams,
    pub log_patterns: LogPatterns,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            source_language: "en".into(),
            target_language: "zh".into(),
            endpoint: "https://api.openai.com/v1".into(),
            api_key: None,
            model: "gpt-4o".into(),
            request_timeout_secs: 120,
            max_validation_rounds: 3,
            term_dict_cap: 200,
            content_check: true,
            filter_attempts: 3,
            command_allowlist: DEFAULT_COMMAND_ALLOWLIST.iter().map(|s| s.to_string()).collect(),
            engine: EngineChoice::Auto,
            engine_program: None,
            compile: true,
            compile_timeout_secs: 300,
            compile_passes: 2,
            inject_preamble: true,
            protected_envs: None,
            prompts_dir: None,
            out_dir: PathBuf::from("out"),
            jobs: 4,
            params: AgentParams::default(),
            retry: RetryPolicy::default(),
            prices: Prices::default(),
            mock: MockConfig::default(),
            preamble: default_preamble_templates(),
            fc_score: FcScoreParams::default(),
            log_patterns: LogPatterns::default(),
        }
    }
}

static VAR: Lazy<Regex> = Lazy::new(|| Regex::new(r"\$\{([A-Za-z_][A-Za-z0-9_]*)\}").unwrap());

/// Expands `${VAR}` references from `lookup`.
pub fn interpolate(text: &str, lookup: &dyn Fn(&str) -> Option<String>) -> Result<String, ConfigError> {
    let mut out = String::with_capacity(text.len());
    let mut last = 0;
    for caps in VAR.captures_iter(text) {
        let whole = caps.get(0).unwrap();
        let value = lookup(&caps[1]).ok_or_else(|| ConfigError::MissingVar(caps[1].to_string()))?;
        out.push_str(&text[last..whole.start()]);
        out.push_str(&value);
        last = whole.end();
    }
    out.push_str(&text[last..]);
    Ok(out)
}

fn interpolate_value(value: &mut toml::Value, lookup: &dyn Fn(&str) -> Option<String>) -> Result<(), ConfigError> {
    match value {
        toml::Value::String(s) => *s = interpolate(s, lookup)?,
        toml::Value::Array(items) => {
            for item in items {
                interpolate_value(item, lookup)?;
            }
        }
        toml::Value::Table(table) => {
            for (_, item) in table.iter_mut() {
                interpolate_value(item, lookup)?;
            }
        }
        _ => {}
    }
    Ok(())
}

impl RunConfig {
    /// Parses TOML text, expanding `${VAR}` in string values.
    pub fn from_toml(text: &str, lookup: &dyn Fn(&str) -> Option<String>) -> Result<Self, ConfigError> {
        let table: toml::Table = toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
        let mut value = toml::Value::Table(table);
        interpolate_value(&mut value, lookup)?;
        let config: Self = value.try_into().map_err(|e: toml::de::Error| ConfigError::Parse(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    /// Loads a config file; relative paths inside it are taken relative to
    /// the file's directory.
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = fs::read_to_string(path)
            .map_err(|e| ConfigError::Read { path: path.to_path_buf(), message: e.to_string() })?;
        let mut config = Self::from_toml(&text, &|name| std::env::var(name).ok())?;
        if let Some(base) = path.parent() {
            config.rebase(base);
        }
        Ok(config)
    }

    fn rebase(&mut self, base: &Path) {
        let fix = |p: &mut Option<PathBuf>| {
            if let Some(path) = p {
                if path.is_relative() {
                    *path = base.join(&*path);
                }
            }
        };
        fix(&mut self.protected_envs);
        fix(&mut self.prompts_dir);
        fix(&mut self.mock.transcript);
        fix(&mut self.engine_program);
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let invalid = |m: String| Err(ConfigError::Invalid(m));
        if self.source_language.trim().is_empty() || self.target_language.trim().is_empty() {
            return invalid("source_language and target_language must be set".into());
        }
        if self.max_validation_rounds == 0 {
            return invalid("max_validation_rounds must be at least 1".into());
        }
        if self.jobs == 0 {
            return invalid("jobs must be at least 1".into());
        }
        if self.compile_passes == 0 {
            return invalid("compile_passes must be at least 1".into());
        }
        let p = &self.params;
        for (agent, g) in [
            ("translator", p.translator),
            ("corrector", p.corrector),
            ("validator", p.validator),
            ("terminology", p.terminology),
            ("summarizer", p.summarizer),
            ("filter", p.filter),
        ] {
            if !(0.0..=2.0).contains(&g.temperature) {
                return invalid(format!("params.{agent}.temperature {} outside [0, 2]", g.temperature));
            }
            if g.max_new_tokens == 0 {
                return invalid(format!("params.{agent}.max_new_tokens must be positive"));
            }
        }
        self.fc_score.validate().map_err(|e| ConfigError::Invalid(e.to_string()))?;
        LogParser::new(&self.log_patterns).map_err(|e| ConfigError::Invalid(e.to_string()))?;
        RuleBackend::new(&self.mock.rules).map_err(|e| ConfigError::Invalid(format!("mock rule: {e}")))?;
        if self.mock.mode == Some(MockMode::Scripted) && self.mock.transcript.is_none() {
            return invalid("scripted mock mode needs mock.transcript".into());
        }
        Ok(())
    }

    pub fn pipeline_config(&self) -> PipelineConfig {
        PipelineConfig {
            source_language: self.source_language.clone(),
            target_language: self.target_language.clone(),
            model: self.model.clone(),
            max_validation_rounds: self.max_validation_rounds,
            term_dict_cap: self.term_dict_cap,
            content_check: self.content_check,
            command_allowlist: self.command_allowlist.clone(),
            params: self.params.clone(),
        }
    }

    pub fn engine(&self) -> Engine {
        self.engine.resolve(&self.target_language)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn no_env(_: &str) -> Option<String> {
        None
    }

    #[test]
    fn empty_file_gives_defaults() {
        let c = RunConfig::from_toml("", &no_env).unwrap();
        assert_eq!(c, RunConfig::default());
        assert_eq!(c.params.translator.temperature, 0.7);
        assert_eq!(c.params.translator.max_new_tokens, 8192);
        assert_eq!(c.engine(), Engine::Xelatex);
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(matches!(RunConfig::from_toml("colour = 1", &no_env), Err(ConfigError::Parse(_))));
        assert!(matches!(
            RunConfig::from_toml("[params.translator]\ntemperature = 0.1\nmax_new_tokens = 5\ntop_p = 1", &no_env),
            Err(ConfigError::Parse(_))
        ));
    }

    #[test]
    fn env_interpolation() {
        let lookup = |name: &str| (name == "KEY").then(|| "sk-123".to_string());
        let c = RunConfig::from_toml("api_key = \"${KEY}\"\n[mock]\nrules = [{ pattern = \"x\", reply = \"a${KEY}\" }]", &lookup).unwrap();
        assert_eq!(c.api_key.as_deref(), Some("sk-123"));
        assert_eq!(c.mock.rules[0].reply, "ask-123");
        assert_eq!(
            RunConfig::from_toml("api_key = \"${NOPE}\"", &lookup),
            Err(ConfigError::MissingVar("NOPE".into()))
        );
    }

    #[test]
    fn partial_tables_keep_other_defaults() {
        let c = RunConfig::from_toml("target_language = \"fr\"\n[retry]\nmax_retries = 1\n[fc_score]\nbeta = 3.0", &no_env).unwrap();
        assert_eq!(c.retry.max_retries, 1);
        assert_eq!(c.retry.multiplier, 2.0);
        assert_eq!(c.fc_score.beta, 3.0);
        assert_eq!(c.fc_score.alpha, 10.0);
        assert_eq!(c.engine(), Engine::Pdflatex);
    }

    #[test]
    fn invalid_values_rejected() {
        for bad in [
            "max_validation_rounds = 0",
            "jobs = 0",
            "[fc_score]\ns_min = 10.0\ns_max = 1.0",
            "[params.filter]\ntemperature = 3.0\nmax_new_tokens = 50",
            "[mock]\nmode = \"scripted\"",
            "[log_patterns]\nerror_line = \"(\"",
        ] {
            assert!(matches!(RunConfig::from_toml(bad, &no_env), Err(ConfigError::Invalid(_))), "{bad}");
        }
    }

    #[test]
    fn engine_and_mock_names_parse() {
        assert_eq!("xelatex".parse::<EngineChoice>(), Ok(EngineChoice::Xelatex));
        assert!("lualatex".parse::<EngineChoice>().is_err());
        assert_eq!("rules".parse::<MockMode>(), Ok(MockMode::Rules));
    }
}
