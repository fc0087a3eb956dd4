//! Compile-log parsing and the Format Consistency score.
//!
//! `FC = clip(s0 - alpha * errors - beta * warnings + gamma * compiled, s_min, s_max)`

use regex::Regex;
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;
use std::path::PathBuf;
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Engine {
    Pdflatex,
    Xelatex,
}

impl Engine {
    pub fn program(self) -> &'static str {
        match self {
            Self::Pdflatex => "pdflatex",
            Self::Xelatex => "xelatex",
        }
    }
}

/// Outcome of compiling one document.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CompileReport {
    pub engine: Engine,
    pub success: bool,
    pub error_count: u32,
    pub warning_count: u32,
    pub log_path: PathBuf,
    pub elapsed_ms: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error("no documents to score")]
    EmptyCorpus,
    #[error("invalid score parameters: {0}")]
    InvalidParams(String),
    #[error("invalid log pattern {pattern:?}: {message}")]
    BadPattern { pattern: String, message: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FcScoreParams {
    pub s0: f64,
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub s_min: f64,
    pub s_max: f64,
}

impl Default for FcScoreParams {
    fn default() -> Self {
        Self { s0: 100.0, alpha: 10.0, beta: 2.0, gamma: 20.0, s_min: 0.0, s_max: 100.0 }
    }
}

impl FcScoreParams {
    pub fn validate(&self) -> Result<(), EvalError> {
        let all = [self.s0, self.alpha, self.beta, self.gamma, self.s_min, self.s_max];
        if all.iter().any(|v| !v.is_finite()) {
            return Err(EvalError::InvalidParams("values must be finite".into()));
        }
        if self.s_min > self.s_max {
            return Err(EvalError::InvalidParams(format!("s_min {} > s_max {}", self.s_min, self.s_max)));
        }
        if self.alpha < 0.0 || self.beta < 0.0 || self.gamma < 0.0 {
            return Err(EvalError::InvalidParams("alpha, beta and gamma must be nonnegative".into()));
        }
        Ok(())
    }
}

pub fn fc_score(params: &FcScoreParams, error_count: u32, warning_count: u32, compiled: bool) -> f64 {
    let c = if compiled { 1.0 } else { 0.0 };
    let raw = params.s0 - params.alpha * f64::from(error_count) - params.beta * f64::from(warning_count)
        + params.gamma * c;
    raw.clamp(params.s_min, params.s_max)
}

/// Regexes that classify log lines. Each is matched per line.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LogPatterns {
    /// Starts a new error block.
    pub error_line: String,
    /// Counted only outside an open error block.
    pub latex_error: String,
    pub warnings: Vec<String>,
    pub box_warning: String,
    pub count_box_warnings: bool,
    pub output_written: String,
}

impl Default for LogPatterns {
    fn default() -> Self {
        Self {
            error_line: r"^(!|[^\s:]+\.tex:\d+: )".into(),
            latex_error: r"LaTeX Error:".into(),
            warnings: vec![
                r"LaTeX( Font)? Warning:".into(),
                r"Package \S+ Warning:".into(),
                r"Class \S+ Warning:".into(),
            ],
            box_warning: r"^(Overfull|Underfull) \\[hv]box".into(),
            count_box_warnings: false,
            output_written: r"^Output written on ".into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LogCounts {
    pub error_count: u32,
    pub warning_count: u32,
    /// Output was written and no error was logged.
    pub compiled: bool,
}

#[derive(Debug, Clone)]
pub struct LogParser {
    error_line: Regex,
    latex_error: Regex,
    warnings: Vec<Regex>,
    box_warning: Option<Regex>,
    output_written: Regex,
}

impl Default for LogParser {
    fn default() -> Self {
        Self::new(&LogPatterns::default()).expect("default patterns compile")
    }
}

impl LogParser {
    pub fn new(p: &LogPatterns) -> Result<Self, EvalError> {
        let re = |pattern: &str| {
            Regex::new(pattern).map_err(|e| EvalError::BadPattern { pattern: pattern.into(), message: e.to_string() })
        };
        Ok(Self {
            error_line: re(&p.error_line)?,
            latex_error: re(&p.latex_error)?,
            warnings: p.warnings.iter().map(|w| re(w)).collect::<Result<_, _>>()?,
            box_warning: if p.count_box_warnings { Some(re(&p.box_warning)?) } else { None },
            output_written: re(&p.output_written)?,
        })
    }

    /// Counts error blocks and warning messages. Total: any input parses.
    pub fn parse(&self, log_text: &str) -> LogCounts {
        let mut errors = 0u32;
        let mut warnings = 0u32;
        let mut written = false;
        let mut in_error_block = false;
        for line in log_text.lines() {
            if line.trim().is_empty() {
                in_error_block = false;
                continue;
            }
            if self.error_line.is_match(line) {
                errors += 1;
                in_error_block = true;
            } else if self.latex_error.is_match(line) && !in_error_block {
                errors += 1;
                in_error_block = true;
            }
            if self.warnings.iter().any(|w| w.is_match(line))
                || self.box_warning.as_ref().is_some_and(|b| b.is_match(line))
            {
                warnings += 1;
            }
            written |= self.output_written.is_match(line);
        }
        LogCounts { error_count: errors, warning_count: warnings, compiled: written && errors == 0 }
    }
}

/// [`LogParser::parse`] with the default patterns.
pub fn parse_log(log_text: &str) -> LogCounts {
    LogParser::default().parse(log_text)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DocumentScore {
    pub name: String,
    pub error_count: u32,
    pub warning_count: u32,
    pub compiled: bool,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusScore {
    pub documents: Vec<DocumentScore>,
    pub mean: f64,
}

pub fn score_corpus(reports: &[(String, CompileReport)], params: &FcScoreParams) -> Result<CorpusScore, EvalError> {
    params.validate()?;
    if reports.is_empty() {
        return Err(EvalError::EmptyCorpus);
    }
    let documents: Vec<DocumentScore> = reports
        .iter()
        .map(|(name, r)| DocumentScore {
            name: name.clone(),
            error_count: r.error_count,
            warning_count: r.warning_count,
            compiled: r.success,
            score: fc_score(params, r.error_count, r.warning_count, r.success),
        })
        .collect();
    let mean = documents.iter().map(|d| d.score).sum::<f64>() / documents.len() as f64;
    Ok(CorpusScore { documents, mean })
}

impl CorpusScore {
    /// Aligned plain-text table, one row per document plus the mean.
    pub fn to_table(&self) -> String {
        let width = self.documents.iter().map(|d| d.name.chars().count()).max().unwrap_or(0).max("document".len());
        let mut out = String::new();
        let _ = writeln!(out, "{:<width$}  {:>6}  {:>8}  {:>8}  {:>8}", "document", "errors", "warnings", "compiled", "fc-score");
        for d in &self.documents {
            let _ = writeln!(
                out,
                "{:<width$}  {:>6}  {:>8}  {:>8}  {:>8.2}",
                d.name,
                d.error_count,
                d.warning_count,
                if d.compiled { "yes" } else { "no" },
                d.score
            );
        }
        let _ = writeln!(out, "{:<width$}  {:>6}  {:>8}  {:>8}  {:>8.2}", "mean", "", "", "", self.mean);
        out
    }
}
