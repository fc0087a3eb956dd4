//! Translation checks along three dimensions. Placeholder and command
//! integrity are mechanical; content completeness asks the model.

use super::AgentContext;
use crate::diag::{Warning, WarningKind};
use crate::llm::Agent;
use crate::parser::scan::{Lexer, TokKind};
use crate::parser::{TranslationUnit, ANY_TOKEN};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Dimension {
    PlaceholderIntegrity,
    CommandIntegrity,
    ContentCompleteness,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Finding {
    pub unit_id: usize,
    pub dimension: Dimension,
    pub description: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErrorReport {
    pub round: u32,
    pub findings: Vec<Finding>,
}

impl ErrorReport {
    pub fn is_clean(&self) -> bool {
        self.findings.is_empty()
    }

    pub fn for_unit(&self, unit_id: usize) -> impl Iterator<Item = &Finding> {
        self.findings.iter().filter(move |f| f.unit_id == unit_id)
    }

    /// Unit ids with at least one finding, ascending.
    pub fn flagged_units(&self) -> Vec<usize> {
        let mut ids: Vec<usize> = self.findings.iter().map(|f| f.unit_id).collect();
        ids.sort_unstable();
        ids.dedup();
        ids
    }
}

/// Prose-affecting commands whose count may legitimately change in
/// translation.
pub const DEFAULT_COMMAND_ALLOWLIST: &[&str] = &[
    "ldots", "dots", "xspace", "eg", "ie", "etal", "etc", "newline", "linebreak", "quad", "qquad",
    "footnotesize", "small", "textquotedblleft", "textquotedblright", "textquoteleft", "textquoteright",
];

fn multiset<'a>(items: impl Iterator<Item = &'a str>) -> BTreeMap<&'a str, usize> {
    let mut m = BTreeMap::new();
    for item in items {
        *m.entry(item).or_insert(0) += 1;
    }
    m
}

/// Placeholder tokens must appear in the translation exactly as often as in
/// the source.
pub fn placeholder_findings(source: &str, translation: &str) -> Vec<String> {
    let src = multiset(ANY_TOKEN.find_iter(source).map(|m| m.as_str()));
    let tgt = multiset(ANY_TOKEN.find_iter(translation).map(|m| m.as_str()));
    diff_counts(&src, &tgt, |tok, s, t| {
        if t == 0 {
            format!("missing placeholder {tok}")
        } else if s == 0 {
            format!("unexpected placeholder {tok} introduced")
        } else {
            format!("placeholder {tok} appears {t} times, expected {s}")
        }
    })
}

/// Control words (and escaped special characters) must be preserved,
/// ignoring the allowlist.
pub fn command_findings(source: &str, translation: &str, allowlist: &[String]) -> Vec<String> {
    let src_cmds = control_sequences(source, allowlist);
    let tgt_cmds = control_sequences(translation, allowlist);
    let src = multiset(src_cmds.iter().map(String::as_str));
    let tgt = multiset(tgt_cmds.iter().map(String::as_str));
    diff_counts(&src, &tgt, |cmd, s, t| {
        if t == 0 {
            format!("missing command {cmd}")
        } else if s == 0 {
            format!("unknown control sequence {cmd} introduced")
        } else {
            format!("command {cmd} appears {t} times, expected {s}")
        }
    })
}

fn diff_counts(
    src: &BTreeMap<&str, usize>,
    tgt: &BTreeMap<&str, usize>,
    describe: impl Fn(&str, usize, usize) -> String,
) -> Vec<String> {
    let mut keys: Vec<&str> = src.keys().chain(tgt.keys()).copied().collect();
    keys.sort_unstable();
    keys.dedup();
    keys.into_iter()
        .filter_map(|k| {
            let (s, t) = (src.get(k).copied().unwrap_or(0), tgt.get(k).copied().unwrap_or(0));
            (s != t).then(|| describe(k, s, t))
        })
        .collect()
}

fn control_sequences(text: &str, allowlist: &[String]) -> Vec<String> {
    Lexer::new(text)
        .filter_map(|tok| match tok.kind {
            TokKind::Word(w) if !allowlist.iter().any(|a| a == w) => Some(format!("\\{w}")),
            TokKind::Symbol(c @ ('%' | '&' | '#' | '$' | '_' | '{' | '}')) => Some(format!("\\{c}")),
            // a non-ASCII letter after a backslash: a translated command name
            TokKind::Symbol(c) if c.is_alphabetic() => {
                let name: String = text[tok.start + 1..].chars().take_while(|c| c.is_alphabetic()).collect();
                Some(format!("\\{name}"))
            }
            _ => None,
        })
        .collect()
}

enum Completeness {
    Pass,
    Issues(Vec<String>),
    Unparseable,
}

fn parse_completeness(reply: &str) -> Completeness {
    let trimmed = reply.trim();
    if trimmed == "PASS" {
        return Completeness::Pass;
    }
    let issues: Vec<String> = trimmed
        .lines()
        .filter_map(|l| l.trim().strip_prefix("ERROR:"))
        .map(|s| s.trim().to_string())
        .collect();
    if issues.is_empty() {
        Completeness::Unparseable
    } else {
        Completeness::Issues(issues)
    }
}

/// Validates the candidate translations of `unit_ids`.
pub fn validate_translations(
    units: &[TranslationUnit],
    unit_ids: &[usize],
    round: u32,
    ctx: &AgentContext<'_>,
) -> (ErrorReport, Vec<Warning>) {
    let mut report = ErrorReport { round, findings: Vec::new() };
    let mut warnings = Vec::new();
    for &id in unit_ids {
        let unit = &units[id];
        let Some(translation) = unit.translated_text.as_deref() else { continue };
        let mut found: Vec<Finding> = placeholder_findings(&unit.source_text, translation)
            .into_iter()
            .map(|description| Finding { unit_id: id, dimension: Dimension::PlaceholderIntegrity, description })
            .collect();
        found.extend(
            command_findings(&unit.source_text, translation, &ctx.config.command_allowlist)
                .into_iter()
                .map(|description| Finding { unit_id: id, dimension: Dimension::CommandIntegrity, description }),
        );
        if found.is_empty() && ctx.config.content_check {
            let user = format!("[Original]\n{}\n\n[Translation]\n{translation}", unit.source_text);
            let req = ctx.request(Agent::Validator, ctx.prompts.validator.clone(), user);
            match ctx.llm.chat(&req).map(|r| parse_completeness(&r)) {
                Ok(Completeness::Pass) => {}
                Ok(Completeness::Issues(issues)) => found.extend(issues.into_iter().map(|description| Finding {
                    unit_id: id,
                    dimension: Dimension::ContentCompleteness,
                    description,
                })),
                Ok(Completeness::Unparseable) => warnings.push(Warning::new(
                    WarningKind::CompletenessSkipped,
                    format!("unit {id}: completeness reply not understood; check skipped"),
                )),
                Err(e) => warnings.push(Warning::new(
                    WarningKind::CompletenessSkipped,
                    format!("unit {id}: completeness check failed ({e}); skipped"),
                )),
            }
        }
        report.findings.extend(found);
    }
    (report, warnings)
}
