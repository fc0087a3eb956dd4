//! Bilingual term dictionary and the Terminology Extractor.

use super::AgentContext;
use crate::diag::{Warning, WarningKind};
use crate::llm::Agent;
use crate::prompts::language_name;
use once_cell::sync::Lazy;
use regex::Regex;
use serde::{Deserialize, Serialize};

static PAIR_LINE: Lazy<Regex> = Lazy::new(|| {
    Regex::new(r#"^\s*(?:[-*•]\s*|\d+[.)]\s*)?"([^"]+)"\s*[-–—]\s*"([^"]+)"\s*[,;]?\s*$"#).unwrap()
});

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TermPair {
    pub source: String,
    pub target: String,
}

/// Insertion-ordered, first occurrence of a source term wins.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TermDictionary {
    pairs: Vec<TermPair>,
}

impl TermDictionary {
    pub fn new() -> Self {
        Self::default()
    }

    /// Returns false (and changes nothing) if `source` is already present.
    pub fn insert(&mut self, source: impl Into<String>, target: impl Into<String>) -> bool {
        let source = source.into();
        if self.pairs.iter().any(|p| p.source == source) {
            return false;
        }
        self.pairs.push(TermPair { source, target: target.into() });
        true
    }

    pub fn get(&self, source: &str) -> Option<&str> {
        self.pairs.iter().find(|p| p.source == source).map(|p| p.target.as_str())
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn pairs(&self) -> &[TermPair] {
        &self.pairs
    }

    /// The `cap` most recent pairs as `"<src>" - "<tgt>"` lines.
    pub fn render(&self, cap: usize) -> String {
        let skip = self.pairs.len().saturating_sub(cap);
        self.pairs[skip..]
            .iter()
            .map(|p| format!("\"{}\" - \"{}\"", p.source, p.target))
            .collect::<Vec<_>>()
            .join("\n")
    }
}

/// Parses an extractor reply into pairs plus the lines that did not parse.
pub fn parse_term_reply(reply: &str) -> (Vec<TermPair>, Vec<String>) {
    let trimmed = reply.trim();
    if matches!(trimmed, "N/A" | "'N/A'" | "\"N/A\"") {
        return (Vec::new(), Vec::new());
    }
    let mut pairs = Vec::new();
    let mut malformed = Vec::new();
    for line in trimmed.lines().filter(|l| !l.trim().is_empty()) {
        match PAIR_LINE.captures(line) {
            Some(c) => pairs.push(TermPair { source: c[1].trim().to_string(), target: c[2].trim().to_string() }),
            None => malformed.push(line.to_string()),
        }
    }
    (pairs, malformed)
}

/// Asks the extractor for term pairs in (source, translation) and merges
/// them into `dict`. Failures leave the dictionary untouched.
pub fn extract_terms(
    source: &str,
    translation: &str,
    dict: &mut TermDictionary,
    ctx: &AgentContext<'_>,
) -> Vec<Warning> {
    let user = format!(
        "{} sentence:\n{source}\n\n{} translation:\n{translation}",
        language_name(&ctx.config.source_language),
        ctx.target_name
    );
    let req = ctx.request(Agent::Terminology, ctx.prompts.terminology.clone(), user);
    let reply = match ctx.llm.chat(&req) {
        Ok(r) => r,
        Err(e) => return vec![Warning::new(WarningKind::TermsFailed, format!("term extraction failed: {e}"))],
    };
    let (pairs, malformed) = parse_term_reply(&reply);
    for pair in pairs {
        dict.insert(pair.source, pair.target);
    }
    match malformed.first() {
        None => Vec::new(),
        Some(first) => {
            let shown: String = first.chars().take(80).collect();
            let message = format!("skipped {} malformed term line(s), first {shown:?}", malformed.len());
            vec![Warning::new(WarningKind::MalformedTerm, message)]
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_occurrence_wins() {
        let mut d = TermDictionary::new();
        assert!(d.insert("reinforcement learning", "强化学习"));
        assert!(!d.insert("reinforcement learning", "增强学习"));
        assert_eq!(d.get("reinforcement learning"), Some("强化学习"));
        assert_eq!(d.len(), 1);
    }

    #[test]
    fn na_yields_nothing() {
        assert_eq!(parse_term_reply("N/A"), (vec![], vec![]));
        assert_eq!(parse_term_reply("  'N/A'\n"), (vec![], vec![]));
    }

    #[test]
    fn two_good_lines_one_garbage() {
        let reply = "\"reward model\" - \"奖励模型\"\nhere are the terms:\n- \"RL\" – \"强化学习\"";
        let (pairs, bad) = parse_term_reply(reply);
        assert_eq!(pairs.len(), 2);
        assert_eq!(pairs[1], TermPair { source: "RL".into(), target: "强化学习".into() });
        assert_eq!(bad, vec!["here are the terms:".to_string()]);
    }

    #[test]
    fn render_caps_to_most_recent() {
        let mut d = TermDictionary::new();
        for i in 0..5 {
            d.insert(format!("s{i}"), format!("t{i}"));
        }
        assert_eq!(d.render(2), "\"s3\" - \"t3\"\n\"s4\" - \"t4\"");
        assert_eq!(d.render(10).lines().count(), 5);
    }
}
