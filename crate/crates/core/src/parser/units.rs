//! Translation units and the section splitter.

use super::environments::env_name_of;
use super::placeholder::{PlaceholderMap, ANY_TOKEN};
use super::scan::{document_body, match_bracket, match_group, skip_ws, Lexer, TokKind};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Granularity {
    SectionContext,
    Environment,
    Caption,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum UnitStatus {
    Pending,
    Translated,
    Validated,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TranslationUnit {
    pub id: usize,
    pub granularity: Granularity,
    pub source_text: String,
    pub needs_translation: bool,
    pub translated_text: Option<String>,
    pub status: UnitStatus,
    /// The placeholder standing for this unit (ENV and CAP units).
    pub token: Option<String>,
    /// Environment name (ENV units).
    pub env_name: Option<String>,
}

impl TranslationUnit {
    fn new(id: usize, granularity: Granularity, source_text: impl Into<String>, needs_translation: bool) -> Self {
        Self {
            id,
            granularity,
            source_text: source_text.into(),
            needs_translation,
            translated_text: None,
            status: UnitStatus::Pending,
            token: None,
            env_name: None,
        }
    }

    /// The text the generator emits: the translation once validated,
    /// otherwise the source.
    pub fn output_text(&self) -> &str {
        match (&self.status, &self.translated_text) {
            (UnitStatus::Validated, Some(t)) => t,
            _ => &self.source_text,
        }
    }
}

/// One row of the persisted units manifest.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub id: usize,
    pub granularity: Granularity,
    pub needs_translation: bool,
    pub source_text: String,
}

impl From<&TranslationUnit> for ManifestEntry {
    fn from(u: &TranslationUnit) -> Self {
        Self {
            id: u.id,
            granularity: u.granularity,
            needs_translation: u.needs_translation,
            source_text: u.source_text.clone(),
        }
    }
}

fn is_section_command(word: &str) -> bool {
    matches!(word, "section" | "subsection" | "subsubsection")
}

/// Commands whose arguments are keys or layout values, never prose.
const NON_PROSE_ARGS: &[&str] = &[
    "label", "ref", "eqref", "autoref", "cref", "Cref", "cite", "citep", "citet", "pageref",
    "includegraphics", "vspace", "hspace", "input", "include", "bibliography",
    "bibliographystyle", "usepackage", "url", "setlength", "addtolength",
];

/// True if `text` holds natural language once comments, control sequences,
/// placeholders and key-like arguments are discounted.
pub fn has_prose(text: &str) -> bool {
    let stripped = ANY_TOKEN.replace_all(text, " ");
    let mut rest = String::with_capacity(stripped.len());
    let mut last = 0;
    let mut lexer = Lexer::new(&stripped);
    while let Some(tok) = lexer.next() {
        rest.push_str(&stripped[last..tok.start]);
        last = tok.end;
        if let TokKind::Word(word) = tok.kind {
            if NON_PROSE_ARGS.contains(&word) {
                let mut pos = skip_ws(&stripped, tok.end);
                if let Some(end) = match_bracket(&stripped, pos) {
                    pos = skip_ws(&stripped, end);
                }
                if let Some(end) = match_group(&stripped, pos) {
                    last = end;
                    lexer.seek(end);
                }
            }
        }
    }
    rest.push_str(&stripped[last..]);
    rest.chars().any(char::is_alphabetic)
}

/// Partitions the substituted text at every sectioning command. With a
/// `\begin{document}`, the preamble (through that command) and the closing
/// `\end{document}` tail are separate untranslated units.
pub fn split_sections(substituted_text: &str) -> Vec<TranslationUnit> {
    let mut units = Vec::new();
    let (body_start, body_end, framed) = match document_body(substituted_text) {
        Some((s, e)) => (s, e, true),
        None => (0, substituted_text.len(), false),
    };
    if framed {
        units.push(TranslationUnit::new(0, Granularity::SectionContext, &substituted_text[..body_start], false));
    }

    let mut cuts = vec![body_start];
    for tok in Lexer::at(substituted_text, body_start) {
        if tok.start >= body_end {
            break;
        }
        if let TokKind::Word(word) = tok.kind {
            if is_section_command(word) {
                cuts.push(tok.start);
            }
        }
    }
    cuts.push(body_end);
    for pair in cuts.windows(2) {
        let text = &substituted_text[pair[0]..pair[1]];
        let id = units.len();
        units.push(TranslationUnit::new(id, Granularity::SectionContext, text, has_prose(text)));
    }

    if framed {
        let id = units.len();
        units.push(TranslationUnit::new(id, Granularity::SectionContext, &substituted_text[body_end..], false));
    }
    units
}

/// The full unit list: section units, then one ENVIRONMENT unit per ENV
/// entry, then one CAPTION unit per CAP entry, each in document order.
pub fn enumerate_units(substituted_text: &str, env_map: &PlaceholderMap, cap_map: &PlaceholderMap) -> Vec<TranslationUnit> {
    let mut units = split_sections(substituted_text);
    for entry in &env_map.entries {
        let mut unit = TranslationUnit::new(units.len(), Granularity::Environment, &entry.original_text, false);
        unit.token = Some(entry.token.clone());
        unit.env_name = Some(env_name_of(&entry.original_text));
        units.push(unit);
    }
    for entry in &cap_map.entries {
        let needs = !entry.original_text.trim().is_empty();
        let mut unit = TranslationUnit::new(units.len(), Granularity::Caption, &entry.original_text, needs);
        unit.token = Some(entry.token.clone());
        units.push(unit);
    }
    units
}
