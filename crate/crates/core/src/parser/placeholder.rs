//! Placeholder tokens and the mapping tables that undo them.

use once_cell::sync::Lazy;
use regex::Regex;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fs;
use std::io;
use std::path::Path;

/// Matches every placeholder token this crate emits.
pub static ANY_TOKEN: Lazy<Regex> =
    Lazy::new(|| Regex::new(r"<PLACEHOLDER_[A-Za-z0-9_]+>").unwrap());

pub static ENV_TOKEN: Lazy<Regex> = Lazy::new(|| Regex::new(r"<PLACEHOLDER_ENV_(\d+)>").unwrap());

pub static CAP_TOKEN: Lazy<Regex> = Lazy::new(|| Regex::new(r"<PLACEHOLDER_CAP_(\d+)>").unwrap());

pub static FILE_TOKEN: Lazy<Regex> =
    Lazy::new(|| Regex::new(r"<PLACEHOLDER_FILE_(\d+)_(begin|end)>").unwrap());

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum PlaceholderKind {
    Cap,
    Env,
    FileBegin,
    FileEnd,
}

impl PlaceholderKind {
    pub fn token(self, index: usize) -> String {
        match self {
            Self::Cap => format!("<PLACEHOLDER_CAP_{index}>"),
            Self::Env => format!("<PLACEHOLDER_ENV_{index}>"),
            Self::FileBegin => format!("<PLACEHOLDER_FILE_{index}_begin>"),
            Self::FileEnd => format!("<PLACEHOLDER_FILE_{index}_end>"),
        }
    }

    /// Classifies a token string produced by [`PlaceholderKind::token`].
    pub fn of_token(token: &str) -> Option<Self> {
        if CAP_TOKEN.is_match(token) {
            Some(Self::Cap)
        } else if ENV_TOKEN.is_match(token) {
            Some(Self::Env)
        } else if let Some(c) = FILE_TOKEN.captures(token) {
            Some(if &c[2] == "begin" { Self::FileBegin } else { Self::FileEnd })
        } else {
            None
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlaceholderEntry {
    pub token: String,
    pub kind: PlaceholderKind,
    pub original_text: String,
}

/// Ordered token → original text table. Persisted as one JSON file per kind.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlaceholderMap {
    pub entries: Vec<PlaceholderEntry>,
}

impl PlaceholderMap {
    pub fn push(&mut self, kind: PlaceholderKind, original_text: impl Into<String>) -> String {
        let index = self.entries.iter().filter(|e| e.kind == kind).count();
        let token = kind.token(index);
        self.entries.push(PlaceholderEntry {
            token: token.clone(),
            kind,
            original_text: original_text.into(),
        });
        token
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, token: &str) -> Option<&PlaceholderEntry> {
        self.entries.iter().find(|e| e.token == token)
    }

    pub fn count_kind(&self, kind: PlaceholderKind) -> usize {
        self.entries.iter().filter(|e| e.kind == kind).count()
    }

    /// Replaces every token of this map found in `text` with its original
    /// text. Tokens not in the map are left alone.
    pub fn restore(&self, text: &str) -> String {
        let lookup: BTreeMap<&str, &str> = self
            .entries
            .iter()
            .map(|e| (e.token.as_str(), e.original_text.as_str()))
            .collect();
        ANY_TOKEN
            .replace_all(text, |caps: &regex::Captures<'_>| {
                let tok = &caps[0];
                lookup.get(tok).map_or_else(|| tok.to_string(), |s| s.to_string())
            })
            .into_owned()
    }

    pub fn write_json(&self, path: &Path) -> io::Result<()> {
        let json = serde_json::to_string_pretty(self).map_err(io::Error::other)?;
        fs::write(path, json + "\n")
    }

    pub fn read_json(path: &Path) -> io::Result<Self> {
        let text = fs::read_to_string(path)?;
        serde_json::from_str(&text).map_err(io::Error::other)
    }
}

/// Counts placeholder tokens of each kind in `text`.
pub fn count_tokens(text: &str) -> BTreeMap<PlaceholderKind, usize> {
    let mut counts = BTreeMap::new();
    for m in ANY_TOKEN.find_iter(text) {
        if let Some(kind) = PlaceholderKind::of_token(m.as_str()) {
            *counts.entry(kind).or_insert(0) += 1;
        }
    }
    counts
}
