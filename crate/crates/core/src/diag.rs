//! Non-fatal diagnostics collected while processing a document.

use serde::{Deserialize, Serialize};
use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WarningKind {
    MissingInclude,
    UnbalancedBraces,
    UnmatchedEnvironment,
    FilterDefaulted,
    MalformedTerm,
    SummaryTooLong,
    SummaryFailed,
    TermsFailed,
    CompletenessSkipped,
    TranslationFailed,
    NoPreamble,
    Compile,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Warning {
    pub kind: WarningKind,
    pub message: String,
}

impl Warning {
    pub fn new(kind: WarningKind, message: impl Into<String>) -> Self {
        let warning = Self { kind, message: message.into() };
        log::warn!("{warning}");
        warning
    }
}

impl fmt::Display for Warning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}: {}", self.kind, self.message)
    }
}
