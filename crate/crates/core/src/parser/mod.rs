//! Turns a LaTeX project into placeholdered text plus translation units.
//!
//! The passes run in a fixed order: files are merged into one document,
//! caption bodies inside floats are swapped for CAP tokens, top-level body
//! environments for ENV tokens, and the remaining text is cut at sectioning
//! commands. Every pass is lossless; the maps it produces restore the input.

mod captions;
mod environments;
mod merge;
mod placeholder;
pub(crate) mod scan;
mod units;

use crate::diag::Warning;
use std::path::PathBuf;
use thiserror::Error;

pub use captions::{extract_captions, is_float_env};
pub use environments::{env_name_of, extract_environments, DISPLAY_MATH};
pub use merge::{merge_project, FileBoundary, MergedDocument, ProjectSource, UnmergeError};
pub use placeholder::{
    count_tokens, PlaceholderEntry, PlaceholderKind, PlaceholderMap, ANY_TOKEN, CAP_TOKEN, ENV_TOKEN, FILE_TOKEN,
};
pub use units::{enumerate_units, has_prose, split_sections, Granularity, ManifestEntry, TranslationUnit, UnitStatus};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("main file {0} not found in project")]
    MissingMainFile(String),
    #[error("inclusion cycle: {}", .0.join(" -> "))]
    InclusionCycle(Vec<String>),
    #[error("{}: {message}", path.display())]
    Io { path: PathBuf, message: String },
}

/// Everything the parser produces for one project.
#[derive(Debug, Clone)]
pub struct ParsedDocument {
    pub merged: MergedDocument,
    pub cap_map: PlaceholderMap,
    pub env_map: PlaceholderMap,
    /// Merged text after CAP and ENV substitution.
    pub substituted_text: String,
    pub units: Vec<TranslationUnit>,
    pub warnings: Vec<Warning>,
}

pub fn parse_project(project: &ProjectSource) -> Result<ParsedDocument, ParseError> {
    let (merged, mut warnings) = merge_project(project)?;
    let (captioned, cap_map, w) = extract_captions(&merged.text);
    warnings.extend(w);
    let (substituted_text, env_map, w) = extract_environments(&captioned);
    warnings.extend(w);
    let units = enumerate_units(&substituted_text, &env_map, &cap_map);
    Ok(ParsedDocument {
        merged,
        cap_map,
        env_map,
        substituted_text,
        units,
        warnings,
    })
}

impl ParsedDocument {
    pub fn manifest(&self) -> Vec<ManifestEntry> {
        self.units.iter().map(ManifestEntry::from).collect()
    }

    /// Undoes ENV then CAP substitution, yielding the merged text.
    pub fn restore(&self) -> String {
        self.cap_map.restore(&self.env_map.restore(&self.substituted_text))
    }
}
