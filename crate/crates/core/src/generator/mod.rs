//! Reassembles translated units into LaTeX files and compiles them.

mod compile;

pub use crate::evaluator::{CompileReport, Engine};
pub use compile::{compile, find_on_path, CompileOptions};

use crate::diag::{Warning, WarningKind};
use crate::parser::scan::document_body;
use crate::parser::{
    Granularity, MergedDocument, PlaceholderKind, PlaceholderMap, TranslationUnit, UnmergeError, ANY_TOKEN,
};
use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GenerateError {
    #[error("placeholder {token} has no map entry")]
    UnresolvedPlaceholder { token: String },
    #[error("placeholder {token} was never used in the reassembled text")]
    MissingPlaceholderUse { token: String },
    #[error("placeholder {token} used {count} times")]
    DuplicatePlaceholderUse { token: String, count: usize },
    #[error(transparent)]
    Unmerge(#[from] UnmergeError),
    #[error("{}: {message}", path.display())]
    Io { path: PathBuf, message: String },
    #[error("TeX engine {0} not found on PATH")]
    EngineNotFound(String),
    #[error("{engine} exceeded {secs} s")]
    EngineTimeout { engine: String, secs: u64 },
}

impl GenerateError {
    pub(crate) fn io(path: &Path, err: std::io::Error) -> Self {
        Self::Io { path: path.to_path_buf(), message: err.to_string() }
    }
}

/// Replaces every `kind` token in `text` with its unit's output, counting
/// uses per token.
fn substitute(
    text: &str,
    kind: PlaceholderKind,
    replacements: &BTreeMap<&str, &str>,
    uses: &mut BTreeMap<String, usize>,
) -> Result<String, GenerateError> {
    let mut out = String::with_capacity(text.len());
    let mut last = 0;
    for m in ANY_TOKEN.find_iter(text) {
        let tok = m.as_str();
        if PlaceholderKind::of_token(tok) != Some(kind) {
            continue;
        }
        let Some(replacement) = replacements.get(tok) else {
            return Err(GenerateError::UnresolvedPlaceholder { token: tok.to_string() });
        };
        out.push_str(&text[last..m.start()]);
        out.push_str(replacement);
        last = m.end();
        *uses.entry(tok.to_string()).or_insert(0) += 1;
    }
    out.push_str(&text[last..]);
    Ok(out)
}

/// Token → unit output, falling back to the map's original text.
fn replacement_table<'a>(map: &'a PlaceholderMap, by_token: &BTreeMap<&str, &'a str>) -> BTreeMap<&'a str, &'a str> {
    map.entries
        .iter()
        .map(|e| (e.token.as_str(), by_token.get(e.token.as_str()).copied().unwrap_or(&e.original_text)))
        .collect()
}

/// Joins section units in id order and resolves ENV tokens, then CAP
/// tokens. FILE tokens are left for [`unmerge`]. Every map entry must be
/// used exactly once.
pub fn reassemble(
    units: &[TranslationUnit],
    cap_map: &PlaceholderMap,
    env_map: &PlaceholderMap,
    merged: &MergedDocument,
) -> Result<String, GenerateError> {
    let mut ordered: Vec<&TranslationUnit> = units.iter().collect();
    ordered.sort_by_key(|u| u.id);
    let body: String = ordered
        .iter()
        .filter(|u| u.granularity == Granularity::SectionContext)
        .map(|u| u.output_text())
        .collect();

    let by_token: BTreeMap<&str, &str> =
        units.iter().filter_map(|u| u.token.as_deref().map(|t| (t, u.output_text()))).collect();
    let env_table = replacement_table(env_map, &by_token);
    let cap_table = replacement_table(cap_map, &by_token);

    let mut uses = BTreeMap::new();
    let text = substitute(&body, PlaceholderKind::Env, &env_table, &mut uses)?;
    let text = substitute(&text, PlaceholderKind::Cap, &cap_table, &mut uses)?;

    if let Some(m) = ANY_TOKEN.find_iter(&text).find(|m| merged.file_map.get(m.as_str()).is_none()) {
        return Err(GenerateError::UnresolvedPlaceholder { token: m.as_str().to_string() });
    }
    for entry in env_map.entries.iter().chain(&cap_map.entries) {
        match uses.get(&entry.token).copied().unwrap_or(0) {
            1 => {}
            0 => return Err(GenerateError::MissingPlaceholderUse { token: entry.token.clone() }),
            count => return Err(GenerateError::DuplicatePlaceholderUse { token: entry.token.clone(), count }),
        }
    }
    Ok(text)
}

/// Writes each file slice of `full_text` to its relative path under
/// `out_dir`. Returns the written paths, main file first.
pub fn unmerge(full_text: &str, merged: &MergedDocument, out_dir: &Path) -> Result<Vec<PathBuf>, GenerateError> {
    let files = merged.split_files(full_text)?;
    let mut written = Vec::with_capacity(files.len());
    for (rel, content) in files {
        let path = out_dir.join(&rel);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent).map_err(|e| GenerateError::io(parent, e))?;
        }
        fs::write(&path, content).map_err(|e| GenerateError::io(&path, e))?;
        written.push(path);
    }
    Ok(written)
}

/// Built-in per-language preamble lines.
pub fn default_preamble_templates() -> BTreeMap<String, String> {
    let cjk = "\\usepackage{xeCJK}\n".to_string();
    ["zh", "ja", "ko"].into_iter().map(|lang| (lang.to_string(), cjk.clone())).collect()
}

/// Inserts the template for `target_language` just before
/// `\begin{document}`. Languages without a template are left untouched, and
/// text that already carries the template is returned as is.
pub fn inject_language_preamble(
    full_text: &str,
    target_language: &str,
    templates: &BTreeMap<String, String>,
) -> (String, Option<Warning>) {
    let Some(template) = templates.get(target_language).filter(|t| !t.trim().is_empty()) else {
        return (full_text.to_string(), None);
    };
    let mut block = template.clone();
    if !block.ends_with('\n') {
        block.push('\n');
    }
    if full_text.contains(block.as_str()) {
        return (full_text.to_string(), None);
    }
    match document_body(full_text) {
        Some((after_begin, _)) => {
            let at = full_text[..after_begin].rfind("\\begin").unwrap_or(0);
            let mut out = String::with_capacity(full_text.len() + block.len());
            out.push_str(&full_text[..at]);
            out.push_str(&block);
            out.push_str(&full_text[at..]);
            (out, None)
        }
        None => (
            format!("{block}{full_text}"),
            Some(Warning::new(
                WarningKind::NoPreamble,
                format!("no \\begin{{document}} found; {target_language} preamble lines prepended"),
            )),
        ),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::{parse_project, ProjectSource, UnitStatus};

    fn parsed(files: &[(&str, &str)]) -> crate::parser::ParsedDocument {
        let project = ProjectSource {
            root_dir: PathBuf::from("."),
            main_file: files[0].0.to_string(),
            files: files.iter().map(|(p, t)| (p.to_string(), t.to_string())).collect(),
        };
        parse_project(&project).unwrap()
    }

    const DOC: &str = "\\documentclass{article}\n\\begin{document}\n\\section{A}\nHello.\n\\begin{figure}\n\\caption{A {nested} cap}\n\\end{figure}\n\\begin{equation}x\\end{equation}\n\\end{document}\n";

    #[test]
    fn untranslated_units_reassemble_to_source() {
        let doc = parsed(&[("main.tex", DOC)]);
        let text = reassemble(&doc.units, &doc.cap_map, &doc.env_map, &doc.merged).unwrap();
        assert_eq!(text, DOC);
    }

    #[test]
    fn translated_caption_changes_only_caption() {
        let mut doc = parsed(&[("main.tex", DOC)]);
        let cap = doc.units.iter_mut().find(|u| u.granularity == Granularity::Caption).unwrap();
        cap.translated_text = Some("一个{嵌套}标题".into());
        cap.status = UnitStatus::Validated;
        let text = reassemble(&doc.units, &doc.cap_map, &doc.env_map, &doc.merged).unwrap();
        assert_eq!(text, DOC.replace("A {nested} cap", "一个{嵌套}标题"));
    }

    #[test]
    fn failed_unit_falls_back_to_source() {
        let mut doc = parsed(&[("main.tex", DOC)]);
        let sec = doc.units.iter_mut().find(|u| u.source_text.contains("Hello")).unwrap();
        sec.translated_text = Some("broken".into());
        sec.status = UnitStatus::Failed;
        assert_eq!(reassemble(&doc.units, &doc.cap_map, &doc.env_map, &doc.merged).unwrap(), DOC);
    }

    #[test]
    fn dropped_env_token_is_missing_use() {
        let mut doc = parsed(&[("main.tex", DOC)]);
        let sec = doc.units.iter_mut().find(|u| u.source_text.contains("Hello")).unwrap();
        let token = doc.env_map.entries[0].token.clone();
        sec.translated_text = Some(sec.source_text.replace(&token, ""));
        sec.status = UnitStatus::Validated;
        assert_eq!(
            reassemble(&doc.units, &doc.cap_map, &doc.env_map, &doc.merged),
            Err(GenerateError::MissingPlaceholderUse { token })
        );
    }

    #[test]
    fn invented_token_is_unresolved() {
        let mut doc = parsed(&[("main.tex", DOC)]);
        let sec = doc.units.iter_mut().find(|u| u.source_text.contains("Hello")).unwrap();
        sec.translated_text = Some(format!("{}<PLACEHOLDER_ENV_9>", sec.source_text));
        sec.status = UnitStatus::Validated;
        assert_eq!(
            reassemble(&doc.units, &doc.cap_map, &doc.env_map, &doc.merged),
            Err(GenerateError::UnresolvedPlaceholder { token: "<PLACEHOLDER_ENV_9>".into() })
        );
    }

    #[test]
    fn two_file_unmerge_reproduces_inputs() {
        let main = "\\documentclass{article}\n\\begin{document}\n\\input{sec/intro}\n\\end{document}\n";
        let intro = "\\section{Intro}\nText.\n";
        let doc = parsed(&[("main.tex", main), ("sec/intro.tex", intro)]);
        let text = reassemble(&doc.units, &doc.cap_map, &doc.env_map, &doc.merged).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let written = unmerge(&text, &doc.merged, dir.path()).unwrap();
        assert_eq!(written.len(), 2);
        assert_eq!(fs::read_to_string(dir.path().join("main.tex")).unwrap(), main);
        assert_eq!(fs::read_to_string(dir.path().join("sec/intro.tex")).unwrap(), intro);
    }

    #[test]
    fn unbalanced_boundary_is_reported() {
        let doc = parsed(&[("main.tex", "\\input{a}\n"), ("a.tex", "x")]);
        let broken = doc.merged.text.replace("<PLACEHOLDER_FILE_0_end>", "");
        let dir = tempfile::tempdir().unwrap();
        assert!(matches!(
            unmerge(&broken, &doc.merged, dir.path()),
            Err(GenerateError::Unmerge(UnmergeError::UnbalancedFileBoundaries { .. }))
        ));
    }

    #[test]
    fn preamble_injection() {
        let templates = default_preamble_templates();
        let (once, w) = inject_language_preamble(DOC, "zh", &templates);
        assert!(w.is_none());
        assert_eq!(once.matches("\\usepackage{xeCJK}").count(), 1);
        assert!(once.contains("\\usepackage{xeCJK}\n\\begin{document}"));
        assert_eq!(inject_language_preamble(&once, "zh", &templates).0, once);
        assert_eq!(inject_language_preamble(DOC, "en", &templates).0, DOC);
        let (frag, w) = inject_language_preamble("Just text.", "ja", &templates);
        assert!(frag.starts_with("\\usepackage{xeCJK}\n"));
        assert_eq!(w.unwrap().kind, WarningKind::NoPreamble);
    }
}
