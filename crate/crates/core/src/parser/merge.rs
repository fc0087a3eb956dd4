//! Multi-file project loading, merging into one document, and splitting back.

use super::placeholder::{PlaceholderKind, PlaceholderMap, FILE_TOKEN};
use super::scan::{skip_ws, Lexer, TokKind};
use super::ParseError;
use crate::diag::{Warning, WarningKind};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use thiserror::Error;

/// The `.tex` sources of one project, keyed by `/`-separated relative path.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProjectSource {
    pub root_dir: PathBuf,
    pub main_file: String,
    pub files: BTreeMap<String, String>,
}

impl ProjectSource {
    /// Reads every `.tex` file below `root_dir`.
    pub fn load(root_dir: &Path, main_file: &str) -> Result<Self, ParseError> {
        let mut files = BTreeMap::new();
        for entry in walkdir::WalkDir::new(root_dir).sort_by_file_name() {
            let entry = entry.map_err(|e| ParseError::Io {
                path: root_dir.to_path_buf(),
                message: e.to_string(),
            })?;
            let path = entry.path();
            if !entry.file_type().is_file() || path.extension().is_none_or(|x| x != "tex") {
                continue;
            }
            let rel = relative_key(root_dir, path);
            let text = fs::read_to_string(path).map_err(|e| ParseError::Io {
                path: path.to_path_buf(),
                message: e.to_string(),
            })?;
            files.insert(rel, text);
        }
        let project = Self {
            root_dir: root_dir.to_path_buf(),
            main_file: normalize(main_file),
            files,
        };
        if !project.files.contains_key(&project.main_file) {
            return Err(ParseError::MissingMainFile(project.main_file));
        }
        Ok(project)
    }

    /// Picks the entry file of a project directory: `main.tex` if present,
    /// otherwise the single top-level `.tex` file declaring `\documentclass`.
    pub fn detect_main(root_dir: &Path) -> Option<String> {
        if root_dir.join("main.tex").is_file() {
            return Some("main.tex".into());
        }
        let mut candidates: Vec<String> = fs::read_dir(root_dir)
            .ok()?
            .filter_map(Result::ok)
            .map(|e| e.path())
            .filter(|p| p.extension().is_some_and(|x| x == "tex"))
            .filter(|p| fs::read_to_string(p).is_ok_and(|t| t.contains("\\documentclass")))
            .map(|p| relative_key(root_dir, &p))
            .collect();
        candidates.sort();
        (candidates.len() == 1).then(|| candidates.remove(0))
    }
}

fn relative_key(root: &Path, path: &Path) -> String {
    let rel = path.strip_prefix(root).unwrap_or(path);
    rel.components()
        .map(|c| c.as_os_str().to_string_lossy())
        .collect::<Vec<_>>()
        .join("/")
}

fn normalize(path: &str) -> String {
    let mut parts: Vec<&str> = Vec::new();
    for part in path.split('/') {
        match part {
            "" | "." => {}
            ".." => {
                parts.pop();
            }
            p => parts.push(p),
        }
    }
    parts.join("/")
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileBoundary {
    pub index: usize,
    pub path: String,
    /// The include directive the merged content replaced, e.g. `\input{intro}`.
    pub directive: String,
    /// Byte span of the file content in the merged text, between its tokens.
    pub begin_offset: usize,
    pub end_offset: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MergedDocument {
    pub main_file: String,
    pub text: String,
    pub file_boundaries: Vec<FileBoundary>,
    /// FILE_BEGIN entries carry the directive, FILE_END entries the path.
    pub file_map: PlaceholderMap,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum UnmergeError {
    #[error("unbalanced file boundary at {token}")]
    UnbalancedFileBoundaries { token: String },
    #[error("file boundary {token} has no recorded file")]
    UnknownFile { token: String },
}

/// Inlines every resolvable `\input`/`\include` of `project.main_file`,
/// depth-first, wrapping each pulled-in body in FILE tokens.
pub fn merge_project(project: &ProjectSource) -> Result<(MergedDocument, Vec<Warning>), ParseError> {
    if !project.files.contains_key(&project.main_file) {
        return Err(ParseError::MissingMainFile(project.main_file.clone()));
    }
    let mut state = MergeState {
        project,
        stack: vec![project.main_file.clone()],
        file_map: PlaceholderMap::default(),
        includes: Vec::new(),
        warnings: Vec::new(),
    };
    let text = state.expand(&project.main_file)?;

    let mut file_boundaries: Vec<FileBoundary> = state
        .includes
        .iter()
        .enumerate()
        .map(|(index, (path, directive))| FileBoundary {
            index,
            path: path.clone(),
            directive: directive.clone(),
            begin_offset: 0,
            end_offset: 0,
        })
        .collect();
    for caps in FILE_TOKEN.captures_iter(&text) {
        let whole = caps.get(0).unwrap();
        let index: usize = caps[1].parse().unwrap();
        let Some(b) = file_boundaries.get_mut(index) else { continue };
        if &caps[2] == "begin" {
            b.begin_offset = whole.end();
        } else {
            b.end_offset = whole.start();
        }
    }

    Ok((
        MergedDocument {
            main_file: project.main_file.clone(),
            text,
            file_boundaries,
            file_map: state.file_map,
        },
        state.warnings,
    ))
}

struct MergeState<'a> {
    project: &'a ProjectSource,
    stack: Vec<String>,
    file_map: PlaceholderMap,
    /// (path, directive) per FILE index
    includes: Vec<(String, String)>,
    warnings: Vec<Warning>,
}

impl MergeState<'_> {
    fn expand(&mut self, path: &str) -> Result<String, ParseError> {
        let text = &self.project.files[path];
        let mut out = String::with_capacity(text.len());
        let mut last = 0;
        let mut lexer = Lexer::new(text);
        while let Some(tok) = lexer.next() {
            let TokKind::Word(word @ ("input" | "include")) = tok.kind else { continue };
            let Some((arg, directive_end)) = include_arg(text, tok.end) else { continue };
            let directive = &text[tok.start..directive_end];
            let Some(target) = self.resolve(arg) else {
                self.warnings.push(Warning::new(
                    WarningKind::MissingInclude,
                    format!("{path}: \\{word}{{{arg}}} does not resolve to a project file; left as is"),
                ));
                continue;
            };
            if let Some(pos) = self.stack.iter().position(|p| *p == target) {
                let mut cycle = self.stack[pos..].to_vec();
                cycle.push(target);
                return Err(ParseError::InclusionCycle(cycle));
            }

            let begin = self.file_map.push(PlaceholderKind::FileBegin, directive);
            let end = self.file_map.push(PlaceholderKind::FileEnd, target.clone());
            self.includes.push((target.clone(), directive.to_string()));

            self.stack.push(target.clone());
            let body = self.expand(&target)?;
            self.stack.pop();

            out.push_str(&text[last..tok.start]);
            out.push_str(&begin);
            out.push_str(&body);
            out.push_str(&end);
            last = directive_end;
            lexer.seek(directive_end);
        }
        out.push_str(&text[last..]);
        Ok(out)
    }

    fn resolve(&self, arg: &str) -> Option<String> {
        let base = normalize(arg);
        [base.clone(), format!("{base}.tex")]
            .into_iter()
            .find(|p| self.project.files.contains_key(p))
    }
}

/// Parses `{name}` or a bare file name after `\input`.
fn include_arg(text: &str, after: usize) -> Option<(&str, usize)> {
    let bytes = text.as_bytes();
    if bytes.get(after) == Some(&b'{') {
        let close = text[after..].find(['}', '\n']).map(|p| after + p)?;
        if bytes[close] != b'}' {
            return None;
        }
        let arg = text[after + 1..close].trim();
        return (!arg.is_empty()).then_some((arg, close + 1));
    }
    // `\input file` primitive form; `\input{` after spaces is also accepted
    let start = skip_ws(text, after);
    if start == after && bytes.get(after).is_some_and(|b| b.is_ascii_alphanumeric()) {
        return None;
    }
    if bytes.get(start) == Some(&b'{') {
        return include_arg(text, start);
    }
    let len = text[start..]
        .bytes()
        .take_while(|b| b.is_ascii_alphanumeric() || matches!(b, b'_' | b'-' | b'.' | b'/'))
        .count();
    (len > 0).then(|| (&text[start..start + len], start + len))
}

impl MergedDocument {
    /// Splits `text` (the merged document or a translation of it) back into
    /// its files. The main file comes first; every other file gets the slice
    /// between its FILE tokens, with nested includes folded back into their
    /// directives.
    pub fn split_files(&self, text: &str) -> Result<Vec<(String, String)>, UnmergeError> {
        struct Frame {
            index: Option<usize>,
            buf: String,
        }
        let mut stack = vec![Frame { index: None, buf: String::new() }];
        let mut files: Vec<(usize, String, String)> = Vec::new();
        let mut last = 0;
        for caps in FILE_TOKEN.captures_iter(text) {
            let whole = caps.get(0).unwrap();
            let token = whole.as_str().to_string();
            let index: usize = caps[1].parse().unwrap();
            let Some(boundary) = self.file_boundaries.get(index) else {
                return Err(UnmergeError::UnknownFile { token });
            };
            stack.last_mut().unwrap().buf.push_str(&text[last..whole.start()]);
            last = whole.end();
            if &caps[2] == "begin" {
                if stack.iter().any(|f| f.index == Some(index)) {
                    return Err(UnmergeError::UnbalancedFileBoundaries { token });
                }
                stack.push(Frame { index: Some(index), buf: String::new() });
            } else {
                if stack.last().unwrap().index != Some(index) {
                    return Err(UnmergeError::UnbalancedFileBoundaries { token });
                }
                let frame = stack.pop().unwrap();
                files.push((index, boundary.path.clone(), frame.buf));
                stack.last_mut().unwrap().buf.push_str(&boundary.directive);
            }
        }
        stack.last_mut().unwrap().buf.push_str(&text[last..]);
        if stack.len() != 1 {
            let index = stack.last().unwrap().index.unwrap();
            return Err(UnmergeError::UnbalancedFileBoundaries {
                token: PlaceholderKind::FileBegin.token(index),
            });
        }
        files.sort_by_key(|(i, _, _)| *i);
        let main = stack.pop().unwrap().buf;
        let mut out = vec![(self.main_file.clone(), main)];
        for (_, path, body) in files {
            // a file included twice keeps its first rendering
            if !out.iter().any(|(p, _)| *p == path) {
                out.push((path, body));
            }
        }
        Ok(out)
    }
}
