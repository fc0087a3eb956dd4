//! Top-level environments of the document body become ENV placeholders.

use super::placeholder::{PlaceholderKind, PlaceholderMap};
use super::scan::{document_body, env_name_arg, is_verbatim_like, verbatim_end, Lexer, TokKind};
use crate::diag::{Warning, WarningKind};

/// Name reported for `\[...\]` and `$$...$$` blocks.
pub const DISPLAY_MATH: &str = "displaymath";

/// Replaces every top-level block of the document body (or of the whole
/// text, for fragments) with an ENV token. Nested environments stay inside
/// their outermost block.
pub fn extract_environments(doc_text: &str) -> (String, PlaceholderMap, Vec<Warning>) {
    let (body_start, body_end) = document_body(doc_text).unwrap_or((0, doc_text.len()));
    let mut map = PlaceholderMap::default();
    let mut warnings = Vec::new();
    let mut out = String::with_capacity(doc_text.len());
    let mut last = 0;

    let mut lexer = Lexer::at(doc_text, body_start);
    while let Some(tok) = lexer.next() {
        if tok.start >= body_end {
            break;
        }
        let block_end = match tok.kind {
            TokKind::Word("begin") => {
                let Some((name, after)) = env_name_arg(doc_text, tok.end) else { continue };
                match find_env_end(doc_text, name, after, &mut warnings) {
                    Some(end) if end <= body_end => Some(end),
                    _ => {
                        warnings.push(Warning::new(
                            WarningKind::UnmatchedEnvironment,
                            format!("\\begin{{{name}}} at byte {} has no matching \\end; left in place", tok.start),
                        ));
                        lexer.seek(after);
                        None
                    }
                }
            }
            TokKind::Word("end") => {
                if let Some((name, after)) = env_name_arg(doc_text, tok.end) {
                    warnings.push(Warning::new(
                        WarningKind::UnmatchedEnvironment,
                        format!("\\end{{{name}}} at byte {} has no matching \\begin", tok.start),
                    ));
                    lexer.seek(after);
                }
                None
            }
            TokKind::Symbol('[') => close_display(doc_text, tok.end, body_end, TokKind::Symbol(']'), &mut warnings, tok.start),
            TokKind::DoubleDollar => {
                close_display(doc_text, tok.end, body_end, TokKind::DoubleDollar, &mut warnings, tok.start)
            }
            _ => None,
        };
        if let Some(end) = block_end {
            let token = map.push(PlaceholderKind::Env, &doc_text[tok.start..end]);
            out.push_str(&doc_text[last..tok.start]);
            out.push_str(&token);
            last = end;
            lexer.seek(end);
        }
    }
    out.push_str(&doc_text[last..]);
    (out, map, warnings)
}

fn close_display(
    text: &str,
    from: usize,
    body_end: usize,
    closer: TokKind<'_>,
    warnings: &mut Vec<Warning>,
    start: usize,
) -> Option<usize> {
    let end = Lexer::at(text, from)
        .take_while(|t| t.start < body_end)
        .find(|t| t.kind == closer)
        .map(|t| t.end);
    if end.is_none() {
        warnings.push(Warning::new(
            WarningKind::UnmatchedEnvironment,
            format!("display math at byte {start} is never closed; left in place"),
        ));
    }
    end
}

/// Offset just past the `\end{name}` closing an environment whose `\begin`
/// argument ends at `from`. Inner mismatches are recovered from and reported.
fn find_env_end(text: &str, name: &str, from: usize, warnings: &mut Vec<Warning>) -> Option<usize> {
    if is_verbatim_like(name) {
        return verbatim_end(text, name, from);
    }
    let mut stack = vec![name];
    let mut lexer = Lexer::at(text, from);
    while let Some(tok) = lexer.next() {
        let TokKind::Word(word @ ("begin" | "end")) = tok.kind else { continue };
        let Some((inner, after)) = env_name_arg(text, tok.end) else { continue };
        lexer.seek(after);
        if word == "begin" {
            if inner == "document" {
                return None;
            }
            if is_verbatim_like(inner) {
                lexer.seek(verbatim_end(text, inner, after)?);
            } else {
                stack.push(inner);
            }
            continue;
        }
        match stack.iter().rposition(|e| *e == inner) {
            Some(pos) => {
                for unclosed in &stack[pos + 1..] {
                    warnings.push(Warning::new(
                        WarningKind::UnmatchedEnvironment,
                        format!("\\begin{{{unclosed}}} inside {name} is closed implicitly by \\end{{{inner}}}"),
                    ));
                }
                stack.truncate(pos);
                if stack.is_empty() {
                    return Some(after);
                }
            }
            None if inner == "document" => return None,
            None => warnings.push(Warning::new(
                WarningKind::UnmatchedEnvironment,
                format!("stray \\end{{{inner}}} at byte {} inside {name}", tok.start),
            )),
        }
    }
    None
}

/// Environment name of an ENV block: the `\begin{...}` argument, or
/// [`DISPLAY_MATH`] for `\[` and `$$` blocks.
pub fn env_name_of(block: &str) -> String {
    if block.starts_with("\\[") || block.starts_with("$$") {
        return DISPLAY_MATH.to_string();
    }
    block
        .strip_prefix("\\begin")
        .and_then(|_| env_name_arg(block, "\\begin".len()))
        .map_or_else(String::new, |(name, _)| name.to_string())
}
