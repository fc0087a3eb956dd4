//! Caption bodies inside floats become CAP placeholders.

use super::placeholder::{PlaceholderKind, PlaceholderMap};
use super::scan::{env_name_arg, is_verbatim_like, match_bracket, match_group, skip_ws, verbatim_end, Lexer, TokKind};
use crate::diag::{Warning, WarningKind};

/// Figure and table families: `figure`, `figure*`, `subfigure`, `wraptable`,
/// `sidewaystable`, `longtable`, ...
pub fn is_float_env(name: &str) -> bool {
    let base = name.trim_end_matches('*');
    base.ends_with("figure") || base.ends_with("table")
}

pub fn extract_captions(doc_text: &str) -> (String, PlaceholderMap, Vec<Warning>) {
    let mut map = PlaceholderMap::default();
    let mut warnings = Vec::new();
    let mut out = String::with_capacity(doc_text.len());
    let mut last = 0;
    let mut envs: Vec<&str> = Vec::new();

    let mut lexer = Lexer::new(doc_text);
    while let Some(tok) = lexer.next() {
        let TokKind::Word(word) = tok.kind else { continue };
        match word {
            "begin" => {
                let Some((name, after)) = env_name_arg(doc_text, tok.end) else { continue };
                if is_verbatim_like(name) {
                    if let Some(end) = verbatim_end(doc_text, name, after) {
                        lexer.seek(end);
                    }
                    continue;
                }
                envs.push(name);
                lexer.seek(after);
            }
            "end" => {
                let Some((name, after)) = env_name_arg(doc_text, tok.end) else { continue };
                if let Some(pos) = envs.iter().rposition(|e| *e == name) {
                    envs.truncate(pos);
                }
                lexer.seek(after);
            }
            "caption" if envs.iter().any(|e| is_float_env(e)) => {
                let Some(open) = caption_body_start(doc_text, tok.end) else { continue };
                match match_group(doc_text, open) {
                    Some(close) => {
                        let body = &doc_text[open + 1..close - 1];
                        let token = map.push(PlaceholderKind::Cap, body);
                        out.push_str(&doc_text[last..open + 1]);
                        out.push_str(&token);
                        last = close - 1;
                        lexer.seek(close);
                    }
                    None => warnings.push(Warning::new(
                        WarningKind::UnbalancedBraces,
                        format!("caption argument at byte {open} has unbalanced braces; left in place"),
                    )),
                }
            }
            _ => {}
        }
    }
    out.push_str(&doc_text[last..]);
    (out, map, warnings)
}

/// Offset of the `{` opening the mandatory caption argument, skipping `*`
/// and the optional short caption.
fn caption_body_start(text: &str, after: usize) -> Option<usize> {
    let mut pos = skip_ws(text, after);
    if text.as_bytes().get(pos) == Some(&b'*') {
        pos = skip_ws(text, pos + 1);
    }
    if text.as_bytes().get(pos) == Some(&b'[') {
        pos = skip_ws(text, match_bracket(text, pos)?);
    }
    (text.as_bytes().get(pos) == Some(&b'{')).then_some(pos)
}
