//! A minimal LaTeX lexer: just enough structure to find control sequences,
//! groups, comments and math delimiters without expanding anything.
//!
//! All special characters we care about are ASCII, so working on byte offsets
//! of a `&str` is safe: no multi-byte UTF-8 sequence contains an ASCII byte.

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum TokKind<'a> {
    /// `\name` with an alphabetic name.
    Word(&'a str),
    /// `\x` for a single non-letter character.
    Symbol(char),
    /// `%` up to (not including) the end of the line.
    Comment,
    Open,
    Close,
    /// `$$`
    DoubleDollar,
    /// `$`
    Dollar,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct Tok<'a> {
    pub kind: TokKind<'a>,
    pub start: usize,
    pub end: usize,
}

/// Iterates over significant tokens, skipping plain text.
#[derive(Debug, Clone)]
pub(crate) struct Lexer<'a> {
    src: &'a str,
    pos: usize,
}

impl<'a> Lexer<'a> {
    pub fn new(src: &'a str) -> Self {
        Self { src, pos: 0 }
    }

    pub fn at(src: &'a str, pos: usize) -> Self {
        Self { src, pos }
    }

    pub fn seek(&mut self, pos: usize) {
        self.pos = pos;
    }
}

impl<'a> Iterator for Lexer<'a> {
    type Item = Tok<'a>;

    fn next(&mut self) -> Option<Tok<'a>> {
        let bytes = self.src.as_bytes();
        let mut i = self.pos;
        while i < bytes.len() {
            let start = i;
            match bytes[i] {
                b'\\' => {
                    let name_start = i + 1;
                    let mut j = name_start;
                    while j < bytes.len() && bytes[j].is_ascii_alphabetic() {
                        j += 1;
                    }
                    let (kind, end) = if j > name_start {
                        (TokKind::Word(&self.src[name_start..j]), j)
                    } else if let Some(c) = self.src[name_start..].chars().next() {
                        (TokKind::Symbol(c), name_start + c.len_utf8())
                    } else {
                        // trailing lone backslash
                        (TokKind::Symbol('\\'), name_start)
                    };
                    self.pos = end;
                    return Some(Tok { kind, start, end });
                }
                b'%' => {
                    let end = line_end(bytes, i);
                    self.pos = end;
                    return Some(Tok { kind: TokKind::Comment, start, end });
                }
                b'{' | b'}' => {
                    self.pos = i + 1;
                    let kind = if bytes[i] == b'{' { TokKind::Open } else { TokKind::Close };
                    return Some(Tok { kind, start, end: i + 1 });
                }
                b'$' => {
                    let (kind, end) = if bytes.get(i + 1) == Some(&b'$') {
                        (TokKind::DoubleDollar, i + 2)
                    } else {
                        (TokKind::Dollar, i + 1)
                    };
                    self.pos = end;
                    return Some(Tok { kind, start, end });
                }
                _ => i += 1,
            }
        }
        self.pos = bytes.len();
        None
    }
}

fn line_end(bytes: &[u8], from: usize) -> usize {
    bytes[from..]
        .iter()
        .position(|&b| b == b'\n')
        .map_or(bytes.len(), |p| from + p)
}

pub(crate) fn skip_ws(src: &str, mut pos: usize) -> usize {
    let bytes = src.as_bytes();
    while pos < bytes.len() && matches!(bytes[pos], b' ' | b'\t' | b'\r' | b'\n') {
        pos += 1;
    }
    pos
}

/// Given `pos` pointing at `{`, returns the offset just past the matching `}`.
/// Escaped braces and comments are honoured. `None` if unbalanced.
pub(crate) fn match_group(src: &str, pos: usize) -> Option<usize> {
    if src.as_bytes().get(pos) != Some(&b'{') {
        return None;
    }
    let mut depth = 0usize;
    for tok in Lexer::at(src, pos) {
        match tok.kind {
            TokKind::Open => depth += 1,
            TokKind::Close => {
                depth -= 1;
                if depth == 0 {
                    return Some(tok.end);
                }
            }
            _ => {}
        }
    }
    None
}

/// Given `pos` pointing at `[`, returns the offset just past the matching `]`
/// at brace depth zero.
pub(crate) fn match_bracket(src: &str, pos: usize) -> Option<usize> {
    let bytes = src.as_bytes();
    if bytes.get(pos) != Some(&b'[') {
        return None;
    }
    let mut i = pos + 1;
    while i < bytes.len() {
        match bytes[i] {
            b'\\' => i += 2,
            b'{' => i = match_group(src, i)?,
            b']' => return Some(i + 1),
            b'%' => i = line_end(bytes, i),
            _ => i += 1,
        }
    }
    None
}

/// Reads the `{name}` argument of a `\begin` or `\end` whose token ends at
/// `after`. Returns the trimmed name and the offset past the closing brace.
pub(crate) fn env_name_arg(src: &str, after: usize) -> Option<(&str, usize)> {
    let open = skip_ws(src, after);
    if src.as_bytes().get(open) != Some(&b'{') {
        return None;
    }
    let close = src[open + 1..].find(['}', '\n']).map(|p| open + 1 + p)?;
    if src.as_bytes()[close] != b'}' {
        return None;
    }
    let name = src[open + 1..close].trim();
    if name.is_empty() {
        return None;
    }
    Some((name, close + 1))
}

/// Environments whose bodies are not tokenized.
pub(crate) fn is_verbatim_like(name: &str) -> bool {
    matches!(
        name,
        "verbatim" | "verbatim*" | "Verbatim" | "lstlisting" | "minted" | "comment" | "filecontents"
            | "filecontents*"
    )
}

/// Finds the end of a verbatim-like environment body: the offset just past
/// the literal `\end{name}`.
pub(crate) fn verbatim_end(src: &str, name: &str, from: usize) -> Option<usize> {
    let needle = format!("\\end{{{name}}}");
    src[from..].find(&needle).map(|p| from + p + needle.len())
}

/// Byte span of the document body: just past `\begin{document}` up to the
/// start of the final `\end{document}`. `None` when the text has no
/// `\begin{document}` (a fragment).
pub(crate) fn document_body(src: &str) -> Option<(usize, usize)> {
    let mut lexer = Lexer::new(src);
    let mut body_start = None;
    let mut body_end = None;
    while let Some(tok) = lexer.next() {
        let TokKind::Word(word) = tok.kind else { continue };
        if word != "begin" && word != "end" {
            continue;
        }
        let Some((name, after)) = env_name_arg(src, tok.end) else { continue };
        if word == "begin" && is_verbatim_like(name) {
            if let Some(end) = verbatim_end(src, name, after) {
                lexer.seek(end);
            }
            continue;
        }
        if name != "document" {
            continue;
        }
        if word == "begin" && body_start.is_none() {
            body_start = Some(after);
        } else if word == "end" && body_start.is_some() {
            body_end = Some(tok.start);
        }
    }
    body_start.map(|s| (s, body_end.unwrap_or(src.len())))
}
