//! Low-level scanning helpers for LaTeX source: escape detection, brace
//! groups, control words, plain-text rendering and accent folding.

use unicode_normalization::UnicodeNormalization;

/// True when the byte at `idx` is escaped by an odd run of backslashes.
pub fn is_escaped(text: &str, idx: usize) -> bool {
    let bytes = text.as_bytes();
    let mut count = 0;
    let mut i = idx;
    while i > 0 && bytes[i - 1] == b'\\' {
        count += 1;
        i -= 1;
    }
    count % 2 == 1
}

/// A control word `\name` found in a string.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ControlWord<'a> {
    pub name: &'a str,
    /// Byte offset of the backslash.
    pub start: usize,
    /// Byte offset just past the last letter of the name.
    pub end: usize,
}

/// Iterate over the control words (`\` followed by ASCII letters) of `text`,
/// skipping escaped backslashes such as `\\bibitem`.
pub fn control_words(text: &str) -> impl Iterator<Item = ControlWord<'_>> + '_ {
    let bytes = text.as_bytes();
    let mut pos = 0;
    std::iter::from_fn(move || {
        while pos < bytes.len() {
            if bytes[pos] != b'\\' {
                pos += 1;
                continue;
            }
            let start = pos;
            let mut end = pos + 1;
            while end < bytes.len() && bytes[end].is_ascii_alphabetic() {
                end += 1;
            }
            if end == start + 1 {
                // control symbol (`\\`, `\%`, `\"`): skip it and the char it escapes
                pos = start + 2;
                continue;
            }
            pos = end;
            return Some(ControlWord {
                name: &text[start + 1..end],
                start,
                end,
            });
        }
        None
    })
}

/// Given that `text[open]` is an opening delimiter, return the byte offset of
/// the matching closing delimiter. Escaped delimiters are ignored.
pub fn matching_delim(text: &str, open: usize, open_ch: u8, close_ch: u8) -> Option<usize> {
    let bytes = text.as_bytes();
    debug_assert_eq!(bytes[open], open_ch);
    let mut depth = 0usize;
    for i in open..bytes.len() {
        let b = bytes[i];
        if b != open_ch && b != close_ch {
            continue;
        }
        if is_escaped(text, i) {
            continue;
        }
        if b == open_ch {
            depth += 1;
        } else {
            depth -= 1;
            if depth == 0 {
                return Some(i);
            }
        }
    }
    None
}

pub fn matching_brace(text: &str, open: usize) -> Option<usize> {
    matching_delim(text, open, b'{', b'}')
}

/// Offset of the first non-whitespace byte at or after `pos`.
pub fn skip_ws(text: &str, pos: usize) -> usize {
    let bytes = text.as_bytes();
    let mut p = pos;
    while p < bytes.len() && bytes[p].is_ascii_whitespace() {
        p += 1;
    }
    p
}

/// Read a brace group starting at `pos` (after optional whitespace).
/// Returns the inner range and the offset just past the closing brace.
pub fn brace_group(text: &str, pos: usize) -> Option<(std::ops::Range<usize>, usize)> {
    let p = skip_ws(text, pos);
    if text.as_bytes().get(p) != Some(&b'{') {
        return None;
    }
    let close = matching_brace(text, p)?;
    Some((p + 1..close, close + 1))
}

/// Consecutive brace groups directly following `pos`.
pub fn brace_groups(text: &str, mut pos: usize) -> (Vec<std::ops::Range<usize>>, usize) {
    let mut groups = Vec::new();
    while let Some((inner, next)) = brace_group(text, pos) {
        groups.push(inner);
        pos = next;
    }
    (groups, pos)
}

/// Commands whose first brace argument is a field name rather than content.
const FIELD_COMMANDS: &[&str] = &["bibinfo", "bibfield"];

/// Commands dropped together with all of their brace arguments.
const DROP_WITH_ARGS: &[&str] = &["bibitemdeclare", "urlprefix", "doi", "url", "href", "eprint"];

/// Render a fragment of bibliography LaTeX as plain text.
///
/// Control words are removed. Field commands like `\bibinfo{author}{X}` keep
/// only `X`; other commands keep the content of their brace arguments without
/// the braces. Bare brace groups that do not follow a command are kept
/// verbatim (`{A}spect` stays as is). Tildes are preserved.
pub fn render_plain(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    render_into(text, &mut out);
    out
}

fn render_into(text: &str, out: &mut String) {
    let bytes = text.as_bytes();
    let mut pos = 0;
    while pos < bytes.len() {
        let b = bytes[pos];
        if b == b'\\' {
            let mut end = pos + 1;
            while end < bytes.len() && bytes[end].is_ascii_alphabetic() {
                end += 1;
            }
            if end == pos + 1 {
                // control symbol: keep accents and escaped chars verbatim
                let next = text[pos + 1..].chars().next();
                match next {
                    Some(' ') => {
                        out.push(' ');
                        pos += 2;
                    }
                    Some(c) => {
                        out.push('\\');
                        out.push(c);
                        pos += 1 + c.len_utf8();
                    }
                    None => pos += 1,
                }
                continue;
            }
            let name = &text[pos + 1..end];
            let (groups, after) = brace_groups(text, end);
            if is_accent_word(name) {
                // `\c{c}`, `\v{s}`: keep command and argument for accent folding
                out.push_str(&text[pos..after]);
                pos = after;
                continue;
            }
            if DROP_WITH_ARGS.contains(&name) {
                pos = after;
                continue;
            }
            let content: &[std::ops::Range<usize>] = if FIELD_COMMANDS.contains(&name) {
                groups.get(1..).unwrap_or(&[])
            } else {
                &groups
            };
            for (i, g) in content.iter().enumerate() {
                if i > 0 {
                    out.push(' ');
                }
                render_into(&text[g.clone()], out);
            }
            pos = if groups.is_empty() {
                // a bare command swallows the single space that terminates it
                if bytes.get(end) == Some(&b' ') {
                    end + 1
                } else {
                    end
                }
            } else {
                after
            };
            continue;
        }
        if b == b'{' && !is_escaped(text, pos) {
            if let Some(close) = matching_brace(text, pos) {
                let inner = &text[pos + 1..close];
                // `{\em Title}` / `{\sc Name}` style groups: drop the braces
                if inner.starts_with("\\em")
                    || inner.starts_with("\\it")
                    || inner.starts_with("\\sc")
                    || inner.starts_with("\\bf")
                {
                    render_into(inner, out);
                } else {
                    out.push('{');
                    render_into(inner, out);
                    out.push('}');
                }
                pos = close + 1;
                continue;
            }
        }
        let c = text[pos..].chars().next().unwrap_or(' ');
        out.push(c);
        pos += c.len_utf8();
    }
}

fn is_accent_word(name: &str) -> bool {
    matches!(
        name,
        "c" | "v" | "u" | "H" | "k" | "r" | "d" | "b" | "t" | "ss" | "o" | "O" | "aa" | "AA" | "l" | "L" | "ae" | "AE" | "oe" | "OE" | "i" | "j"
    )
}

/// Fold LaTeX accent macros and Unicode diacritics to base letters and drop
/// grouping braces: `{\"o}zsu` becomes `ozsu`, `Erd\H{o}s` becomes `Erdos`.
pub fn fold_accents(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    let bytes = text.as_bytes();
    let mut pos = 0;
    while pos < bytes.len() {
        let b = bytes[pos];
        match b {
            b'{' | b'}' => {
                pos += 1;
            }
            b'\\' => {
                let mut end = pos + 1;
                while end < bytes.len() && bytes[end].is_ascii_alphabetic() {
                    end += 1;
                }
                if end > pos + 1 {
                    let name = &text[pos + 1..end];
                    match name {
                        "ss" => out.push_str("ss"),
                        "o" | "O" | "aa" | "AA" | "l" | "L" | "i" | "j" => {
                            out.push_str(&name[..1]);
                        }
                        "ae" | "AE" | "oe" | "OE" => out.push_str(name),
                        _ => {}
                    }
                    // skip one separating space after a control word
                    pos = if bytes.get(end) == Some(&b' ') { end + 1 } else { end };
                } else {
                    // accent control symbol such as \" \' \` \^ \~ \= \.
                    pos += 1;
                    if let Some(c) = text[pos..].chars().next() {
                        if c.is_alphanumeric() {
                            continue;
                        }
                        pos += c.len_utf8();
                    }
                }
            }
            _ => {
                let c = text[pos..].chars().next().unwrap_or(' ');
                out.push(c);
                pos += c.len_utf8();
            }
        }
    }
    out.nfd().filter(|c| !is_combining_mark(*c)).collect()
}

fn is_combining_mark(c: char) -> bool {
    matches!(c as u32, 0x0300..=0x036F | 0x1AB0..=0x1AFF | 0x1DC0..=0x1DFF | 0x20D0..=0x20FF | 0xFE20..=0xFE2F)
}
