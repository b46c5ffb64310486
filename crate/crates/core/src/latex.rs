//! Locating `thebibliography` environments and splitting them into entries.
//!
//! Three command families introduce an entry: `\bibitem`, the
//! `\bibitemstart` / `\bibitemend` pair, and `\BIBentry`. Every other
//! `\...item` command found between entries is skipped and tallied.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::tex;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ParseError {
    #[error("unbalanced thebibliography environment at byte {offset}")]
    UnbalancedEnvironment { offset: usize },
    #[error("\\bibitemstart at byte {offset} has no matching \\bibitemend")]
    DanglingBibitemstart { offset: usize },
    #[error("no citation key after citation command")]
    MissingKey,
}

impl ParseError {
    /// Short category name used in diagnostics tallies.
    pub fn category(&self) -> &'static str {
        match self {
            ParseError::UnbalancedEnvironment { .. } => "unbalanced_environment",
            ParseError::DanglingBibitemstart { .. } => "dangling_bibitemstart",
            ParseError::MissingKey => "missing_key",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DocKind {
    Tex,
    Bbl,
}

impl DocKind {
    pub fn from_extension(ext: &str) -> Option<Self> {
        match ext.to_ascii_lowercase().as_str() {
            "tex" => Some(DocKind::Tex),
            "bbl" => Some(DocKind::Bbl),
            _ => None,
        }
    }
}

/// A `.tex` or `.bbl` file whose text has already been comment-stripped.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SourceDocument {
    pub path: PathBuf,
    pub text: String,
    pub kind: DocKind,
    /// Set when invalid UTF-8 was replaced while reading.
    pub lossy: bool,
}

impl SourceDocument {
    pub fn new(path: impl Into<PathBuf>, raw: &str, kind: DocKind) -> Self {
        Self {
            path: path.into(),
            text: strip_comments(raw),
            kind,
            lossy: false,
        }
    }

    /// Decode bytes as UTF-8, replacing invalid sequences.
    pub fn from_bytes(path: impl Into<PathBuf>, bytes: &[u8], kind: DocKind) -> Self {
        let decoded = String::from_utf8_lossy(bytes);
        let lossy = matches!(decoded, std::borrow::Cow::Owned(_));
        let mut doc = Self::new(path, &decoded, kind);
        doc.lossy = lossy;
        doc
    }
}

/// One citation inside a bibliography.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BibEntry {
    pub raw_text: String,
    pub citation_key: String,
    pub explicit_key: Option<String>,
    pub source_path: PathBuf,
    /// Index of the bibliography within its document.
    pub bibliography: usize,
    /// 0-based position within the bibliography.
    pub ordinal: usize,
}

impl BibEntry {
    /// The entry text following the citation command and its key groups.
    pub fn body(&self) -> &str {
        entry_body(&self.raw_text)
    }
}

/// Remove `%` comments. An unescaped `%` drops the rest of its line; the
/// newline itself is kept.
pub fn strip_comments(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    for (i, line) in text.split('\n').enumerate() {
        if i > 0 {
            out.push('\n');
        }
        let cut = line
            .match_indices('%')
            .map(|(idx, _)| idx)
            .find(|&idx| !tex::is_escaped(line, idx));
        match cut {
            Some(idx) => out.push_str(&line[..idx]),
            None => out.push_str(line),
        }
    }
    out
}

const BEGIN_BIB: &str = "\\begin{thebibliography}";
const END_BIB: &str = "\\end{thebibliography}";

fn find_unescaped(text: &str, pat: &str, from: usize) -> Option<usize> {
    let mut start = from;
    while let Some(rel) = text[start..].find(pat) {
        let idx = start + rel;
        if !tex::is_escaped(text, idx) {
            return Some(idx);
        }
        start = idx + 1;
    }
    None
}

/// Inner text of every `thebibliography` environment, in document order.
///
/// The width argument (`{99}`) following `\begin{thebibliography}` is not
/// part of the returned block. Environments do not nest: a second `\begin`
/// before the matching `\end` is reported as unbalanced.
pub fn find_bibliographies(doc: &SourceDocument) -> Result<Vec<String>, ParseError> {
    find_bibliographies_in(&doc.text)
}

pub fn find_bibliographies_in(text: &str) -> Result<Vec<String>, ParseError> {
    let mut blocks = Vec::new();
    let mut pos = 0;
    while let Some(begin) = find_unescaped(text, BEGIN_BIB, pos) {
        let mut inner_start = begin + BEGIN_BIB.len();
        if let Some((_, next)) = tex::brace_group(text, inner_start) {
            inner_start = next;
        }
        let end = find_unescaped(text, END_BIB, inner_start)
            .ok_or(ParseError::UnbalancedEnvironment { offset: begin })?;
        if let Some(nested) = find_unescaped(text, BEGIN_BIB, inner_start) {
            if nested < end {
                return Err(ParseError::UnbalancedEnvironment { offset: nested });
            }
        }
        blocks.push(text[inner_start..end].to_string());
        pos = end + END_BIB.len();
    }
    Ok(blocks)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CiteCommand {
    Bibitem,
    BibitemStart,
    BibEntry,
}

impl CiteCommand {
    fn from_name(name: &str) -> Option<Self> {
        match name {
            "bibitem" => Some(CiteCommand::Bibitem),
            "bibitemstart" => Some(CiteCommand::BibitemStart),
            "BIBentry" => Some(CiteCommand::BibEntry),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            CiteCommand::Bibitem => "bibitem",
            CiteCommand::BibitemStart => "bibitemstart",
            CiteCommand::BibEntry => "BIBentry",
        }
    }
}

/// Result of splitting one bibliography block.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct EntrySplit {
    /// Raw entry texts, each starting with its citation command.
    pub entries: Vec<String>,
    /// Unrecognized `\...item` commands that were skipped.
    pub unrecognized: usize,
}

fn is_foreign_item(name: &str) -> bool {
    name.ends_with("item") && name != "bibitem"
}

pub fn split_bib_entries(block: &str) -> Result<EntrySplit, ParseError> {
    let mut split = EntrySplit::default();
    let words: Vec<_> = tex::control_words(block).collect();
    // (entry start, command) of the entry currently open
    let mut open: Option<usize> = None;
    let mut i = 0;
    while i < words.len() {
        let w = words[i];
        if let Some(cmd) = CiteCommand::from_name(w.name) {
            if let Some(start) = open.take() {
                split.entries.push(block[start..w.start].to_string());
            }
            if cmd == CiteCommand::BibitemStart {
                let end = words[i + 1..]
                    .iter()
                    .position(|x| x.name == "bibitemend")
                    .map(|p| i + 1 + p)
                    .ok_or(ParseError::DanglingBibitemstart { offset: w.start })?;
                split.entries.push(block[w.start..words[end].start].to_string());
                i = end + 1;
                continue;
            }
            open = Some(w.start);
        } else if is_foreign_item(w.name) {
            if let Some(start) = open.take() {
                split.entries.push(block[start..w.start].to_string());
            }
            split.unrecognized += 1;
        }
        i += 1;
    }
    if let Some(start) = open {
        split.entries.push(block[start..].to_string());
    }
    Ok(split)
}

/// Byte offsets of the key region: (explicit key range, citation key range,
/// end of the key group).
fn key_ranges(
    entry_text: &str,
) -> Option<(Option<std::ops::Range<usize>>, Option<std::ops::Range<usize>>, usize)> {
    let cmd = tex::control_words(entry_text).next()?;
    CiteCommand::from_name(cmd.name)?;
    let mut pos = tex::skip_ws(entry_text, cmd.end);
    let mut explicit = None;
    if entry_text.as_bytes().get(pos) == Some(&b'[') {
        let close = tex::matching_delim(entry_text, pos, b'[', b']')?;
        explicit = Some(pos + 1..close);
        pos = close + 1;
    }
    match tex::brace_group(entry_text, pos) {
        Some((inner, next)) => Some((explicit, Some(inner), next)),
        None => Some((explicit, None, pos)),
    }
}

/// Read `\command[explicit]{key}` at the start of an entry.
pub fn extract_citation_key(entry_text: &str) -> Result<(String, Option<String>), ParseError> {
    let (explicit, key, _) = key_ranges(entry_text).ok_or(ParseError::MissingKey)?;
    let key = key.ok_or(ParseError::MissingKey)?;
    let key = entry_text[key].trim();
    let bad = key.is_empty()
        || key
            .char_indices()
            .any(|(i, c)| matches!(c, '{' | '}' | ',') && !tex::is_escaped(key, i));
    if bad {
        return Err(ParseError::MissingKey);
    }
    let explicit = explicit.map(|r| entry_text[r].trim().to_string());
    Ok((key.to_string(), explicit))
}

/// Entry text after the citation command and its key groups. When no key
/// can be read, the text after the command name is returned.
pub fn entry_body(entry_text: &str) -> &str {
    match key_ranges(entry_text) {
        Some((_, _, end)) => &entry_text[end..],
        None => entry_text,
    }
}

/// Output of parsing one document.
#[derive(Debug, Clone, Default)]
pub struct ParsedDocument {
    pub entries: Vec<BibEntry>,
    pub bibliographies: usize,
    /// Entries whose key could not be read. They are counted but carry no key.
    pub keyless: Vec<(usize, usize, String)>,
    pub unrecognized_commands: usize,
    pub errors: Vec<ParseError>,
}

impl ParsedDocument {
    pub fn entry_count(&self) -> usize {
        self.entries.len() + self.keyless.len()
    }
}

/// Run environment detection, splitting and key extraction over a document.
/// A document with an unbalanced environment yields no entries.
pub fn parse_document(doc: &SourceDocument) -> ParsedDocument {
    let mut parsed = ParsedDocument::default();
    let blocks = match find_bibliographies(doc) {
        Ok(b) => b,
        Err(e) => {
            parsed.errors.push(e);
            return parsed;
        }
    };
    parsed.bibliographies = blocks.len();
    for (bib_idx, block) in blocks.iter().enumerate() {
        let split = match split_bib_entries(block) {
            Ok(s) => s,
            Err(e) => {
                parsed.errors.push(e);
                continue;
            }
        };
        parsed.unrecognized_commands += split.unrecognized;
        for (ordinal, raw) in split.entries.into_iter().enumerate() {
            match extract_citation_key(&raw) {
                Ok((citation_key, explicit_key)) => parsed.entries.push(BibEntry {
                    raw_text: raw,
                    citation_key,
                    explicit_key,
                    source_path: doc.path.clone(),
                    bibliography: bib_idx,
                    ordinal,
                }),
                Err(e) => {
                    parsed.errors.push(e);
                    parsed.keyless.push((bib_idx, ordinal, raw));
                }
            }
        }
    }
    parsed
}
