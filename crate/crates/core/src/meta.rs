//! Segmenting a bib entry body into year, author text and title.
//!
//! Author text is first sought with seven high-precision patterns, tried in
//! a fixed order (earlier patterns win where several would fire):
//!
//! 1. `bibinfo_author`: one or more `\bibinfo{author}{...}` fields.
//! 2. `bauthor`: one or more `\bauthor{...}` groups.
//! 3. `name`: one or more `\Name{...}` groups.
//! 4. `bibsc`: one or more `\bibsc{...}` groups.
//! 5. `newblock_initials`: the text before the first `\newblock`, when every
//!    person in it carries initials.
//! 6. `newblock_full_names`: the text before the first `\newblock`, when it
//!    reads as a list of full names ending in punctuation.
//! 7. `period_quote`: the text up to the first period that is followed by a
//!    quoted or emphasized title.
//!
//! For 1-4, consecutive groups may be separated only by commas, `and` or
//! `&`. Patterns 5-7 additionally require the candidate to look like a list
//! of person names. This set is a reconstruction around the commands the
//! corpus uses; it is not claimed to be exhaustive.

use std::ops::Range;
use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::authors::{split_author_groups, AuthorName};
use crate::features::is_initials;
use crate::tex::{self, fold_accents, render_plain};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AuthorPattern {
    BibinfoAuthor,
    Bauthor,
    Name,
    Bibsc,
    NewblockInitials,
    NewblockFullNames,
    PeriodQuote,
}

impl AuthorPattern {
    /// Patterns in the order they are attempted.
    pub const ORDER: [AuthorPattern; 7] = [
        AuthorPattern::BibinfoAuthor,
        AuthorPattern::Bauthor,
        AuthorPattern::Name,
        AuthorPattern::Bibsc,
        AuthorPattern::NewblockInitials,
        AuthorPattern::NewblockFullNames,
        AuthorPattern::PeriodQuote,
    ];

    pub fn id(self) -> &'static str {
        match self {
            AuthorPattern::BibinfoAuthor => "bibinfo_author",
            AuthorPattern::Bauthor => "bauthor",
            AuthorPattern::Name => "name",
            AuthorPattern::Bibsc => "bibsc",
            AuthorPattern::NewblockInitials => "newblock_initials",
            AuthorPattern::NewblockFullNames => "newblock_full_names",
            AuthorPattern::PeriodQuote => "period_quote",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExtractionMethod {
    Pattern,
    Classifier,
}

/// Structured metadata for one entry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BibMeta {
    pub citation_key: String,
    pub author_text: Option<String>,
    pub authors: Vec<AuthorName>,
    pub authors_truncated: bool,
    pub year: Option<i32>,
    pub title: Option<String>,
    pub extraction_method: Option<ExtractionMethod>,
    pub pattern: Option<AuthorPattern>,
}

/// A pattern hit: the raw byte span in the entry body and the rendered
/// author text.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PatternMatch {
    pub pattern: AuthorPattern,
    pub span: Range<usize>,
    pub author_text: String,
}

// ---------------------------------------------------------------------------
// Year
// ---------------------------------------------------------------------------

/// Inclusive range of acceptable publication years.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct YearWindow {
    pub min: i32,
    pub max: i32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum YearMode {
    /// Wide lower bound (1500) so that every four-digit number that could be
    /// a year is a candidate.
    StrictPaper,
    /// Lower bound 1800, which drops most page and volume numbers.
    #[default]
    Practical,
}

impl YearWindow {
    pub fn for_mode(mode: YearMode, current_year: i32) -> Self {
        let min = match mode {
            YearMode::StrictPaper => 1500,
            YearMode::Practical => 1800,
        };
        Self { min, max: current_year + 1 }
    }

    pub fn contains(&self, year: i32) -> bool {
        (self.min..=self.max).contains(&year)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum YearSource {
    Command,
    KeyEvidence,
    FirstCandidate,
}

static YEAR_COMMAND: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"\\(?:bibinfo\s*\{\s*year\s*\}|byear|bibyear)\s*\{([^{}]*)\}").expect("valid year command regex")
});

/// Maximal ASCII digit runs with their byte offsets.
fn digit_runs(s: &str) -> impl Iterator<Item = (usize, &str)> {
    let bytes = s.as_bytes();
    let mut i = 0;
    std::iter::from_fn(move || {
        while i < bytes.len() && !bytes[i].is_ascii_digit() {
            i += 1;
        }
        if i >= bytes.len() {
            return None;
        }
        let start = i;
        while i < bytes.len() && bytes[i].is_ascii_digit() {
            i += 1;
        }
        Some((start, &s[start..i]))
    })
}

/// Four-digit numbers inside the window, in entry order.
pub fn year_candidates(body: &str, window: &YearWindow) -> Vec<i32> {
    digit_runs(body)
        .filter(|(_, run)| run.len() == 4)
        .filter_map(|(_, run)| run.parse().ok())
        .filter(|y| window.contains(*y))
        .collect()
}

/// Two-digit year to a full year: 30-99 are 19xx, 00-29 are 20xx.
pub fn expand_two_digit(d: i32) -> i32 {
    if d >= 30 {
        1900 + d
    } else {
        2000 + d
    }
}

/// Years suggested by two- and four-digit runs in the citation key.
pub fn key_year_evidence(key: &str) -> Vec<i32> {
    digit_runs(key)
        .filter_map(|(_, run)| match run.len() {
            2 => run.parse().ok().map(expand_two_digit),
            4 => run.parse().ok(),
            _ => None,
        })
        .collect()
}

/// Pick the publication year of an entry body.
///
/// An explicit year command wins. Otherwise four-digit candidates are
/// checked against digits in the key, allowing an off-by-one difference;
/// exact agreement is preferred over a ±1 agreement, and within either tier
/// the earliest candidate wins. Without evidence the first candidate is
/// taken.
pub fn extract_year(body: &str, citation_key: &str, window: &YearWindow) -> Option<(i32, YearSource)> {
    for cap in YEAR_COMMAND.captures_iter(body) {
        let year = digit_runs(&cap[1])
            .find(|(_, r)| r.len() == 4)
            .and_then(|(_, r)| r.parse::<i32>().ok())
            .filter(|y| window.contains(*y));
        if let Some(y) = year {
            return Some((y, YearSource::Command));
        }
    }
    let candidates = year_candidates(body, window);
    let evidence = key_year_evidence(citation_key);
    if !evidence.is_empty() {
        if let Some(&y) = candidates.iter().find(|c| evidence.contains(c)) {
            return Some((y, YearSource::KeyEvidence));
        }
        if let Some(&y) = candidates.iter().find(|c| evidence.iter().any(|e| (*c - e).abs() <= 1)) {
            return Some((y, YearSource::KeyEvidence));
        }
    }
    candidates.first().map(|&y| (y, YearSource::FirstCandidate))
}

// ---------------------------------------------------------------------------
// Author text patterns
// ---------------------------------------------------------------------------

static GROUP_GAP: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"^[\s,;~]*(?:(?:and|\\&|&)[\s~]*)?$").expect("valid gap regex")
});

static BIBINFO_FIELD: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"\\bibinfo\s*\{\s*([A-Za-z]+)\s*\}").expect("valid bibinfo regex"));

/// Span of a run of `\cmd{...}` groups separated only by list delimiters.
fn command_run(body: &str, command: &str) -> Option<Range<usize>> {
    let mut span: Option<Range<usize>> = None;
    for cw in tex::control_words(body).filter(|c| c.name == command) {
        let (groups, end) = tex::brace_groups(body, cw.end);
        if groups.is_empty() {
            continue;
        }
        match &mut span {
            None => span = Some(cw.start..end),
            Some(s) => {
                if cw.start < s.end || !GROUP_GAP.is_match(&body[s.end..cw.start]) {
                    break;
                }
                s.end = end;
            }
        }
    }
    span
}

fn bibinfo_author_run(body: &str) -> Option<Range<usize>> {
    let mut span: Option<Range<usize>> = None;
    for cap in BIBINFO_FIELD.captures_iter(body) {
        let m = cap.get(0).expect("whole match");
        if span.as_ref().is_some_and(|s| m.start() < s.end) {
            continue;
        }
        let is_author = &cap[1] == "author";
        let Some((_, end)) = tex::brace_group(body, m.end()) else { continue };
        match (&mut span, is_author) {
            (None, true) => span = Some(m.start()..end),
            (None, false) => {}
            (Some(s), true) => {
                // revtex wraps authors as \bibfield{author}{\bibinfo{author}{..} and ..}
                let gap = render_plain(&body[s.end..m.start()]);
                if !GROUP_GAP.is_match(gap.trim_end_matches('}')) {
                    break;
                }
                s.end = end;
            }
            (Some(_), false) => break,
        }
    }
    span
}

fn first_newblock(body: &str) -> Option<usize> {
    tex::control_words(body).find(|c| c.name == "newblock").map(|c| c.start)
}

/// Does the rendered text read as a list of person names?
fn name_list_shape(text: &str, require_initials: bool, require_two_tokens: bool) -> bool {
    let trimmed = text.trim();
    if trimmed.is_empty() || trimmed.chars().any(|c| c.is_ascii_digit()) {
        return false;
    }
    let Ok(groups) = split_author_groups(trimmed) else { return false };
    let total: usize = groups.groups.iter().map(|g| g.tokens.len()).sum();
    if total > 60 {
        return false;
    }
    groups.groups.iter().all(|g| {
        let n = g.tokens.len();
        let shape_ok = (1..=5).contains(&n)
            && g.tokens.iter().all(|t| {
                let folded = fold_accents(t);
                let first_alpha = folded.chars().find(|c| c.is_alphabetic());
                is_initials(t)
                    || matches!(t.as_str(), "ter" | "van" | "de" | "der" | "den" | "von" | "da" | "del" | "di" | "du" | "la" | "le")
                    || first_alpha.is_some_and(|c| c.is_uppercase())
            });
        let initials_ok = !require_initials || g.tokens.iter().any(|t| is_initials(t));
        let two_ok = !require_two_tokens || n >= 2;
        shape_ok && initials_ok && two_ok
    })
}

/// Offset just past the first period that is followed by a quoted or
/// emphasized title.
fn period_before_quote(body: &str) -> Option<usize> {
    let bytes = body.as_bytes();
    let mut depth = 0i32;
    for (i, &b) in bytes.iter().enumerate() {
        match b {
            b'{' if !tex::is_escaped(body, i) => depth += 1,
            b'}' if !tex::is_escaped(body, i) => depth -= 1,
            b'.' if depth == 0 => {
                let rest = body[i + 1..].trim_start_matches(|c: char| c.is_whitespace() || c == '~');
                let rest = rest.strip_prefix("\\newblock").map(str::trim_start).unwrap_or(rest);
                if rest.starts_with("``")
                    || rest.starts_with('"')
                    || rest.starts_with("\\emph")
                    || rest.starts_with("\\textit")
                    || rest.starts_with("{\\em")
                    || rest.starts_with("{\\it")
                {
                    return Some(i + 1);
                }
                // the first sentence end without a quoted title stops the search
                let prev_initial = i >= 1 && bytes[i - 1].is_ascii_uppercase() && (i < 2 || !bytes[i - 2].is_ascii_alphabetic());
                if !prev_initial {
                    return None;
                }
            }
            _ => {}
        }
    }
    None
}

fn pattern_span(body: &str, pattern: AuthorPattern) -> Option<Range<usize>> {
    match pattern {
        AuthorPattern::BibinfoAuthor => bibinfo_author_run(body),
        AuthorPattern::Bauthor => command_run(body, "bauthor"),
        AuthorPattern::Name => command_run(body, "Name"),
        AuthorPattern::Bibsc => command_run(body, "bibsc"),
        AuthorPattern::NewblockInitials => {
            let end = first_newblock(body)?;
            name_list_shape(&render_plain(&body[..end]), true, false).then_some(0..end)
        }
        AuthorPattern::NewblockFullNames => {
            let end = first_newblock(body)?;
            let text = render_plain(&body[..end]);
            let punct = text.trim_end().ends_with(['.', ',']);
            (punct && name_list_shape(&text, false, true)).then_some(0..end)
        }
        AuthorPattern::PeriodQuote => {
            let end = period_before_quote(body)?;
            let text = render_plain(&body[..end]);
            name_list_shape(&text, false, false).then_some(0..end)
        }
    }
}

/// Author text from the first pattern (in fixed order) that fires.
pub fn extract_author_text_by_pattern(body: &str) -> Option<PatternMatch> {
    AuthorPattern::ORDER.iter().find_map(|&pattern| {
        let span = pattern_span(body, pattern)?;
        let author_text = render_plain(&body[span.clone()]).trim().to_string();
        (!author_text.is_empty()).then_some(PatternMatch { pattern, span, author_text })
    })
}

// ---------------------------------------------------------------------------
// Title
// ---------------------------------------------------------------------------

fn clean_title(raw: &str) -> Option<String> {
    let rendered = render_plain(raw);
    let text: String = rendered
        .chars()
        .filter(|c| *c != '{' && *c != '}')
        .map(|c| if c == '~' { ' ' } else { c })
        .collect();
    let text = text.replace("``", "").replace("''", "").replace('"', "");
    let text = text.split_whitespace().collect::<Vec<_>>().join(" ");
    let text = text.trim_end_matches([',', ';', ':', '.', ' ']).trim();
    (!text.is_empty()).then(|| text.to_string())
}

static TITLE_COMMAND: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"\\(?:bibinfo\s*\{\s*title\s*\}|batitle|btitle)\s*\{").expect("valid title command regex")
});

/// Title: an explicit title field when present, else the text following the author text up to the next sentence end.
///
/// `remainder` is the entry text after the author text (or the whole body
/// when no author text was found). A sentence ends at a period outside
/// braces followed by whitespace, a command or the end of text, or at a
/// `\newblock`. Quoted and emphasized titles end with their delimiter.
pub fn extract_title(remainder: &str) -> Option<String> {
    if let Some(m) = TITLE_COMMAND.find(remainder) {
        if let Some((inner, _)) = tex::brace_group(remainder, m.end() - 1) {
            return clean_title(&remainder[inner]);
        }
    }
    let mut s = remainder.trim_start_matches(|c: char| c.is_whitespace() || matches!(c, ',' | '.' | ':' | ';' | '~'));
    while let Some(rest) = s.strip_prefix("\\newblock") {
        s = rest.trim_start();
    }
    if let Some(rest) = s.strip_prefix("``") {
        let end = rest.find("''").unwrap_or(rest.len());
        return clean_title(&rest[..end]);
    }
    if let Some(rest) = s.strip_prefix('"') {
        let end = rest.find('"').unwrap_or(rest.len());
        return clean_title(&rest[..end]);
    }
    for prefix in ["\\emph", "\\textit"] {
        if let Some(rest) = s.strip_prefix(prefix) {
            if let Some((inner, _)) = tex::brace_group(rest, 0) {
                return clean_title(&rest[inner]);
            }
        }
    }
    if s.starts_with("{\\em") || s.starts_with("{\\it") {
        if let Some(close) = tex::matching_brace(s, 0) {
            return clean_title(&s[..=close]);
        }
    }
    let bytes = s.as_bytes();
    let mut depth = 0i32;
    let mut end = s.len();
    let mut i = 0;
    while i < bytes.len() {
        match bytes[i] {
            b'{' if !tex::is_escaped(s, i) => depth += 1,
            b'}' if !tex::is_escaped(s, i) => depth -= 1,
            b'.' | b'?' | b'!' if depth <= 0 => {
                let next = bytes.get(i + 1);
                if next.is_none_or(|b| b.is_ascii_whitespace() || *b == b'\\' || *b == b'~') {
                    end = if bytes[i] == b'.' { i } else { i + 1 };
                    break;
                }
            }
            b'\\' if depth <= 0 && s[i..].starts_with("\\newblock") => {
                end = i;
                break;
            }
            _ => {}
        }
        i += 1;
    }
    clean_title(&s[..end])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn window() -> YearWindow {
        YearWindow { min: 1800, max: 2027 }
    }

    #[test]
    fn key_evidence_selects_matching_candidate() {
        let strict = YearWindow::for_mode(YearMode::StrictPaper, 2026);
        let body = " X. Li. Some title. Journal 1730, 1999.";
        assert_eq!(extract_year(body, "lif99", &strict), Some((1999, YearSource::KeyEvidence)));
        assert_eq!(year_candidates(body, &strict), vec![1730, 1999]);
        assert_eq!(year_candidates(body, &window()), vec![1999]);
    }

    #[test]
    fn single_candidate() {
        assert_eq!(extract_year(" A. B. Title. 2004.", "foo", &window()), Some((2004, YearSource::FirstCandidate)));
    }

    #[test]
    fn off_by_one_evidence() {
        assert_eq!(extract_year(" Title. 1999.", "smith00", &window()), Some((1999, YearSource::KeyEvidence)));
    }

    #[test]
    fn no_evidence_takes_first() {
        assert_eq!(extract_year(" T. 2001, pages 1900-1910.", "abc", &window()), Some((2001, YearSource::FirstCandidate)));
        assert_eq!(extract_year(" no digits", "abc", &window()), None);
    }

    #[test]
    fn verbatim_key_year_beats_earlier_candidate() {
        assert_eq!(extract_year(" 2001, 2005.", "x2005", &window()), Some((2005, YearSource::KeyEvidence)));
    }

    #[test]
    fn exact_evidence_preferred_over_neighbor() {
        assert_eq!(extract_year(" 1998, 1999.", "x99", &window()), Some((1999, YearSource::KeyEvidence)));
    }

    #[test]
    fn year_command_wins() {
        let body = r" \bibinfo{author}{A. B.}, 1998. \bibinfo{year}{2003}.";
        assert_eq!(extract_year(body, "ab98", &window()), Some((2003, YearSource::Command)));
        assert_eq!(extract_year(r" \byear{1987}", "k", &window()), Some((1987, YearSource::Command)));
    }

    #[test]
    fn out_of_window_never_returned() {
        assert_eq!(extract_year(" 3000 1200 12345", "k3000", &window()), None);
    }

    #[test]
    fn two_digit_mapping() {
        assert_eq!(expand_two_digit(99), 1999);
        assert_eq!(expand_two_digit(30), 1930);
        assert_eq!(expand_two_digit(29), 2029);
        assert_eq!(expand_two_digit(5), 2005);
    }

    #[test]
    fn newblock_pattern() {
        let body = " K.~Sagonas and T.~Swift and D.S. Warren.\\newblock Efficient Tabling.\\newblock In Proc.";
        let m = extract_author_text_by_pattern(body).unwrap();
        assert_eq!(m.pattern, AuthorPattern::NewblockInitials);
        assert_eq!(m.author_text, "K.~Sagonas and T.~Swift and D.S. Warren.");
    }

    #[test]
    fn bauthor_pattern() {
        let body = r" \bauthor{\bsnm{Knuth}, \binits{D.}} (\byear{1974}) \batitle{Structured programming}.";
        let m = extract_author_text_by_pattern(body).unwrap();
        assert_eq!(m.pattern, AuthorPattern::Bauthor);
        assert_eq!(m.author_text, "Knuth, D.");
    }

    #[test]
    fn bauthor_run_spans_list() {
        let body = r" \bauthor{\bsnm{Cormode}, \binits{G.}}, \bauthor{\bsnm{Yan}, \binits{J.}} \batitle{T}";
        let m = extract_author_text_by_pattern(body).unwrap();
        assert_eq!(m.author_text, "Cormode, G., Yan, J.");
    }

    #[test]
    fn bibinfo_pattern() {
        let body = r" \bibinfo{author}{G.~Cormode} and \bibinfo{author}{S.~Muthukrishnan}, \bibinfo{title}{An improved data stream summary}, \bibinfo{year}{2005}.";
        let m = extract_author_text_by_pattern(body).unwrap();
        assert_eq!(m.pattern, AuthorPattern::BibinfoAuthor);
        assert_eq!(m.author_text, "G.~Cormode and S.~Muthukrishnan");
    }

    #[test]
    fn revtex_bibfield_pattern() {
        let body = r" \bibfield {author} {\bibinfo {author} {\bibfnamefont {G.}~\bibnamefont {Cormode}}\ and\ \bibinfo {author} {\bibfnamefont {J.}~\bibnamefont {Yan}},\ }\bibfield {title} {\bibinfo {title} {X}}";
        let m = extract_author_text_by_pattern(body).unwrap();
        assert_eq!(m.pattern, AuthorPattern::BibinfoAuthor);
        assert_eq!(m.author_text, "G.~Cormode and J.~Yan");
    }

    #[test]
    fn other_command_patterns() {
        let m = extract_author_text_by_pattern(r" \Name{D.~E. Knuth} and \Name{L. Lamport}. Title.").unwrap();
        assert_eq!(m.pattern, AuthorPattern::Name);
        assert_eq!(m.author_text, "D.~E. Knuth and L. Lamport");
        let m = extract_author_text_by_pattern(r" \bibsc{Knuth, D.} Title, 1974.").unwrap();
        assert_eq!(m.pattern, AuthorPattern::Bibsc);
        assert_eq!(m.author_text, "Knuth, D.");
    }

    #[test]
    fn full_names_before_newblock() {
        let m = extract_author_text_by_pattern(" Donald Knuth and Leslie Lamport.\\newblock A title.").unwrap();
        assert_eq!(m.pattern, AuthorPattern::NewblockFullNames);
        assert_eq!(m.author_text, "Donald Knuth and Leslie Lamport.");
    }

    #[test]
    fn period_quote_pattern() {
        let body = " J. Smith and A. B. Jones. ``A study of things,'' in Proc. X, 2001.";
        let m = extract_author_text_by_pattern(body).unwrap();
        assert_eq!(m.pattern, AuthorPattern::PeriodQuote);
        assert_eq!(m.author_text, "J. Smith and A. B. Jones.");
        assert_eq!(extract_title(&body[m.span.end..]).as_deref(), Some("A study of things"));
    }

    #[test]
    fn no_pattern() {
        assert_eq!(extract_author_text_by_pattern(" some plain text without structure 2001"), None);
        // a title-looking block before \newblock is rejected
        assert_eq!(extract_author_text_by_pattern(" The art of programming, vol 3.\\newblock x"), None);
    }

    #[test]
    fn title_examples() {
        assert_eq!(extract_title(r", \bibinfo{title}{Data streams}, \bibinfo{journal}{J}. 2005.").as_deref(), Some("Data streams"));
        assert_eq!(extract_title(r" (\byear{1974}) \batitle{Structured programming}. J").as_deref(), Some("Structured programming"));
        assert_eq!(extract_title("\\newblock Efficient Tabling.\\newblock In Proc.").as_deref(), Some("Efficient Tabling"));
        assert_eq!(extract_title("").as_deref(), None);
        assert_eq!(extract_title("   ").as_deref(), None);
        assert_eq!(extract_title(" {A}spect Theory,").as_deref(), Some("Aspect Theory"));
        assert_eq!(extract_title(" \\emph{Structured Programming}, 1974.").as_deref(), Some("Structured Programming"));
        assert_eq!(extract_title(" {\\em Sorting}. Addison").as_deref(), Some("Sorting"));
        assert_eq!(extract_title(" Version 2.0 released. x").as_deref(), Some("Version 2.0 released"));
    }
}
