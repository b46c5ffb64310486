//! Splitting author text into individual names with a first/last boundary.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::features::{compute_word_features, is_initials, WordFeatures};
use crate::tex::fold_accents;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum AuthorError {
    #[error("author text is empty")]
    EmptyAuthorText,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AuthorName {
    pub first: String,
    pub last: String,
    /// 1-based position in the entry's author list.
    pub position: usize,
}

impl AuthorName {
    /// Lowercased, accent-folded last name restricted to alphanumerics; the
    /// form compared against citation keys.
    pub fn match_form(&self) -> String {
        match_form(&self.last)
    }

    /// Accent-folded alphanumeric last name with case preserved, used to
    /// build the concatenated acronym target.
    pub fn acronym_form(&self) -> String {
        fold_accents(&self.last).chars().filter(|c| c.is_alphanumeric()).collect()
    }
}

pub fn match_form(name: &str) -> String {
    fold_accents(name)
        .chars()
        .filter(|c| c.is_alphanumeric())
        .flat_map(char::to_lowercase)
        .collect()
}

/// The tokens of one person. `comma_at` marks a `Last, First` separator
/// after that many tokens.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct NameGroup {
    pub tokens: Vec<String>,
    pub comma_at: Option<usize>,
}

impl NameGroup {
    fn has_initials(&self) -> bool {
        self.tokens.iter().any(|t| is_initials(t))
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct AuthorGroups {
    pub groups: Vec<NameGroup>,
    /// Set when an `et al.` (or `and others`) marker was dropped.
    pub truncated: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Item {
    Word(String),
    Comma,
}

fn is_and(word: &str) -> bool {
    matches!(word, "and" | "&" | "\\&")
}

fn lex(author_text: &str) -> Vec<Item> {
    let mut items = Vec::new();
    let mut word = String::new();
    let mut depth = 0usize;
    let flush = |word: &mut String, items: &mut Vec<Item>| {
        if !word.is_empty() {
            items.push(Item::Word(std::mem::take(word)));
        }
    };
    for c in author_text.chars() {
        match c {
            '{' => {
                depth += 1;
                word.push(c);
            }
            '}' => {
                depth = depth.saturating_sub(1);
                word.push(c);
            }
            ',' | ';' if depth == 0 => {
                flush(&mut word, &mut items);
                items.push(Item::Comma);
            }
            c if c.is_whitespace() || c == '~' => {
                if depth == 0 {
                    flush(&mut word, &mut items);
                } else {
                    word.push(c);
                }
            }
            c => word.push(c),
        }
    }
    flush(&mut word, &mut items);
    items
}

/// Split author text on `and`, `&` and person-separating commas.
pub fn split_author_groups(author_text: &str) -> Result<AuthorGroups, AuthorError> {
    let items = lex(author_text);
    if !items.iter().any(|i| matches!(i, Item::Word(_))) {
        return Err(AuthorError::EmptyAuthorText);
    }
    let mut out = AuthorGroups::default();
    let mut cur = NameGroup::default();
    let close = |cur: &mut NameGroup, out: &mut AuthorGroups| {
        if !cur.tokens.is_empty() {
            if cur.comma_at == Some(cur.tokens.len()) {
                cur.comma_at = None;
            }
            out.groups.push(std::mem::take(cur));
        } else {
            *cur = NameGroup::default();
        }
    };
    let next_word = |from: usize| {
        items[from..].iter().find_map(|i| match i {
            Item::Word(w) => Some(w.as_str()),
            Item::Comma => None,
        })
    };
    let mut i = 0;
    while i < items.len() {
        match &items[i] {
            Item::Word(w) if is_and(w) => {
                close(&mut cur, &mut out);
                if next_word(i + 1) == Some("others") {
                    out.truncated = true;
                    i += 1;
                }
            }
            Item::Word(w) if w == "et" && matches!(next_word(i + 1), Some("al." | "al" | "al.,")) => {
                out.truncated = true;
                i += 1;
            }
            Item::Word(w) if w == "others" && out.groups.is_empty() && cur.tokens.is_empty() => {
                out.truncated = true;
            }
            Item::Word(w) => cur.tokens.push(w.clone()),
            Item::Comma => {
                let next = items.get(i + 1).and_then(|x| match x {
                    Item::Word(w) => Some(w.as_str()),
                    Item::Comma => None,
                });
                let last_first = matches!(next, Some(n) if is_initials(n) && !is_and(n))
                    && cur.comma_at.is_none()
                    && !cur.tokens.is_empty()
                    && !cur.has_initials();
                if last_first {
                    cur.comma_at = Some(cur.tokens.len());
                } else {
                    close(&mut cur, &mut out);
                }
            }
        }
        i += 1;
    }
    close(&mut cur, &mut out);
    if out.groups.is_empty() {
        return Err(AuthorError::EmptyAuthorText);
    }
    Ok(out)
}

const PARTICLES: &[&str] = &[
    "ter", "van", "de", "der", "den", "von", "da", "del", "della", "di", "du", "la", "le", "dos", "das", "zu", "vom", "ten",
];

fn is_particle(token: &str) -> bool {
    PARTICLES.contains(&token)
}

/// Initials with periods, or a 1-3 letter all-capital token such as `DE`.
fn looks_initial(token: &str) -> bool {
    if is_initials(token) {
        return true;
    }
    let n = token.chars().count();
    (1..=3).contains(&n) && token.chars().all(|c| c.is_uppercase())
}

fn clean_last(token: &str) -> String {
    let t = token.trim_end_matches([',', ';']);
    if is_initials(t) {
        t.to_string()
    } else {
        t.trim_end_matches('.').to_string()
    }
}

fn clean_first(token: &str) -> String {
    token.trim_end_matches([',', ';']).to_string()
}

fn join(tokens: &[String], clean: fn(&str) -> String) -> String {
    tokens.iter().map(|t| clean(t)).filter(|t| !t.is_empty()).collect::<Vec<_>>().join(" ")
}

/// Likelihood that a token is part of a last name, from its word features.
///
/// Used only to break ties when the ordering heuristics disagree; the
/// weights are fixed rather than trained.
pub fn last_name_likelihood(features: &WordFeatures) -> f64 {
    let mut z = -0.5;
    if features.capital_period || features.capital_period_dup {
        z -= 3.0;
    }
    if features.init_capital && features.token_length >= 3 {
        z += 2.0;
    }
    if features.all_upper && features.token_length <= 3 {
        z -= 1.5;
    }
    if features.ends_with_comma {
        z += 0.5;
    }
    z += 0.2 * features.token_length.min(10) as f64;
    1.0 / (1.0 + (-z).exp())
}

fn tie_break(tokens: &[String]) -> (Vec<String>, Vec<String>) {
    let p: Vec<f64> = tokens
        .iter()
        .map(|t| last_name_likelihood(&compute_word_features(t)).clamp(1e-9, 1.0 - 1e-9))
        .collect();
    let n = tokens.len();
    let ll = |last: &std::ops::Range<usize>| -> f64 {
        (0..n).map(|i| if last.contains(&i) { p[i].ln() } else { (1.0 - p[i]).ln() }).sum()
    };
    // the last name is the contiguous run with the highest joint likelihood;
    // ties go to the run ending furthest right
    let mut best = n - 1..n;
    let mut best_ll = ll(&best);
    for end in (1..=n).rev() {
        for start in 0..end {
            let s = ll(&(start..end));
            if s > best_ll {
                best_ll = s;
                best = start..end;
            }
        }
    }
    let first = (0..n).filter(|i| !best.contains(i)).map(|i| tokens[i].clone()).collect();
    (first, tokens[best].to_vec())
}

/// Assign a group's tokens to first and last name.
pub fn resolve_name(group: &NameGroup, position: usize) -> AuthorName {
    let tokens = &group.tokens;
    let (first, last): (Vec<String>, Vec<String>) = match group.comma_at {
        Some(k) if k > 0 && k < tokens.len() => (tokens[k..].to_vec(), tokens[..k].to_vec()),
        _ if tokens.len() <= 1 => (Vec::new(), tokens.clone()),
        _ => {
            let n = tokens.len();
            let head_initial = looks_initial(&tokens[0]);
            let tail_initial = looks_initial(&tokens[n - 1]);
            if !tail_initial {
                let mut k = n - 1;
                while k > 0 && is_particle(&tokens[k - 1]) {
                    k -= 1;
                }
                if k == 0 {
                    k = n - 1;
                }
                (tokens[..k].to_vec(), tokens[k..].to_vec())
            } else if !head_initial {
                // `Knuth D.E.`: trailing initials run is the first name
                let mut k = n;
                while k > 1 && looks_initial(&tokens[k - 1]) {
                    k -= 1;
                }
                (tokens[k..].to_vec(), tokens[..k].to_vec())
            } else {
                tie_break(tokens)
            }
        }
    };
    let mut last = join(&last, clean_last);
    let mut first = join(&first, clean_first);
    if last.is_empty() {
        last = std::mem::take(&mut first);
    }
    AuthorName { first, last, position }
}

/// Split author text and resolve every person in order.
pub fn recognize_authors(author_text: &str) -> Result<(Vec<AuthorName>, bool), AuthorError> {
    let groups = split_author_groups(author_text)?;
    let names = groups
        .groups
        .iter()
        .enumerate()
        .map(|(i, g)| resolve_name(g, i + 1))
        .filter(|n| !n.last.is_empty())
        .enumerate()
        .map(|(i, mut n)| {
            n.position = i + 1;
            n
        })
        .collect();
    Ok((names, groups.truncated))
}
