//! Word tokenization and the per-word features fed to the name classifier.

use serde::{Deserialize, Serialize};

/// A whitespace-delimited token with its byte span in the source string.
/// Tildes separate tokens like whitespace does.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Token<'a> {
    pub text: &'a str,
    pub start: usize,
    pub end: usize,
}

pub fn is_separator(c: char) -> bool {
    c.is_whitespace() || c == '~'
}

pub fn tokenize(text: &str) -> Vec<Token<'_>> {
    let mut tokens = Vec::new();
    let mut start = None;
    for (i, c) in text.char_indices() {
        if is_separator(c) {
            if let Some(s) = start.take() {
                tokens.push(Token { text: &text[s..i], start: s, end: i });
            }
        } else if start.is_none() {
            start = Some(i);
        }
    }
    if let Some(s) = start {
        tokens.push(Token { text: &text[s..], start: s, end: text.len() });
    }
    tokens
}

/// Word features used to separate author names from other words.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WordFeatures {
    pub starts_with_brace: bool,
    pub ends_with_brace: bool,
    pub has_internal_brace: bool,
    pub ends_with_comma: bool,
    pub ends_with_period: bool,
    pub capital_period: bool,
    pub capital_period_dup: bool,
    pub init_capital: bool,
    pub four_digit_year: bool,
    pub all_alpha: bool,
    pub all_digits: bool,
    pub all_symbols: bool,
    pub mixed_case: bool,
    pub all_upper: bool,
    pub all_lower: bool,
    pub internal_symbol: bool,
    pub token_length: usize,
    /// Categorical: the summarized shape of the word.
    pub summarized_pattern: String,
    /// Categorical: the lowercased word with symbols removed.
    pub token_word: String,
}

impl WordFeatures {
    pub const BOOL_NAMES: [&'static str; 16] = [
        "starts_with_brace",
        "ends_with_brace",
        "has_internal_brace",
        "ends_with_comma",
        "ends_with_period",
        "capital_period",
        "capital_period_dup",
        "init_capital",
        "four_digit_year",
        "all_alpha",
        "all_digits",
        "all_symbols",
        "mixed_case",
        "all_upper",
        "all_lower",
        "internal_symbol",
    ];

    pub fn bools(&self) -> [bool; 16] {
        [
            self.starts_with_brace,
            self.ends_with_brace,
            self.has_internal_brace,
            self.ends_with_comma,
            self.ends_with_period,
            self.capital_period,
            self.capital_period_dup,
            self.init_capital,
            self.four_digit_year,
            self.all_alpha,
            self.all_digits,
            self.all_symbols,
            self.mixed_case,
            self.all_upper,
            self.all_lower,
            self.internal_symbol,
        ]
    }
}

fn trim_trailing_punct(word: &str) -> &str {
    word.trim_end_matches([',', ';', ':'])
}

/// The word with non-alphanumeric characters trimmed from both ends.
fn core(word: &str) -> &str {
    word.trim_matches(|c: char| !c.is_alphanumeric())
}

/// `M.`: a single capital followed by a period.
pub fn is_capital_period(word: &str) -> bool {
    let w = trim_trailing_punct(word);
    let mut chars = w.chars();
    matches!((chars.next(), chars.next(), chars.next()), (Some(c), Some('.'), None) if c.is_uppercase())
}

/// `M.M.`, `M.~M.`, `M.-M.`: two or more initials.
pub fn is_capital_period_dup(word: &str) -> bool {
    let w: Vec<char> = trim_trailing_punct(word).chars().collect();
    let mut i = 0;
    let mut initials = 0;
    while i < w.len() {
        if initials > 0 && (w[i] == '-' || w[i] == '~') {
            i += 1;
        }
        if i + 1 < w.len() && w[i].is_uppercase() && w[i + 1] == '.' {
            initials += 1;
            i += 2;
        } else {
            return false;
        }
    }
    initials >= 2
}

/// Either initials form.
pub fn is_initials(word: &str) -> bool {
    is_capital_period(word) || is_capital_period_dup(word)
}

pub fn compute_word_features(word: &str) -> WordFeatures {
    let chars: Vec<char> = word.chars().collect();
    let trimmed: Vec<char> = trim_trailing_punct(word).chars().collect();
    let core = core(word);

    let letters = word.chars().filter(|c| c.is_alphabetic()).count();
    let has_upper = word.chars().any(char::is_uppercase);
    let has_lower = word.chars().any(char::is_lowercase);
    let nonempty = !chars.is_empty();

    let mut seen_lower = false;
    let mut mixed_case = false;
    for c in word.chars() {
        if c.is_lowercase() {
            seen_lower = true;
        } else if c.is_uppercase() && seen_lower {
            mixed_case = true;
        }
    }

    let has_internal_brace = trimmed.len() > 2
        && trimmed[1..trimmed.len() - 1].iter().any(|&c| c == '{' || c == '}');

    let token_word: String = word.chars().filter(|c| c.is_alphanumeric()).flat_map(char::to_lowercase).collect();

    WordFeatures {
        starts_with_brace: chars.first() == Some(&'{'),
        ends_with_brace: trimmed.last() == Some(&'}'),
        has_internal_brace,
        ends_with_comma: chars.last() == Some(&','),
        ends_with_period: chars.last() == Some(&'.'),
        capital_period: is_capital_period(word),
        capital_period_dup: is_capital_period_dup(word),
        init_capital: chars.first().is_some_and(|c| c.is_uppercase()),
        four_digit_year: core.len() == 4
            && core.chars().all(|c| c.is_ascii_digit())
            && (core.starts_with('1') || core.starts_with('2')),
        all_alpha: nonempty && chars.iter().all(|c| c.is_alphabetic()),
        all_digits: nonempty && chars.iter().all(|c| c.is_ascii_digit()),
        all_symbols: nonempty && chars.iter().all(|c| !c.is_alphanumeric()),
        mixed_case,
        all_upper: letters >= 2 && !has_lower && core.chars().all(char::is_alphanumeric),
        all_lower: letters >= 1 && !has_upper,
        internal_symbol: core.chars().any(|c| !c.is_alphanumeric()),
        token_length: token_word.chars().count(),
        summarized_pattern: summarize_pattern(word),
        token_word,
    }
}

/// Collapse a word to its shape: digit runs become `d`, a capital followed
/// by lowercase letters becomes `Aa`, other capitals `A`, lowercase runs
/// `a`. Symbols are kept as they are.
pub fn summarize_pattern(word: &str) -> String {
    let chars: Vec<char> = word.chars().collect();
    let mut out = String::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c.is_ascii_digit() {
            while i < chars.len() && chars[i].is_ascii_digit() {
                i += 1;
            }
            out.push('d');
        } else if c.is_uppercase() {
            i += 1;
            if i < chars.len() && chars[i].is_lowercase() {
                while i < chars.len() && chars[i].is_lowercase() {
                    i += 1;
                }
                out.push_str("Aa");
            } else {
                out.push('A');
            }
        } else if c.is_lowercase() {
            while i < chars.len() && chars[i].is_lowercase() {
                i += 1;
            }
            out.push('a');
        } else {
            out.push(c);
            i += 1;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn initials_detect() {
        assert!(compute_word_features("M.").capital_period);
        for w in ["M.M.", "M.~M.", "M.-M.", "D.E.,"] {
            assert!(is_capital_period_dup(w), "{w}");
        }
        assert!(!is_capital_period_dup("M."));
        assert!(!is_capital_period("Mr."));
    }

    #[test]
    fn table_examples() {
        let f = compute_word_features("2006");
        assert!(f.four_digit_year && f.all_digits);
        let f = compute_word_features("Cesa-Bianchi");
        assert!(f.mixed_case && f.internal_symbol);
        assert!(compute_word_features("ProSys").mixed_case);
        assert!(!compute_word_features("Knuth").mixed_case);
        let f = compute_word_features("{A}spect");
        assert!(f.starts_with_brace && f.has_internal_brace && !f.ends_with_brace);
        let f = compute_word_features("Theory},");
        assert!(f.ends_with_brace && f.ends_with_comma && !f.has_internal_brace);
        assert!(compute_word_features("Fischer,").ends_with_comma);
        assert!(compute_word_features("Singer.").ends_with_period);
        assert!(compute_word_features("Improved").init_capital);
        assert!(compute_word_features("analysis").all_alpha);
        assert!(compute_word_features("44").all_digits);
        assert!(!compute_word_features("44").four_digit_year);
        assert!(compute_word_features("\"").all_symbols);
        assert!(compute_word_features("ACM").all_upper);
        assert!(!compute_word_features("M.").all_upper);
        assert!(compute_word_features("logic").all_lower);
        assert!(compute_word_features("Finite-time").internal_symbol);
        assert_eq!(compute_word_features("Cesa-Bianchi").token_length, 11);
    }

    #[test]
    fn pattern_examples() {
        assert_eq!(summarize_pattern("2006"), "d");
        assert_eq!(summarize_pattern("Knuth"), "Aa");
        assert_eq!(summarize_pattern("Cesa-Bianchi"), "Aa-Aa");
        assert_eq!(summarize_pattern("ACM"), "AAA");
        assert_eq!(summarize_pattern("D.E."), "A.A.");
        assert_eq!(summarize_pattern("logic2006,"), "ad,");
    }

    #[test]
    fn tokens_split_on_tilde() {
        let toks = tokenize("K.~Sagonas and  T.~Swift");
        let texts: Vec<_> = toks.iter().map(|t| t.text).collect();
        assert_eq!(texts, vec!["K.", "Sagonas", "and", "T.", "Swift"]);
        assert_eq!(toks[1].start, 3);
        assert_eq!(tokenize("  ").len(), 0);
    }

    proptest! {
        #[test]
        fn features_are_total(word in "\\PC{1,12}") {
            let f = compute_word_features(&word);
            let exclusive = [f.all_alpha, f.all_digits, f.all_symbols].iter().filter(|b| **b).count();
            prop_assert!(exclusive <= 1);
            prop_assert_eq!(f.token_length, word.chars().filter(|c| c.is_alphanumeric()).count());
        }

        #[test]
        fn pattern_shrinks(word in "[A-Za-z0-9.,{}-]{0,16}") {
            let p = summarize_pattern(&word);
            prop_assert!(p.chars().count() <= word.chars().count());
        }

        // `d` is itself a lowercase letter, so idempotence is checked on
        // inputs whose summary contains no digit class.
        #[test]
        fn pattern_idempotent(word in "[A-Za-z.,{}-]{0,16}") {
            let p = summarize_pattern(&word);
            prop_assert_eq!(summarize_pattern(&p), p);
        }
    }
}
