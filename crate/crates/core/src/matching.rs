//! Citation-key versus author-name matching.
//!
//! Two families of checks live here: five string similarity metrics between
//! a key and a single last name, and a weighted longest-common-subsequence
//! test for whether a key abbreviates the whole author list.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MatchError {
    #[error("cannot score an empty string")]
    DegenerateInput,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

/// Thresholds shared by the similarity metrics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MetricConfig {
    pub threshold: f64,
    /// Exponent applied to set sizes by the asymmetric metric.
    pub w: f64,
}

impl Default for MetricConfig {
    fn default() -> Self {
        Self { threshold: 0.5, w: 0.5 }
    }
}

impl MetricConfig {
    pub fn validate(&self) -> Result<(), MatchError> {
        if !(self.threshold > 0.0 && self.threshold <= 1.0) {
            return Err(MatchError::InvalidParameter(format!("threshold {} not in (0, 1]", self.threshold)));
        }
        if !(self.w > 0.0 && self.w <= 1.0) {
            return Err(MatchError::InvalidParameter(format!("w {} not in (0, 1]", self.w)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Score {
    pub value: f64,
    pub matched: bool,
}

impl Score {
    fn new(value: f64, threshold: f64) -> Self {
        Self { value, matched: value >= threshold }
    }
}

/// Verdicts of the five metrics for one (last name, key) pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricScores {
    /// Exact substring match.
    pub m1: bool,
    /// Longest common substring over the name length.
    pub m2: Score,
    /// n-gram Jaccard similarity.
    pub m3: Score,
    /// n-gram asymmetric similarity.
    pub m4: Score,
    /// n-gram Dice coefficient.
    pub m5: Score,
}

/// All distinct contiguous substrings of `n` characters.
pub fn ngram_set(s: &str, n: usize) -> BTreeSet<String> {
    assert!(n >= 1, "n-gram size must be positive");
    let chars: Vec<char> = s.chars().collect();
    if chars.len() < n {
        return BTreeSet::new();
    }
    chars.windows(n).map(|w| w.iter().collect()).collect()
}

/// Length of the longest common contiguous substring.
pub fn longest_common_substring(a: &[char], b: &[char]) -> usize {
    let mut prev = vec![0usize; b.len() + 1];
    let mut cur = vec![0usize; b.len() + 1];
    let mut best = 0;
    for &ca in a {
        for (j, &cb) in b.iter().enumerate() {
            cur[j + 1] = if ca == cb { prev[j] + 1 } else { 0 };
            best = best.max(cur[j + 1]);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    best
}

/// `(|U|^w - |D|^w) / |U|^w` with `U` the union of both gram sets and `D`
/// the author grams missing from the key.
pub fn asymmetric_similarity(union: usize, author_only: usize, w: f64) -> f64 {
    let u = (union as f64).powf(w);
    (u - (author_only as f64).powf(w)) / u
}

/// Score a lowercased last name `s_a` against a lowercased key `s_c`.
pub fn score_metrics(s_a: &str, s_c: &str, config: &MetricConfig) -> Result<MetricScores, MatchError> {
    let a: Vec<char> = s_a.chars().collect();
    let c: Vec<char> = s_c.chars().collect();
    if a.is_empty() || c.is_empty() {
        return Err(MatchError::DegenerateInput);
    }
    let n = 3.min(a.len()).min(c.len());
    let grams_a = ngram_set(s_a, n);
    let grams_c = ngram_set(s_c, n);
    let inter = grams_a.intersection(&grams_c).count();
    let union = grams_a.len() + grams_c.len() - inter;
    let author_only = grams_a.len() - inter;

    let m2 = longest_common_substring(&a, &c) as f64 / a.len() as f64;
    let m3 = inter as f64 / union as f64;
    let m4 = asymmetric_similarity(union, author_only, config.w);
    let m5 = 2.0 * inter as f64 / (grams_a.len() + grams_c.len()) as f64;
    Ok(MetricScores {
        m1: s_c.contains(s_a),
        m2: Score::new(m2, config.threshold),
        m3: Score::new(m3, config.threshold),
        m4: Score::new(m4, config.threshold),
        m5: Score::new(m5, config.threshold),
    })
}

/// Letter weights for the acronym test.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AcronymParams {
    /// Match on the capitalized first letter of a last name.
    #[serde(rename = "w_A")]
    pub w_capital: f64,
    /// Match on a lowercase first letter.
    #[serde(rename = "w_a")]
    pub w_lower: f64,
    /// Match on any other letter.
    #[serde(rename = "w_s")]
    pub w_other: f64,
    pub threshold_factor: f64,
}

impl Default for AcronymParams {
    fn default() -> Self {
        Self { w_capital: 2.0, w_lower: 1.1, w_other: 0.1, threshold_factor: 0.5 }
    }
}

impl AcronymParams {
    pub fn validate(&self) -> Result<(), MatchError> {
        if !(self.w_capital > self.w_lower && self.w_lower > self.w_other && self.w_other > 0.0) {
            return Err(MatchError::InvalidParameter(format!(
                "acronym weights must satisfy w_capital > w_lower > w_other > 0, got {} {} {}",
                self.w_capital, self.w_lower, self.w_other
            )));
        }
        if !(self.threshold_factor > 0.0) || !self.threshold_factor.is_finite() {
            return Err(MatchError::InvalidParameter(format!("threshold_factor {}", self.threshold_factor)));
        }
        Ok(())
    }
}

/// The concatenated last names with per-character weights.
#[derive(Debug, Clone, PartialEq)]
pub struct AcronymTarget {
    chars: Vec<char>,
    weights: Vec<f64>,
    authors: usize,
}

impl AcronymTarget {
    pub fn new<S: AsRef<str>>(last_names: &[S], params: &AcronymParams) -> Self {
        let mut chars = Vec::new();
        let mut weights = Vec::new();
        for name in last_names {
            for (k, ch) in name.as_ref().chars().enumerate() {
                let w = match k {
                    0 if ch.is_uppercase() => params.w_capital,
                    0 => params.w_lower,
                    _ => params.w_other,
                };
                chars.push(ch);
                weights.push(w);
            }
        }
        Self { chars, weights, authors: last_names.len() }
    }

    pub fn len(&self) -> usize {
        self.chars.len()
    }

    pub fn is_empty(&self) -> bool {
        self.chars.is_empty()
    }

    pub fn authors(&self) -> usize {
        self.authors
    }

    pub fn weight(&self, j: usize) -> f64 {
        self.weights[j]
    }

    pub fn char_at(&self, j: usize) -> char {
        self.chars[j]
    }
}

pub fn chars_match(a: char, b: char) -> bool {
    a == b || a.to_lowercase().eq(b.to_lowercase())
}

/// Weighted LCS score of `key` against the target.
pub fn acronym_score(key: &str, target: &AcronymTarget) -> f64 {
    let m = target.len();
    let mut prev = vec![0.0f64; m + 1];
    let mut cur = vec![0.0f64; m + 1];
    for kc in key.chars() {
        cur[0] = 0.0;
        for j in 1..=m {
            let p = prev[j].max(cur[j - 1]);
            let w = if chars_match(kc, target.chars[j - 1]) { target.weights[j - 1] } else { 0.0 };
            cur[j] = p.max(prev[j - 1] + w);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[m]
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AcronymVerdict {
    pub matched: bool,
    pub score: f64,
}

/// Does `key` abbreviate the ordered list of last names?
///
/// The score must exceed `threshold_factor * w_capital * T` where `T` is the
/// number of authors. An empty name list never matches.
pub fn is_acronym<S: AsRef<str>>(key: &str, last_names: &[S], params: &AcronymParams) -> AcronymVerdict {
    let target = AcronymTarget::new(last_names, params);
    let score = acronym_score(key, &target);
    let threshold = params.threshold_factor * params.w_capital * target.authors() as f64;
    AcronymVerdict { matched: target.authors() > 0 && score > threshold, score }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn set(items: &[&str]) -> BTreeSet<String> {
        items.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn ngram_examples() {
        assert_eq!(ngram_set("abcd", 3), set(&["abc", "bcd"]));
        assert_eq!(ngram_set("aaaa", 2), set(&["aa"]));
        assert!(ngram_set("ab", 3).is_empty());
    }

    #[test]
    fn cormode_scores() {
        let s = score_metrics("cormode", "cormode05", &MetricConfig::default()).unwrap();
        assert!(s.m1);
        assert!((s.m2.value - 1.0).abs() < 1e-12);
        assert!((s.m3.value - 5.0 / 7.0).abs() < 1e-12);
        assert!((s.m4.value - 1.0).abs() < 1e-12);
        assert!((s.m5.value - 10.0 / 12.0).abs() < 1e-12);
    }

    #[test]
    fn identity_scores_one() {
        let s = score_metrics("knuth", "knuth", &MetricConfig::default()).unwrap();
        assert!(s.m1);
        for v in [s.m2.value, s.m3.value, s.m4.value, s.m5.value] {
            assert_eq!(v, 1.0);
        }
    }

    #[test]
    fn reif_lr_has_no_overlap() {
        let s = score_metrics("reif", "lr", &MetricConfig::default()).unwrap();
        assert!(!s.m1);
        assert_eq!(s.m3.value, 0.0);
        assert_eq!(s.m5.value, 0.0);
        assert!(!s.m4.matched);
    }

    #[test]
    fn empty_is_degenerate() {
        assert_eq!(score_metrics("", "x", &MetricConfig::default()), Err(MatchError::DegenerateInput));
        assert_eq!(score_metrics("x", "", &MetricConfig::default()), Err(MatchError::DegenerateInput));
    }

    #[test]
    fn acronym_examples() {
        let p = AcronymParams::default();
        let cmy = ["Cormode", "Muthukrishnan", "Yan"];
        let v = is_acronym("CMY", &cmy, &p);
        assert!(v.matched);
        assert!((v.score - 6.0).abs() < 1e-12);
        assert!(is_acronym("CormodeMY", &cmy, &p).matched);
        assert!(is_acronym("CorMutYan", &cmy, &p).matched);
        let v = is_acronym("", &cmy, &p);
        assert!(!v.matched);
        assert_eq!(v.score, 0.0);
        let v = is_acronym("logic2006", &["Fischer"], &p);
        assert!(!v.matched);
        assert!((v.score - 0.2).abs() < 1e-12);
        let v = is_acronym("LR", &["Ladner", "Reif"], &p);
        assert!(v.matched);
        assert!((v.score - 4.0).abs() < 1e-12);
    }

    #[test]
    fn lowercase_first_letters_use_lower_weight() {
        let p = AcronymParams::default();
        let v = is_acronym("tm", &["terMeulen"], &p);
        // t at a lowercase first letter, m elsewhere
        assert!((v.score - 1.2).abs() < 1e-12);
        assert!(v.matched);
    }

    #[test]
    fn params_validate() {
        assert!(AcronymParams::default().validate().is_ok());
        let bad = AcronymParams { w_capital: 1.0, ..Default::default() };
        assert!(bad.validate().is_err());
        assert!(MetricConfig { threshold: 0.0, w: 0.5 }.validate().is_err());
        assert!(MetricConfig { threshold: 1.0, w: 1.5 }.validate().is_err());
    }

    proptest! {
        #[test]
        fn scores_bounded_and_symmetric(a in "[a-e0-9]{1,10}", c in "[a-e0-9]{1,10}") {
            let cfg = MetricConfig::default();
            let ab = score_metrics(&a, &c, &cfg).unwrap();
            let ba = score_metrics(&c, &a, &cfg).unwrap();
            for v in [ab.m2.value, ab.m3.value, ab.m4.value, ab.m5.value] {
                prop_assert!((0.0..=1.0).contains(&v));
            }
            prop_assert_eq!(ab.m3.value, ba.m3.value);
            prop_assert_eq!(ab.m5.value, ba.m5.value);
        }

        #[test]
        fn acronym_score_bounded(key in "[A-Za-z]{0,8}", names in proptest::collection::vec("[A-Za-z][a-z]{0,5}", 1..4)) {
            let p = AcronymParams::default();
            let v = is_acronym(&key, &names, &p);
            let total: usize = names.iter().map(|n| n.chars().count()).sum();
            let bound = p.w_capital * names.len() as f64 + p.w_other * (total - names.len()) as f64;
            prop_assert!(v.score >= 0.0 && v.score <= bound + 1e-9);
        }

        #[test]
        fn appending_never_decreases(key in "[A-Za-z]{0,8}", extra in "[A-Za-z]", names in proptest::collection::vec("[A-Z][a-z]{0,5}", 1..4)) {
            let p = AcronymParams::default();
            let before = is_acronym(&key, &names, &p).score;
            let after = is_acronym(&format!("{key}{extra}"), &names, &p).score;
            prop_assert!(after >= before);
        }

        #[test]
        fn full_concatenation_matches(names in proptest::collection::vec("[A-Za-z][a-z]{0,6}", 1..5)) {
            let key: String = names.concat();
            prop_assert!(is_acronym(&key, &names, &AcronymParams::default()).matched);
        }
    }
}
