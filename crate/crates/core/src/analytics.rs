//! Corpus-level statistics over extracted entries.
//!
//! Every entry is folded into a [`Tally`] of plain counts. Tallies merge by
//! addition, so per-file tallies can be computed in parallel and combined in
//! any order; the [`CorpusReport`] is derived from the final tally.
//!
//! Match-based tables consider *analyzable* entries: those with a key and at
//! least one recognized author. Key-based tables (n-grams, DBLP) consider
//! every entry with a key.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::authors::{match_form, AuthorName};
use crate::matching::{is_acronym, score_metrics, AcronymParams, MetricConfig};
use crate::meta::BibMeta;
use crate::tex::fold_accents;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum AnalyticsError {
    #[error("paper {paper_id} has no analyzable citations")]
    NoCitations { paper_id: String },
    #[error("term {term:?} occurs in no title or author name")]
    TermUnseen { term: String },
}

/// One extracted entry together with where it came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntryRecord {
    pub paper_id: String,
    pub source: String,
    pub bibliography: usize,
    pub ordinal: usize,
    #[serde(flatten)]
    pub meta: BibMeta,
}

/// A count pair with its quotient; `value` is absent when `den` is zero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Ratio {
    pub num: u64,
    pub den: u64,
    pub value: Option<f64>,
}

impl Ratio {
    pub fn new(num: u64, den: u64) -> Self {
        Self { num, den, value: (den > 0).then(|| num as f64 / den as f64) }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DblpMode {
    /// Key starts with `DBLP:` (any case).
    #[default]
    Prefix,
    /// Key contains `dblp` anywhere (any case).
    Substring,
}

pub fn is_dblp_key(key: &str, mode: DblpMode) -> bool {
    let lower = key.to_lowercase();
    match mode {
        DblpMode::Prefix => lower.starts_with("dblp:"),
        DblpMode::Substring => lower.contains("dblp"),
    }
}

/// Parameters that decide per-entry verdicts.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct MatchParams {
    pub metric: MetricConfig,
    pub acronym: AcronymParams,
    pub dblp_mode: DblpMode,
}

/// Non-strict alphabetical order of accent-folded, case-folded last names.
pub fn is_alphabetical(authors: &[AuthorName]) -> bool {
    let forms: Vec<String> = authors.iter().map(AuthorName::match_form).collect();
    forms.windows(2).all(|w| w[0] <= w[1])
}

/// Per-entry verdicts.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct EntryVerdicts {
    /// Key contains author i's last name (M1), by position.
    pub exact: Vec<bool>,
    /// Author i's M4 score reaches the metric threshold, by position.
    pub asymmetric: Vec<bool>,
    pub acronym: bool,
    pub alphabetical: bool,
}

pub fn entry_verdicts(key: &str, authors: &[AuthorName], params: &MatchParams) -> EntryVerdicts {
    let key_form = match_form(key);
    let (exact, asymmetric) = authors
        .iter()
        .map(|a| match score_metrics(&a.match_form(), &key_form, &params.metric) {
            Ok(s) => (s.m1, s.m4.matched),
            Err(_) => (false, false),
        })
        .unzip();
    let names: Vec<String> = authors.iter().map(AuthorName::acronym_form).collect();
    EntryVerdicts {
        exact,
        asymmetric,
        acronym: is_acronym(&fold_accents(key), &names, &params.acronym).matched,
        alphabetical: is_alphabetical(authors),
    }
}

// ---------------------------------------------------------------------------
// Tally
// ---------------------------------------------------------------------------

/// Entries with exactly `j` authors and, per position, how many matched.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ColumnCounts {
    pub entries: u64,
    pub matched: Vec<u64>,
}

/// `[alphabetical][matched]` cell counts.
pub type Cells = [[u64; 2]; 2];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct YearCounts {
    pub citations: u64,
    pub acronym: u64,
    pub first_exact: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct PaperCounts {
    pub keys: u64,
    pub analyzable: u64,
    pub first_exact: u64,
    pub acronym: u64,
    pub dblp: u64,
    /// Latest entry year, standing in for the citing paper's year.
    pub year: Option<i32>,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Tally {
    pub keyed: u64,
    pub analyzable: u64,
    pub multi_author: u64,
    pub first_exact: u64,
    pub first_asymmetric: u64,
    pub acronym: u64,
    pub acronym_multi: u64,
    pub cond_exact: BTreeMap<usize, ColumnCounts>,
    pub cond_asymmetric: BTreeMap<usize, ColumnCounts>,
    pub ordering_acronym: Cells,
    pub ordering_first: Cells,
    pub single_author: u64,
    pub unresolved: u64,
    pub by_year: BTreeMap<i32, YearCounts>,
    pub undated: u64,
    pub papers: BTreeMap<String, PaperCounts>,
    /// Lowercased keys with multiplicity.
    pub keys: BTreeMap<String, u64>,
    /// Normalized titles with multiplicity.
    pub titles: BTreeMap<String, u64>,
    /// Normalized author last names with multiplicity.
    pub author_names: BTreeMap<String, u64>,
}

fn bump<K: Ord>(map: &mut BTreeMap<K, u64>, key: K, by: u64) {
    *map.entry(key).or_default() += by;
}

fn add_column(map: &mut BTreeMap<usize, ColumnCounts>, j: usize, hits: &[bool]) {
    let col = map.entry(j).or_insert_with(|| ColumnCounts { entries: 0, matched: vec![0; j] });
    col.entries += 1;
    for (slot, hit) in col.matched.iter_mut().zip(hits) {
        *slot += u64::from(*hit);
    }
}

fn merge_columns(into: &mut BTreeMap<usize, ColumnCounts>, from: BTreeMap<usize, ColumnCounts>) {
    for (j, col) in from {
        let dst = into.entry(j).or_insert_with(|| ColumnCounts { entries: 0, matched: vec![0; j] });
        dst.entries += col.entries;
        for (a, b) in dst.matched.iter_mut().zip(col.matched) {
            *a += b;
        }
    }
}

fn merge_cells(into: &mut Cells, from: Cells) {
    for a in 0..2 {
        for m in 0..2 {
            into[a][m] += from[a][m];
        }
    }
}

pub fn normalize_title(title: &str) -> String {
    fold_accents(title).to_lowercase()
}

impl Tally {
    pub fn add(&mut self, record: &EntryRecord, params: &MatchParams) {
        let meta = &record.meta;
        let key = meta.citation_key.as_str();
        self.keyed += 1;
        bump(&mut self.keys, key.to_lowercase(), 1);
        if let Some(title) = &meta.title {
            bump(&mut self.titles, normalize_title(title), 1);
        }
        for a in &meta.authors {
            bump(&mut self.author_names, a.match_form(), 1);
        }
        let paper = self.papers.entry(record.paper_id.clone()).or_default();
        paper.keys += 1;
        paper.dblp += u64::from(is_dblp_key(key, params.dblp_mode));
        if let Some(y) = meta.year {
            paper.year = paper.year.max(Some(y));
        }

        let j = meta.authors.len();
        match j {
            0 => self.unresolved += 1,
            1 => self.single_author += 1,
            _ => {}
        }
        if j == 0 {
            return;
        }
        let v = entry_verdicts(key, &meta.authors, params);
        let first = v.exact[0];
        self.analyzable += 1;
        self.first_exact += u64::from(first);
        self.first_asymmetric += u64::from(v.asymmetric[0]);
        self.acronym += u64::from(v.acronym);
        add_column(&mut self.cond_exact, j, &v.exact);
        add_column(&mut self.cond_asymmetric, j, &v.asymmetric);
        if j >= 2 {
            self.multi_author += 1;
            self.acronym_multi += u64::from(v.acronym);
            let a = usize::from(v.alphabetical);
            self.ordering_acronym[a][usize::from(v.acronym)] += 1;
            self.ordering_first[a][usize::from(first)] += 1;
        }
        match meta.year {
            Some(y) => {
                let yc = self.by_year.entry(y).or_default();
                yc.citations += 1;
                yc.acronym += u64::from(v.acronym);
                yc.first_exact += u64::from(first);
            }
            None => self.undated += 1,
        }
        paper.analyzable += 1;
        paper.first_exact += u64::from(first);
        paper.acronym += u64::from(v.acronym);
    }

    pub fn from_records<'a>(records: impl IntoIterator<Item = &'a EntryRecord>, params: &MatchParams) -> Self {
        let mut t = Tally::default();
        for r in records {
            t.add(r, params);
        }
        t
    }

    /// Count-wise union. Associative and commutative.
    pub fn merge(&mut self, other: Tally) {
        self.keyed += other.keyed;
        self.analyzable += other.analyzable;
        self.multi_author += other.multi_author;
        self.first_exact += other.first_exact;
        self.first_asymmetric += other.first_asymmetric;
        self.acronym += other.acronym;
        self.acronym_multi += other.acronym_multi;
        merge_columns(&mut self.cond_exact, other.cond_exact);
        merge_columns(&mut self.cond_asymmetric, other.cond_asymmetric);
        merge_cells(&mut self.ordering_acronym, other.ordering_acronym);
        merge_cells(&mut self.ordering_first, other.ordering_first);
        self.single_author += other.single_author;
        self.unresolved += other.unresolved;
        for (y, c) in other.by_year {
            let d = self.by_year.entry(y).or_default();
            d.citations += c.citations;
            d.acronym += c.acronym;
            d.first_exact += c.first_exact;
        }
        self.undated += other.undated;
        for (id, p) in other.papers {
            let d = self.papers.entry(id).or_default();
            d.keys += p.keys;
            d.analyzable += p.analyzable;
            d.first_exact += p.first_exact;
            d.acronym += p.acronym;
            d.dblp += p.dblp;
            d.year = d.year.max(p.year);
        }
        for (k, n) in other.keys {
            bump(&mut self.keys, k, n);
        }
        for (k, n) in other.titles {
            bump(&mut self.titles, k, n);
        }
        for (k, n) in other.author_names {
            bump(&mut self.author_names, k, n);
        }
    }

    pub fn merged(mut self, other: Tally) -> Self {
        self.merge(other);
        self
    }
}

// ---------------------------------------------------------------------------
// Report
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq)]
pub struct ReportParams {
    /// Bucket edges; consecutive pairs form half-open buckets.
    pub decade_boundaries: Vec<i32>,
    pub top_k: usize,
    pub ngram_min: usize,
    pub ngram_max: usize,
    pub strict_pmr: f64,
    pub loose_pmr: f64,
    pub dblp_mode: DblpMode,
    pub dblp_era_start: i32,
    pub affinity_margin: f64,
    pub type_lexicon: Vec<String>,
}

pub const DEFAULT_TYPE_LEXICON: &str = include_str!("../data/type_lexicon.txt");

/// Lexicon file format: one word per line, `#` comments, blank lines ignored.
pub fn parse_lexicon(text: &str) -> Vec<String> {
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(str::to_lowercase)
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect()
}

impl Default for ReportParams {
    fn default() -> Self {
        Self {
            decade_boundaries: vec![1990, 2000, 2010],
            top_k: 20,
            ngram_min: 2,
            ngram_max: 10,
            strict_pmr: 1.0,
            loose_pmr: 0.9,
            dblp_mode: DblpMode::Prefix,
            dblp_era_start: 2000,
            affinity_margin: 0.2,
            type_lexicon: parse_lexicon(DEFAULT_TYPE_LEXICON),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub papers: u64,
    pub keyed_entries: u64,
    pub analyzable_entries: u64,
    pub multi_author_entries: u64,
    pub first_author_exact: Ratio,
    pub first_author_asymmetric: Ratio,
    pub acronym: Ratio,
    pub acronym_multi_author: Ratio,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CondProbColumn {
    pub authors: usize,
    pub entries: u64,
    /// `positions[i-1]` is Pr[author i matched | `authors` authors].
    pub positions: Vec<Ratio>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CondProbTable {
    pub columns: Vec<CondProbColumn>,
}

impl CondProbTable {
    pub fn get(&self, position: usize, authors: usize) -> Option<Ratio> {
        let col = self.columns.iter().find(|c| c.authors == authors)?;
        col.positions.get(position.checked_sub(1)?).copied()
    }
}

pub fn cond_prob_table(columns: &BTreeMap<usize, ColumnCounts>) -> CondProbTable {
    CondProbTable {
        columns: columns
            .iter()
            .map(|(&j, c)| CondProbColumn {
                authors: j,
                entries: c.entries,
                positions: c.matched.iter().map(|&m| Ratio::new(m, c.entries)).collect(),
            })
            .collect(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CondProbReport {
    pub exact: CondProbTable,
    pub asymmetric: CondProbTable,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrderingTable {
    pub alphabetical_matched: Ratio,
    pub alphabetical_unmatched: Ratio,
    pub unordered_matched: Ratio,
    pub unordered_unmatched: Ratio,
}

fn ordering_table(cells: &Cells, total: u64) -> OrderingTable {
    OrderingTable {
        alphabetical_matched: Ratio::new(cells[1][1], total),
        alphabetical_unmatched: Ratio::new(cells[1][0], total),
        unordered_matched: Ratio::new(cells[0][1], total),
        unordered_unmatched: Ratio::new(cells[0][0], total),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrderingReport {
    /// Entries with at least two authors.
    pub considered: u64,
    pub excluded_single_author: u64,
    pub excluded_unresolved: u64,
    pub acronym: OrderingTable,
    pub first_author: OrderingTable,
}

pub fn ordering_breakdown(tally: &Tally) -> OrderingReport {
    let total = tally.multi_author;
    OrderingReport {
        considered: total,
        excluded_single_author: tally.single_author,
        excluded_unresolved: tally.unresolved,
        acronym: ordering_table(&tally.ordering_acronym, total),
        first_author: ordering_table(&tally.ordering_first, total),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrendBucket {
    pub start: i32,
    pub end: i32,
    pub citations: u64,
    pub acronym: Ratio,
    pub first_author: Ratio,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrendReport {
    pub buckets: Vec<TrendBucket>,
    /// Dated entries outside every bucket.
    pub unbucketed: u64,
    pub undated: u64,
}

pub fn trend_buckets(by_year: &BTreeMap<i32, YearCounts>, undated: u64, boundaries: &[i32]) -> TrendReport {
    let buckets: Vec<TrendBucket> = boundaries
        .windows(2)
        .map(|w| {
            let mut c = YearCounts::default();
            for (_, yc) in by_year.range(w[0]..w[1]) {
                c.citations += yc.citations;
                c.acronym += yc.acronym;
                c.first_exact += yc.first_exact;
            }
            TrendBucket {
                start: w[0],
                end: w[1],
                citations: c.citations,
                acronym: Ratio::new(c.acronym, c.citations),
                first_author: Ratio::new(c.first_exact, c.citations),
            }
        })
        .collect();
    let total: u64 = by_year.values().map(|c| c.citations).sum();
    let bucketed: u64 = buckets.iter().map(|b| b.citations).sum();
    TrendReport { buckets, unbucketed: total - bucketed, undated }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KeyPattern {
    FirstAuthorExact,
    AuthorAcronym,
}

impl KeyPattern {
    pub const ALL: [KeyPattern; 2] = [KeyPattern::FirstAuthorExact, KeyPattern::AuthorAcronym];

    pub fn id(self) -> &'static str {
        match self {
            KeyPattern::FirstAuthorExact => "first_author_exact",
            KeyPattern::AuthorAcronym => "author_acronym",
        }
    }
}

/// Pattern matching ratio of one paper.
pub fn pmr(paper_id: &str, matched: u64, total: u64) -> Result<f64, AnalyticsError> {
    if total == 0 {
        return Err(AnalyticsError::NoCitations { paper_id: paper_id.to_string() });
    }
    Ok(matched as f64 / total as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PmrRecord {
    pub paper_id: String,
    pub pattern: KeyPattern,
    pub pmr: Ratio,
    pub citations: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PatternConsistency {
    pub pattern: KeyPattern,
    pub papers: u64,
    pub strict: Ratio,
    pub loose: Ratio,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConsistencyReport {
    pub strict_threshold: f64,
    pub loose_threshold: f64,
    pub patterns: Vec<PatternConsistency>,
    /// Papers without analyzable citations, left out of every fraction.
    pub excluded_papers: u64,
    pub per_paper: Vec<PmrRecord>,
}

pub fn consistency_report(papers: &BTreeMap<String, PaperCounts>, strict: f64, loose: f64) -> ConsistencyReport {
    let mut per_paper = Vec::new();
    let mut patterns = Vec::new();
    let mut excluded = 0;
    for pattern in KeyPattern::ALL {
        let (mut n, mut s, mut l) = (0, 0, 0);
        for (id, p) in papers {
            let matched = match pattern {
                KeyPattern::FirstAuthorExact => p.first_exact,
                KeyPattern::AuthorAcronym => p.acronym,
            };
            let Ok(value) = pmr(id, matched, p.analyzable) else {
                continue;
            };
            n += 1;
            s += u64::from(value >= strict);
            l += u64::from(value >= loose);
            per_paper.push(PmrRecord {
                paper_id: id.clone(),
                pattern,
                pmr: Ratio::new(matched, p.analyzable),
                citations: p.analyzable,
            });
        }
        excluded = papers.len() as u64 - n;
        patterns.push(PatternConsistency { pattern, papers: n, strict: Ratio::new(s, n), loose: Ratio::new(l, n) });
    }
    per_paper.sort_by(|a, b| a.paper_id.cmp(&b.paper_id).then(a.pattern.cmp(&b.pattern)));
    ConsistencyReport { strict_threshold: strict, loose_threshold: loose, patterns, excluded_papers: excluded, per_paper }
}

/// Overlapping occurrences of every character n-gram, weighted by key
/// multiplicity.
pub fn ngram_frequencies(keys: &BTreeMap<String, u64>, n: usize) -> BTreeMap<String, u64> {
    let mut out = BTreeMap::new();
    for (key, &mult) in keys {
        let chars: Vec<char> = key.chars().collect();
        if n == 0 || chars.len() < n {
            continue;
        }
        for w in chars.windows(n) {
            bump(&mut out, w.iter().collect::<String>(), mult);
        }
    }
    out
}

/// Highest counts first, ties by term.
pub fn top_k(freq: &BTreeMap<String, u64>, k: usize) -> Vec<(String, u64)> {
    let mut v: Vec<(String, u64)> = freq.iter().map(|(t, c)| (t.clone(), *c)).collect();
    v.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    v.truncate(k);
    v
}

pub fn count_occurrences(haystack: &str, needle: &str) -> u64 {
    if needle.is_empty() {
        return 0;
    }
    let mut n = 0;
    let mut from = 0;
    while let Some(i) = haystack[from..].find(needle) {
        n += 1;
        from += i + needle.chars().next().map_or(1, char::len_utf8);
    }
    n
}

fn weighted_occurrences(texts: &BTreeMap<String, u64>, term: &str) -> u64 {
    texts.iter().map(|(t, m)| count_occurrences(t, term) * m).sum()
}

/// Occurrence counts of `term` in titles and in author last names.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Affinity {
    pub in_titles: u64,
    pub in_author_names: u64,
}

impl Affinity {
    pub fn total(&self) -> u64 {
        self.in_titles + self.in_author_names
    }

    pub fn title(&self) -> f64 {
        self.in_titles as f64 / self.total() as f64
    }

    pub fn author(&self) -> f64 {
        self.in_author_names as f64 / self.total() as f64
    }
}

pub fn affinity(term: &str, titles: &BTreeMap<String, u64>, author_names: &BTreeMap<String, u64>) -> Result<Affinity, AnalyticsError> {
    let a = Affinity {
        in_titles: weighted_occurrences(titles, term),
        in_author_names: weighted_occurrences(author_names, term),
    };
    if a.total() == 0 {
        return Err(AnalyticsError::TermUnseen { term: term.to_string() });
    }
    Ok(a)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Cluster {
    TitleWords,
    AuthorNames,
    TypeAndSources,
    YearAndPhrase,
    Unassigned,
}

/// Cluster rules, first hit wins: digit-only terms and terms containing
/// "etal" are year/phrase; terms containing a lexicon word are type/source;
/// otherwise the larger affinity wins by at least `margin`.
pub fn assign_cluster(term: &str, affinity: Option<&Affinity>, lexicon: &[String], margin: f64) -> Cluster {
    if term.chars().all(|c| c.is_ascii_digit()) || term.contains("etal") {
        return Cluster::YearAndPhrase;
    }
    if lexicon.iter().any(|w| term.contains(w.as_str())) {
        return Cluster::TypeAndSources;
    }
    let Some(a) = affinity else {
        return Cluster::Unassigned;
    };
    let (t, u) = (a.title(), a.author());
    if t - u >= margin {
        Cluster::TitleWords
    } else if u - t >= margin {
        Cluster::AuthorNames
    } else {
        Cluster::Unassigned
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NGramCluster {
    pub term: String,
    pub count: u64,
    pub cluster: Cluster,
    pub in_titles: u64,
    pub in_author_names: u64,
    pub title_affinity: Option<f64>,
    pub author_affinity: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NGramLevel {
    pub n: usize,
    pub distinct: u64,
    pub total: u64,
    pub top: Vec<NGramCluster>,
}

pub fn ngram_report(tally: &Tally, params: &ReportParams) -> Vec<NGramLevel> {
    (params.ngram_min..=params.ngram_max)
        .map(|n| {
            let freq = ngram_frequencies(&tally.keys, n);
            let top = top_k(&freq, params.top_k)
                .into_iter()
                .map(|(term, count)| {
                    let aff = affinity(&term, &tally.titles, &tally.author_names).ok();
                    NGramCluster {
                        cluster: assign_cluster(&term, aff.as_ref(), &params.type_lexicon, params.affinity_margin),
                        in_titles: aff.map_or(0, |a| a.in_titles),
                        in_author_names: aff.map_or(0, |a| a.in_author_names),
                        title_affinity: aff.map(|a| a.title()),
                        author_affinity: aff.map(|a| a.author()),
                        term,
                        count,
                    }
                })
                .collect();
            NGramLevel { n, distinct: freq.len() as u64, total: freq.values().sum(), top }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DblpEra {
    pub papers: u64,
    pub keys: u64,
    pub copied: u64,
    /// Copied keys of this era over all copied keys.
    pub share_of_copied: Ratio,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DblpReport {
    pub mode: DblpMode,
    pub copied_keys: Ratio,
    pub papers_with_copies: u64,
    /// Papers where more than half of the keys are copied, over all papers.
    pub papers_majority_copied: Ratio,
    pub era_start: i32,
    pub before_era: DblpEra,
    pub from_era: DblpEra,
    pub undated: DblpEra,
}

pub fn dblp_stats(papers: &BTreeMap<String, PaperCounts>, mode: DblpMode, era_start: i32) -> DblpReport {
    let keys: u64 = papers.values().map(|p| p.keys).sum();
    let copied: u64 = papers.values().map(|p| p.dblp).sum();
    let era = |pred: &dyn Fn(Option<i32>) -> bool| {
        let sel: Vec<&PaperCounts> = papers.values().filter(|p| pred(p.year)).collect();
        let c = sel.iter().map(|p| p.dblp).sum();
        DblpEra {
            papers: sel.len() as u64,
            keys: sel.iter().map(|p| p.keys).sum(),
            copied: c,
            share_of_copied: Ratio::new(c, copied),
        }
    };
    DblpReport {
        mode,
        copied_keys: Ratio::new(copied, keys),
        papers_with_copies: papers.values().filter(|p| p.dblp > 0).count() as u64,
        papers_majority_copied: Ratio::new(
            papers.values().filter(|p| 2 * p.dblp > p.keys).count() as u64,
            papers.len() as u64,
        ),
        era_start,
        before_era: era(&|y| y.is_some_and(|y| y < era_start)),
        from_era: era(&|y| y.is_some_and(|y| y >= era_start)),
        undated: era(&|y| y.is_none()),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusReport {
    pub summary: Summary,
    pub cond_prob: CondProbReport,
    pub ordering: OrderingReport,
    pub trend: TrendReport,
    pub consistency: ConsistencyReport,
    pub ngrams: Vec<NGramLevel>,
    pub dblp: DblpReport,
}

impl CorpusReport {
    pub fn from_tally(t: &Tally, params: &ReportParams) -> Self {
        CorpusReport {
            summary: Summary {
                papers: t.papers.len() as u64,
                keyed_entries: t.keyed,
                analyzable_entries: t.analyzable,
                multi_author_entries: t.multi_author,
                first_author_exact: Ratio::new(t.first_exact, t.analyzable),
                first_author_asymmetric: Ratio::new(t.first_asymmetric, t.analyzable),
                acronym: Ratio::new(t.acronym, t.analyzable),
                acronym_multi_author: Ratio::new(t.acronym_multi, t.multi_author),
            },
            cond_prob: CondProbReport {
                exact: cond_prob_table(&t.cond_exact),
                asymmetric: cond_prob_table(&t.cond_asymmetric),
            },
            ordering: ordering_breakdown(t),
            trend: trend_buckets(&t.by_year, t.undated, &params.decade_boundaries),
            consistency: consistency_report(&t.papers, params.strict_pmr, params.loose_pmr),
            ngrams: ngram_report(t, params),
            dblp: dblp_stats(&t.papers, params.dblp_mode, params.dblp_era_start),
        }
    }

    /// Pretty JSON with a trailing newline.
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn name(last: &str, position: usize) -> AuthorName {
        AuthorName { first: String::new(), last: last.to_string(), position }
    }

    fn record(paper: &str, key: &str, lasts: &[&str], year: Option<i32>) -> EntryRecord {
        EntryRecord {
            paper_id: paper.to_string(),
            source: format!("{paper}/main.tex"),
            bibliography: 0,
            ordinal: 0,
            meta: BibMeta {
                citation_key: key.to_string(),
                author_text: None,
                authors: lasts.iter().enumerate().map(|(i, l)| name(l, i + 1)).collect(),
                authors_truncated: false,
                year,
                title: Some("A Study of Things".into()),
                extraction_method: None,
                pattern: None,
            },
        }
    }

    #[test]
    fn alphabetical_examples() {
        assert!(is_alphabetical(&[name("Cormode", 1), name("Muthukrishnan", 2), name("Yan", 3)]));
        assert!(!is_alphabetical(&[name("Yan", 1), name("Cormode", 2)]));
        assert!(is_alphabetical(&[name("Lee", 1), name("Lee", 2)]));
        assert!(is_alphabetical(&[name("Lee", 1)]));
        assert!(is_alphabetical(&[name("\\\"Ozsu", 1), name("Patel", 2)]));
    }

    #[test]
    fn single_matching_entry() {
        let t = Tally::from_records(&[record("p", "smith99", &["Smith"], Some(1999))], &MatchParams::default());
        let r = CorpusReport::from_tally(&t, &ReportParams::default());
        assert_eq!(r.cond_prob.exact.get(1, 1).unwrap().value, Some(1.0));
    }

    #[test]
    fn pmr_examples() {
        assert_eq!(pmr("p", 8, 10).unwrap(), 0.8);
        assert_eq!(pmr("p", 10, 10).unwrap(), 1.0);
        assert_eq!(pmr("p", 0, 10).unwrap(), 0.0);
        assert!(matches!(pmr("p", 0, 0), Err(AnalyticsError::NoCitations { .. })));
    }

    #[test]
    fn consistency_fractions() {
        let mut papers = BTreeMap::new();
        for (i, (m, n)) in [(10, 10), (4, 4), (1, 2), (19, 20)].into_iter().enumerate() {
            papers.insert(
                format!("p{i}"),
                PaperCounts { keys: n, analyzable: n, first_exact: m, acronym: 0, dblp: 0, year: None },
            );
        }
        let r = consistency_report(&papers, 1.0, 0.9);
        let first = &r.patterns[0];
        assert_eq!(first.strict.value, Some(0.5));
        assert_eq!(first.loose.value, Some(0.75));
        let empty = consistency_report(&BTreeMap::new(), 1.0, 0.9);
        assert!(empty.per_paper.is_empty());
        assert_eq!(empty.patterns[0].strict.value, None);
    }

    #[test]
    fn ngram_examples() {
        let keys: BTreeMap<String, u64> = [("ab".to_string(), 2), ("ac".to_string(), 1)].into_iter().collect();
        let f = ngram_frequencies(&keys, 2);
        assert_eq!(f.get("ab"), Some(&2));
        assert_eq!(f.get("ac"), Some(&1));
        assert!(ngram_frequencies(&keys, 3).is_empty());
        let aa: BTreeMap<String, u64> = [("aaa".to_string(), 1)].into_iter().collect();
        assert_eq!(ngram_frequencies(&aa, 2).get("aa"), Some(&2));
    }

    #[test]
    fn affinity_examples() {
        let titles: BTreeMap<String, u64> = [("graph graph".to_string(), 1), ("graphs".to_string(), 1)].into_iter().collect();
        let names: BTreeMap<String, u64> = [("graphton".to_string(), 1)].into_iter().collect();
        let a = affinity("graph", &titles, &names).unwrap();
        assert_eq!((a.title(), a.author()), (0.75, 0.25));
        assert!(matches!(affinity("zzz", &titles, &names), Err(AnalyticsError::TermUnseen { .. })));

        let titles: BTreeMap<String, u64> = [("coverage of sets".to_string(), 1)].into_iter().collect();
        let names: BTreeMap<String, u64> = [("cover".to_string(), 1)].into_iter().collect();
        let a = affinity("over", &titles, &names).unwrap();
        assert_eq!(assign_cluster("over", Some(&a), &[], 0.2), Cluster::Unassigned);
    }

    #[test]
    fn cluster_rules() {
        let lex = parse_lexicon(DEFAULT_TYPE_LEXICON);
        assert_eq!(assign_cluster("2006", None, &lex, 0.2), Cluster::YearAndPhrase);
        assert_eq!(assign_cluster("etal0", None, &lex, 0.2), Cluster::YearAndPhrase);
        assert_eq!(assign_cluster("phdth", None, &lex, 0.2), Cluster::TypeAndSources);
        let a = Affinity { in_titles: 9, in_author_names: 1 };
        assert_eq!(assign_cluster("gra", Some(&a), &lex, 0.2), Cluster::TitleWords);
        let a = Affinity { in_titles: 1, in_author_names: 9 };
        assert_eq!(assign_cluster("orm", Some(&a), &lex, 0.2), Cluster::AuthorNames);
    }

    #[test]
    fn dblp_examples() {
        assert!(is_dblp_key("DBLP:conf/soda/CormodeM05", DblpMode::Prefix));
        assert!(!is_dblp_key("cormode05", DblpMode::Prefix));
        assert!(!is_dblp_key("mydblpstudy", DblpMode::Prefix));
        assert!(is_dblp_key("mydblpstudy", DblpMode::Substring));
        let mut papers = BTreeMap::new();
        papers.insert("a".to_string(), PaperCounts { keys: 200, dblp: 2, year: Some(2005), ..Default::default() });
        papers.insert("b".to_string(), PaperCounts { keys: 200, dblp: 0, year: Some(1995), ..Default::default() });
        let r = dblp_stats(&papers, DblpMode::Prefix, 2000);
        assert_eq!(r.copied_keys.value, Some(0.005));
        assert_eq!(r.from_era.share_of_copied.value, Some(1.0));
    }

    #[test]
    fn trend_half_open() {
        let recs = [record("p", "a", &["Smith"], Some(2000)), record("p", "b", &["Smith"], Some(1995))];
        let t = Tally::from_records(&recs, &MatchParams::default());
        let tr = trend_buckets(&t.by_year, t.undated, &[1990, 2000, 2010]);
        assert_eq!(tr.buckets[0].citations, 1);
        assert_eq!(tr.buckets[1].citations, 1);
        let tr = trend_buckets(&t.by_year, t.undated, &[1990, 2000]);
        assert_eq!(tr.unbucketed, 1);
    }

    #[test]
    fn merge_matches_whole() {
        let recs = vec![
            record("p1", "CMY05", &["Cormode", "Muthukrishnan", "Yan"], Some(2005)),
            record("p1", "smith99", &["Smith", "Jones"], Some(1999)),
            record("p2", "DBLP:x/Lee01", &["Lee"], Some(2001)),
            record("p2", "nokey", &[], None),
        ];
        let params = MatchParams::default();
        let whole = Tally::from_records(&recs, &params);
        let a = Tally::from_records(&recs[..1], &params);
        let b = Tally::from_records(&recs[1..], &params);
        assert_eq!(b.clone().merged(a.clone()), whole);
        assert_eq!(a.merged(b), whole);
    }
}
