//! End-to-end steps: extraction of per-entry records, analysis into a
//! report, and classifier training on pattern-labeled entries.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::analytics::{CorpusReport, EntryRecord, MatchParams, ReportParams, Tally};
use crate::authors::recognize_authors;
use crate::corpus::{self, CorpusFile};
use crate::latex::{parse_document, BibEntry, SourceDocument};
use crate::meta::{extract_author_text_by_pattern, extract_title, extract_year, BibMeta, ExtractionMethod, PatternMatch, YearWindow};
use crate::model::{self, detect_author_text, ClassifierModel, Hyperparams, LabeledInstance, ModelError, TrainOutcome};
use crate::tex::render_plain;

/// Run counters. Every field is a sum over files, so diagnostics merge by
/// addition.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Diagnostics {
    pub documents: u64,
    pub unreadable_documents: u64,
    pub lossy_documents: u64,
    pub bibliographies: u64,
    pub entries: u64,
    pub keys: u64,
    pub unrecognized_commands: u64,
    pub author_text_pattern: u64,
    pub author_text_classifier: u64,
    pub author_text_none: u64,
    pub patterns: BTreeMap<String, u64>,
    pub parse_errors: BTreeMap<String, u64>,
}

impl Diagnostics {
    pub fn merge(&mut self, o: &Diagnostics) {
        self.documents += o.documents;
        self.unreadable_documents += o.unreadable_documents;
        self.lossy_documents += o.lossy_documents;
        self.bibliographies += o.bibliographies;
        self.entries += o.entries;
        self.keys += o.keys;
        self.unrecognized_commands += o.unrecognized_commands;
        self.author_text_pattern += o.author_text_pattern;
        self.author_text_classifier += o.author_text_classifier;
        self.author_text_none += o.author_text_none;
        for (k, v) in &o.patterns {
            *self.patterns.entry(k.clone()).or_default() += v;
        }
        for (k, v) in &o.parse_errors {
            *self.parse_errors.entry(k.clone()).or_default() += v;
        }
    }

    pub fn key_extraction_rate(&self) -> Option<f64> {
        (self.entries > 0).then(|| self.keys as f64 / self.entries as f64)
    }

    /// Parse errors and unreadable files over documents plus entries.
    pub fn error_rate(&self) -> f64 {
        let failures: u64 = self.parse_errors.values().sum::<u64>() + self.unreadable_documents;
        let units = self.documents + self.entries;
        if units == 0 {
            0.0
        } else {
            failures as f64 / units as f64
        }
    }

    /// `entries = keys + missing keys` and the author-text counts add up to
    /// the entry count.
    pub fn reconciles(&self) -> bool {
        let missing = self.parse_errors.get("missing_key").copied().unwrap_or(0);
        self.entries == self.keys + missing
            && self.entries == self.author_text_pattern + self.author_text_classifier + self.author_text_none
    }

    fn bump_error(&mut self, category: &str) {
        *self.parse_errors.entry(category.to_string()).or_default() += 1;
    }
}

/// Serialized diagnostics, with the derived rates spelled out.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsSummary {
    #[serde(flatten)]
    pub counts: Diagnostics,
    pub key_extraction_rate: Option<f64>,
    pub error_rate: f64,
}

impl From<&Diagnostics> for DiagnosticsSummary {
    fn from(d: &Diagnostics) -> Self {
        Self { counts: d.clone(), key_extraction_rate: d.key_extraction_rate(), error_rate: d.error_rate() }
    }
}

/// Year, author text, authors and title of one entry. Author text comes
/// from the patterns, or from the classifier when none fires and a model is
/// given.
pub fn extract_meta(entry: &BibEntry, window: &YearWindow, classifier: Option<&ClassifierModel>) -> BibMeta {
    let body = entry.body();
    let year = extract_year(body, &entry.citation_key, window).map(|(y, _)| y);
    let (author_text, method, pattern, title) = match extract_author_text_by_pattern(body) {
        Some(hit) => {
            let title = extract_title(&body[hit.span.end..]);
            (Some(hit.author_text), Some(ExtractionMethod::Pattern), Some(hit.pattern), title)
        }
        None => match classifier.and_then(|m| {
            let plain = render_plain(body);
            detect_author_text(m, &plain).map(|(text, span)| (text, extract_title(&plain[span.end..])))
        }) {
            Some((text, title)) => (Some(text), Some(ExtractionMethod::Classifier), None, title),
            None => (None, None, None, extract_title(body)),
        },
    };
    let (authors, truncated) = author_text
        .as_deref()
        .and_then(|t| recognize_authors(t).ok())
        .unwrap_or_default();
    BibMeta {
        citation_key: entry.citation_key.clone(),
        author_text,
        authors,
        authors_truncated: truncated,
        year,
        title,
        extraction_method: method,
        pattern,
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct FileOutput {
    pub records: Vec<EntryRecord>,
    pub diagnostics: Diagnostics,
}

pub fn extract_document(
    doc: &SourceDocument,
    file: &CorpusFile,
    window: &YearWindow,
    classifier: Option<&ClassifierModel>,
) -> FileOutput {
    let mut d = Diagnostics { documents: 1, lossy_documents: u64::from(doc.lossy), ..Default::default() };
    let parsed = parse_document(doc);
    d.bibliographies = parsed.bibliographies as u64;
    d.entries = parsed.entry_count() as u64;
    d.keys = parsed.entries.len() as u64;
    d.unrecognized_commands = parsed.unrecognized_commands as u64;
    d.author_text_none = parsed.keyless.len() as u64;
    for e in &parsed.errors {
        d.bump_error(e.category());
    }
    let records = parsed
        .entries
        .iter()
        .map(|entry| {
            let meta = extract_meta(entry, window, classifier);
            match meta.extraction_method {
                Some(ExtractionMethod::Pattern) => d.author_text_pattern += 1,
                Some(ExtractionMethod::Classifier) => d.author_text_classifier += 1,
                None => d.author_text_none += 1,
            }
            if let Some(p) = meta.pattern {
                *d.patterns.entry(p.id().to_string()).or_default() += 1;
            }
            EntryRecord {
                paper_id: file.paper_id.clone(),
                source: file.relative.clone(),
                bibliography: entry.bibliography,
                ordinal: entry.ordinal,
                meta,
            }
        })
        .collect();
    FileOutput { records, diagnostics: d }
}

/// Read and extract one file; an unreadable file only bumps a counter.
pub fn extract_file(file: &CorpusFile, window: &YearWindow, classifier: Option<&ClassifierModel>) -> FileOutput {
    match corpus::load(file) {
        Ok(doc) => extract_document(&doc, file, window, classifier),
        Err(e) => {
            log::warn!("{e}");
            FileOutput {
                records: Vec::new(),
                diagnostics: Diagnostics { documents: 1, unreadable_documents: 1, ..Default::default() },
            }
        }
    }
}

/// Concatenate per-file outputs in the given order.
pub fn combine(outputs: impl IntoIterator<Item = FileOutput>) -> FileOutput {
    let mut all = FileOutput::default();
    for o in outputs {
        all.records.extend(o.records);
        all.diagnostics.merge(&o.diagnostics);
    }
    all
}

pub fn run_extract(files: &[CorpusFile], window: &YearWindow, classifier: Option<&ClassifierModel>) -> FileOutput {
    combine(files.iter().map(|f| extract_file(f, window, classifier)))
}

/// Records as newline-delimited JSON.
pub fn records_to_ndjson(records: &[EntryRecord]) -> String {
    let mut out = String::new();
    for r in records {
        out.push_str(&serde_json::to_string(r).expect("record serializes"));
        out.push('\n');
    }
    out
}

pub fn records_from_ndjson(text: &str) -> Result<Vec<EntryRecord>, serde_json::Error> {
    text.lines().filter(|l| !l.trim().is_empty()).map(serde_json::from_str).collect()
}

/// Per-paper tallies merged into one, then rendered.
pub fn run_analyze(records: &[EntryRecord], match_params: &MatchParams, report_params: &ReportParams) -> CorpusReport {
    let mut by_paper: BTreeMap<&str, Vec<&EntryRecord>> = BTreeMap::new();
    for r in records {
        by_paper.entry(r.paper_id.as_str()).or_default().push(r);
    }
    let tally = by_paper
        .into_values()
        .map(|rs| Tally::from_records(rs, match_params))
        .fold(Tally::default(), Tally::merged);
    CorpusReport::from_tally(&tally, report_params)
}

/// Entries whose author text a pattern found, with the hit.
pub fn pattern_labeled_entries(files: &[CorpusFile]) -> Vec<(BibEntry, PatternMatch)> {
    let mut out = Vec::new();
    for f in files {
        let Ok(doc) = corpus::load(f) else { continue };
        for entry in parse_document(&doc).entries {
            if let Some(hit) = extract_author_text_by_pattern(entry.body()) {
                out.push((entry, hit));
            }
        }
    }
    out
}

pub fn training_instances(files: &[CorpusFile]) -> Vec<LabeledInstance> {
    model::build_labeled_instances(&pattern_labeled_entries(files))
}

pub fn run_train(files: &[CorpusFile], hp: &Hyperparams) -> Result<TrainOutcome, ModelError> {
    model::train(&training_instances(files), hp)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::latex::DocKind;

    fn file() -> CorpusFile {
        CorpusFile { path: "p/main.tex".into(), relative: "p/main.tex".into(), paper_id: "p".into(), kind: DocKind::Tex }
    }

    const DOC: &str = r"\begin{thebibliography}{9}
\bibitem{CMY05} G.~Cormode, S.~Muthukrishnan, and K.~Yan.
\newblock Space efficient mining.
\newblock In {\em PODS}, 2005.
\bibitem{} Missing Key. Title. 2001.
\bibitem{knuth84} Knuth, D.E. 1984. \newblock Literate programming.
\end{thebibliography}";

    #[test]
    fn extraction_and_reconciliation() {
        let doc = SourceDocument::new("p/main.tex", DOC, DocKind::Tex);
        let out = extract_document(&doc, &file(), &YearWindow { min: 1800, max: 2027 }, None);
        let d = &out.diagnostics;
        assert_eq!(d.entries, 3);
        assert_eq!(d.keys, 2);
        assert!(d.reconciles());
        let cmy = &out.records[0].meta;
        assert_eq!(cmy.year, Some(2005));
        let lasts: Vec<&str> = cmy.authors.iter().map(|a| a.last.as_str()).collect();
        assert_eq!(lasts, ["Cormode", "Muthukrishnan", "Yan"]);
        assert_eq!(cmy.title.as_deref(), Some("Space efficient mining"));
    }

    #[test]
    fn ndjson_roundtrip() {
        let doc = SourceDocument::new("p/main.tex", DOC, DocKind::Tex);
        let out = extract_document(&doc, &file(), &YearWindow { min: 1800, max: 2027 }, None);
        let text = records_to_ndjson(&out.records);
        assert_eq!(records_from_ndjson(&text).unwrap(), out.records);
    }

    #[test]
    fn malformed_environment_flagged() {
        let doc = SourceDocument::new("p/main.tex", "\\begin{thebibliography}{9}\n\\bibitem{a} A. B. T. 2000.", DocKind::Tex);
        let out = extract_document(&doc, &file(), &YearWindow { min: 1800, max: 2027 }, None);
        assert!(out.records.is_empty());
        assert_eq!(out.diagnostics.parse_errors.get("unbalanced_environment"), Some(&1));
    }

    #[test]
    fn empty_corpus() {
        let out = run_extract(&[], &YearWindow { min: 1800, max: 2027 }, None);
        assert!(out.records.is_empty());
        assert_eq!(out.diagnostics, Diagnostics::default());
        let r = run_analyze(&[], &MatchParams::default(), &ReportParams::default());
        assert_eq!(r.summary.keyed_entries, 0);
    }
}
