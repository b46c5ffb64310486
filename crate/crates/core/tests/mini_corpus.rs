//! Extraction over the bundled mini-corpus reproduces the planted truth.

use std::path::PathBuf;

use citekey_core::pipeline::run_extract;
use citekey_core::{walk_corpus, RunConfig};
use serde::Deserialize;

#[derive(Deserialize)]
struct Truth {
    papers: Vec<TruthPaper>,
}

#[derive(Deserialize)]
struct TruthPaper {
    paper_id: String,
    missing_keys: u64,
    entries: Vec<TruthEntry>,
}

#[derive(Deserialize)]
struct TruthEntry {
    key: String,
    authors: Vec<String>,
    year: Option<i32>,
    title: String,
}

fn fixtures() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures")
}

fn config() -> RunConfig {
    RunConfig::from_toml_with_overrides(None, &["current_year=2025".into()]).unwrap()
}

#[test]
fn extraction_matches_planted_truth() {
    let truth: Truth =
        serde_json::from_str(&std::fs::read_to_string(fixtures().join("truth.json")).unwrap()).unwrap();
    let (files, errors) = walk_corpus(&[fixtures().join("mini_corpus")]);
    assert!(errors.is_empty());
    let out = run_extract(&files, &config().year_window(), None);
    let d = &out.diagnostics;
    assert!(d.reconciles());
    assert_eq!(d.documents, 20);

    let planted: usize = truth.papers.iter().map(|p| p.entries.len()).sum();
    let missing: u64 = truth.papers.iter().map(|p| p.missing_keys).sum();
    assert_eq!(out.records.len(), planted);
    assert_eq!(d.keys as usize, planted);
    assert_eq!(d.parse_errors.get("missing_key").copied().unwrap_or(0), missing);
    assert_eq!(d.parse_errors.values().sum::<u64>(), missing);

    let mut mismatches = Vec::new();
    let expected = truth.papers.iter().flat_map(|p| p.entries.iter().map(move |e| (p.paper_id.as_str(), e)));
    for (rec, (paper, exp)) in out.records.iter().zip(expected) {
        let authors: Vec<String> = rec.meta.authors.iter().map(|a| a.acronym_form()).collect();
        let got = (rec.paper_id.as_str(), rec.meta.citation_key.as_str(), &authors, rec.meta.year, rec.meta.title.as_deref());
        let want = (paper, exp.key.as_str(), &exp.authors, exp.year, Some(exp.title.as_str()));
        if got != want {
            mismatches.push(format!("got {got:?}\n   want {want:?}"));
        }
    }
    assert!(mismatches.is_empty(), "{} mismatches:\n{}", mismatches.len(), mismatches.join("\n"));
}
