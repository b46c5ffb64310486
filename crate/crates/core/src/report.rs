//! Human-readable and CSV renderings of a [`CorpusReport`].

use crate::analytics::{Cluster, CondProbTable, CorpusReport, DblpEra, OrderingTable, Ratio};

fn fmt_ratio(r: &Ratio) -> String {
    match r.value {
        Some(v) => format!("{:.1}% ({}/{})", 100.0 * v, r.num, r.den),
        None => format!("- ({}/{})", r.num, r.den),
    }
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "-".to_string(), |v| format!("{v:.3}"))
}

fn cluster_name(c: Cluster) -> &'static str {
    match c {
        Cluster::TitleWords => "title_words",
        Cluster::AuthorNames => "author_names",
        Cluster::TypeAndSources => "type_and_sources",
        Cluster::YearAndPhrase => "year_and_phrase",
        Cluster::Unassigned => "unassigned",
    }
}

/// Left-aligned first column, right-aligned rest.
fn table(header: &[&str], rows: &[Vec<String>]) -> String {
    let cols = header.len();
    let mut width: Vec<usize> = header.iter().map(|h| h.chars().count()).collect();
    for row in rows {
        for (i, cell) in row.iter().enumerate().take(cols) {
            width[i] = width[i].max(cell.chars().count());
        }
    }
    let line = |cells: Vec<&str>| {
        let mut s = String::new();
        for (i, c) in cells.iter().enumerate() {
            if i > 0 {
                s.push_str("  ");
            }
            if i == 0 {
                s.push_str(&format!("{c:<w$}", w = width[i]));
            } else {
                s.push_str(&format!("{c:>w$}", w = width[i]));
            }
        }
        s.trim_end().to_string() + "\n"
    };
    let mut out = line(header.to_vec());
    out.push_str(&line(width.iter().map(|w| "-".repeat(*w)).collect::<Vec<_>>().iter().map(String::as_str).collect()));
    for row in rows {
        out.push_str(&line(row.iter().map(String::as_str).collect()));
    }
    out
}

fn cond_rows(t: &CondProbTable) -> (Vec<String>, Vec<Vec<String>>) {
    let max = t.columns.iter().map(|c| c.authors).max().unwrap_or(0);
    let mut header = vec!["authors".to_string(), "entries".to_string()];
    header.extend((1..=max).map(|i| format!("pos{i}")));
    let rows = t
        .columns
        .iter()
        .map(|c| {
            let mut row = vec![c.authors.to_string(), c.entries.to_string()];
            row.extend((0..max).map(|i| c.positions.get(i).map_or_else(String::new, |r| fmt_opt(r.value))));
            row
        })
        .collect();
    (header, rows)
}

fn ordering_rows(name: &str, t: &OrderingTable) -> Vec<Vec<String>> {
    vec![
        vec![format!("alphabetical, {name}"), fmt_ratio(&t.alphabetical_matched)],
        vec![format!("alphabetical, no {name}"), fmt_ratio(&t.alphabetical_unmatched)],
        vec![format!("not alphabetical, {name}"), fmt_ratio(&t.unordered_matched)],
        vec![format!("not alphabetical, no {name}"), fmt_ratio(&t.unordered_unmatched)],
    ]
}

pub fn render_text(r: &CorpusReport) -> String {
    let mut out = String::new();
    let s = &r.summary;
    out.push_str("SUMMARY\n");
    out.push_str(&table(
        &["measure", "value"],
        &[
            vec!["papers".into(), s.papers.to_string()],
            vec!["entries with key".into(), s.keyed_entries.to_string()],
            vec!["analyzable entries".into(), s.analyzable_entries.to_string()],
            vec!["multi-author entries".into(), s.multi_author_entries.to_string()],
            vec!["first author in key (exact)".into(), fmt_ratio(&s.first_author_exact)],
            vec!["first author in key (asymmetric)".into(), fmt_ratio(&s.first_author_asymmetric)],
            vec!["acronym keys".into(), fmt_ratio(&s.acronym)],
            vec!["acronym keys, 2+ authors".into(), fmt_ratio(&s.acronym_multi_author)],
        ],
    ));
    for (name, t) in [("exact", &r.cond_prob.exact), ("asymmetric", &r.cond_prob.asymmetric)] {
        out.push_str(&format!("\nPr[author i matched | j authors] ({name})\n"));
        let (h, rows) = cond_rows(t);
        out.push_str(&table(&h.iter().map(String::as_str).collect::<Vec<_>>(), &rows));
    }
    let o = &r.ordering;
    out.push_str(&format!(
        "\nAUTHOR ORDERING ({} entries with 2+ authors; excluded: {} single-author, {} unresolved)\n",
        o.considered, o.excluded_single_author, o.excluded_unresolved
    ));
    let mut rows = ordering_rows("acronym", &o.acronym);
    rows.extend(ordering_rows("first author", &o.first_author));
    out.push_str(&table(&["cell", "share"], &rows));

    out.push_str(&format!("\nTREND (unbucketed {}, undated {})\n", r.trend.unbucketed, r.trend.undated));
    let rows: Vec<Vec<String>> = r
        .trend
        .buckets
        .iter()
        .map(|b| {
            vec![format!("[{}, {})", b.start, b.end), b.citations.to_string(), fmt_ratio(&b.acronym), fmt_ratio(&b.first_author)]
        })
        .collect();
    out.push_str(&table(&["period", "citations", "acronym", "first author"], &rows));

    let c = &r.consistency;
    out.push_str(&format!("\nCONSISTENCY (excluded papers {})\n", c.excluded_papers));
    let strict = format!("pmr >= {}", c.strict_threshold);
    let loose = format!("pmr >= {}", c.loose_threshold);
    let rows: Vec<Vec<String>> = c
        .patterns
        .iter()
        .map(|p| vec![p.pattern.id().to_string(), p.papers.to_string(), fmt_ratio(&p.strict), fmt_ratio(&p.loose)])
        .collect();
    out.push_str(&table(&["pattern", "papers", &strict, &loose], &rows));

    out.push_str("\nKEY N-GRAMS\n");
    let rows: Vec<Vec<String>> = r
        .ngrams
        .iter()
        .flat_map(|lvl| {
            lvl.top.iter().enumerate().map(move |(rank, g)| {
                vec![
                    lvl.n.to_string(),
                    (rank + 1).to_string(),
                    g.term.clone(),
                    g.count.to_string(),
                    cluster_name(g.cluster).to_string(),
                    fmt_opt(g.title_affinity),
                    fmt_opt(g.author_affinity),
                ]
            })
        })
        .collect();
    out.push_str(&table(&["n", "rank", "term", "count", "cluster", "title", "author"], &rows));

    let d = &r.dblp;
    out.push_str("\nDBLP COPIES\n");
    let era_row = |name: String, e: &DblpEra| {
        vec![name, e.papers.to_string(), e.keys.to_string(), e.copied.to_string(), fmt_ratio(&e.share_of_copied)]
    };
    out.push_str(&table(
        &["measure", "value"],
        &[
            vec!["copied keys".into(), fmt_ratio(&d.copied_keys)],
            vec!["papers with copies".into(), d.papers_with_copies.to_string()],
            vec!["papers with > 1/2 copied".into(), fmt_ratio(&d.papers_majority_copied)],
        ],
    ));
    out.push_str(&table(
        &["era", "papers", "keys", "copied", "share of copied"],
        &[
            era_row(format!("< {}", d.era_start), &d.before_era),
            era_row(format!(">= {}", d.era_start), &d.from_era),
            era_row("undated".into(), &d.undated),
        ],
    ));
    out
}

fn csv_string(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("in-memory csv");
    for row in rows {
        w.write_record(row).expect("in-memory csv");
    }
    String::from_utf8(w.into_inner().expect("in-memory csv")).expect("utf-8 csv")
}

fn opt_num(v: Option<f64>) -> String {
    v.map_or_else(String::new, |v| v.to_string())
}

fn ratio_cells(r: &Ratio) -> [String; 3] {
    [r.num.to_string(), r.den.to_string(), opt_num(r.value)]
}

/// One CSV document per table, keyed by a file stem.
pub fn render_csv(r: &CorpusReport) -> Vec<(String, String)> {
    let mut files = Vec::new();

    let mut rows = Vec::new();
    for (variant, t) in [("exact", &r.cond_prob.exact), ("asymmetric", &r.cond_prob.asymmetric)] {
        for c in &t.columns {
            for (i, p) in c.positions.iter().enumerate() {
                let mut row = vec![variant.to_string(), c.authors.to_string(), (i + 1).to_string()];
                row.extend(ratio_cells(p));
                rows.push(row);
            }
        }
    }
    files.push(("cond_prob".into(), csv_string(&["variant", "authors", "position", "matched", "entries", "probability"], &rows)));

    let mut rows = Vec::new();
    for (split, t) in [("acronym", &r.ordering.acronym), ("first_author", &r.ordering.first_author)] {
        for (alpha, matched, cell) in [
            (true, true, &t.alphabetical_matched),
            (true, false, &t.alphabetical_unmatched),
            (false, true, &t.unordered_matched),
            (false, false, &t.unordered_unmatched),
        ] {
            let mut row = vec![split.to_string(), alpha.to_string(), matched.to_string()];
            row.extend(ratio_cells(cell));
            rows.push(row);
        }
    }
    files.push(("ordering".into(), csv_string(&["split", "alphabetical", "matched", "count", "total", "share"], &rows)));

    let rows: Vec<Vec<String>> = r
        .trend
        .buckets
        .iter()
        .map(|b| {
            let mut row = vec![b.start.to_string(), b.end.to_string(), b.citations.to_string()];
            row.extend(ratio_cells(&b.acronym));
            row.extend(ratio_cells(&b.first_author));
            row
        })
        .collect();
    files.push((
        "trend".into(),
        csv_string(
            &["start", "end", "citations", "acronym", "acronym_den", "acronym_ratio", "first_author", "first_author_den", "first_author_ratio"],
            &rows,
        ),
    ));

    let rows: Vec<Vec<String>> = r
        .consistency
        .per_paper
        .iter()
        .map(|p| {
            let mut row = vec![p.paper_id.clone(), p.pattern.id().to_string()];
            row.extend(ratio_cells(&p.pmr));
            row
        })
        .collect();
    files.push(("pmr".into(), csv_string(&["paper_id", "pattern", "matched", "citations", "pmr"], &rows)));

    let rows: Vec<Vec<String>> = r
        .consistency
        .patterns
        .iter()
        .map(|p| {
            let mut row = vec![p.pattern.id().to_string(), p.papers.to_string()];
            row.extend(ratio_cells(&p.strict));
            row.extend(ratio_cells(&p.loose));
            row
        })
        .collect();
    files.push((
        "consistency".into(),
        csv_string(&["pattern", "papers", "strict", "strict_den", "strict_ratio", "loose", "loose_den", "loose_ratio"], &rows),
    ));

    let rows: Vec<Vec<String>> = r
        .ngrams
        .iter()
        .flat_map(|lvl| {
            lvl.top.iter().enumerate().map(move |(rank, g)| {
                vec![
                    lvl.n.to_string(),
                    (rank + 1).to_string(),
                    g.term.clone(),
                    g.count.to_string(),
                    cluster_name(g.cluster).to_string(),
                    g.in_titles.to_string(),
                    g.in_author_names.to_string(),
                    opt_num(g.title_affinity),
                    opt_num(g.author_affinity),
                ]
            })
        })
        .collect();
    files.push((
        "ngrams".into(),
        csv_string(&["n", "rank", "term", "count", "cluster", "in_titles", "in_author_names", "title_affinity", "author_affinity"], &rows),
    ));

    let d = &r.dblp;
    let rows: Vec<Vec<String>> = [("before", &d.before_era), ("from", &d.from_era), ("undated", &d.undated)]
        .into_iter()
        .map(|(name, e)| {
            let mut row = vec![name.to_string(), e.papers.to_string(), e.keys.to_string(), e.copied.to_string()];
            row.extend(ratio_cells(&e.share_of_copied));
            row
        })
        .collect();
    files.push(("dblp_eras".into(), csv_string(&["era", "papers", "keys", "copied", "share_num", "share_den", "share"], &rows)));
    files
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytics::{ReportParams, Tally};

    #[test]
    fn empty_report_renders() {
        let r = CorpusReport::from_tally(&Tally::default(), &ReportParams::default());
        let text = render_text(&r);
        assert!(text.contains("SUMMARY"));
        let csv = render_csv(&r);
        assert_eq!(csv.len(), 7);
        assert!(csv.iter().all(|(_, body)| body.ends_with('\n')));
    }

    #[test]
    fn table_alignment() {
        let t = table(&["a", "bb"], &[vec!["xyz".into(), "1".into()]]);
        assert_eq!(t, "a    bb\n---  --\nxyz   1\n");
    }
}
