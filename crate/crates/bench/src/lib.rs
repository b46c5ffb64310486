//! Deterministic inputs for the benchmarks.

use citekey_core::latex::DocKind;
use citekey_core::SourceDocument;

const SURNAMES: &[&str] = &[
    "Cormode", "Muthukrishnan", "Yan", "Knuth", "Lamport", "Dijkstra", "Hoare", "Milner",
    "Valiant", "Karp", "Papadimitriou", "Tarjan", "Hopcroft", "Ullman", "Aho", "Sethi",
];

const TITLE_WORDS: &[&str] = &[
    "efficient", "mining", "streams", "graphs", "parallel", "algorithms", "bounds", "sketches",
    "learning", "queries", "distributed", "approximate",
];

fn pick<'a>(pool: &[&'a str], i: usize) -> &'a str {
    pool[i % pool.len()]
}

/// Last names for entry `i`: between one and four, drawn by stride.
pub fn authors_for(i: usize) -> Vec<&'static str> {
    (0..1 + i % 4).map(|j| pick(SURNAMES, i * 7 + j * 3)).collect()
}

/// An acronym-style key such as `CMY05`, every third one lowercased with a
/// surname instead.
pub fn key_for(i: usize) -> String {
    let names = authors_for(i);
    let year = 80 + i % 40;
    if i % 3 == 0 {
        format!("{}{:02}", names[0].to_lowercase(), year % 100)
    } else {
        let initials: String = names.iter().filter_map(|n| n.chars().next()).collect();
        format!("{initials}{:02}", year % 100)
    }
}

/// A `thebibliography` environment with `n` entries in a plain style.
pub fn bibliography(n: usize) -> String {
    let mut out = format!("\\begin{{thebibliography}}{{{n}}}\n");
    for i in 0..n {
        let names = authors_for(i);
        let people: Vec<String> =
            names.iter().enumerate().map(|(j, s)| format!("{}.~{s}", (b'A' + (j as u8 % 26)) as char)).collect();
        let title: Vec<&str> = (0..4).map(|j| pick(TITLE_WORDS, i + j * 5)).collect();
        out.push_str(&format!(
            "\\bibitem{{{}}} {}.\n\\newblock {}.\n\\newblock In {{\\em Proc.\\ Conf.}}, {}.\n\n",
            key_for(i),
            people.join(", "),
            title.join(" "),
            1980 + i % 40,
        ));
    }
    out.push_str("\\end{thebibliography}\n");
    out
}

pub fn document(n: usize) -> SourceDocument {
    SourceDocument::new("bench/main.tex", &bibliography(n), DocKind::Tex)
}
