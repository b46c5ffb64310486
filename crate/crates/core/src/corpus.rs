//! Finding and reading corpus files.

use std::path::{Path, PathBuf};

use thiserror::Error;
use walkdir::WalkDir;

use crate::latex::{DocKind, SourceDocument};

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {message}")]
    Walk { path: PathBuf, message: String },
}

/// A `.tex` or `.bbl` file and the paper it belongs to.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CorpusFile {
    pub path: PathBuf,
    /// Path relative to the input it was found under, `/`-separated.
    pub relative: String,
    /// Relative parent directory, or the file stem for top-level files.
    pub paper_id: String,
    pub kind: DocKind,
}

fn slash_path(p: &Path) -> String {
    p.components().map(|c| c.as_os_str().to_string_lossy()).collect::<Vec<_>>().join("/")
}

fn corpus_file(root: &Path, path: &Path) -> Option<CorpusFile> {
    let kind = DocKind::from_extension(path.extension()?.to_str()?)?;
    let rel = path.strip_prefix(root).unwrap_or(path);
    let rel = if rel.as_os_str().is_empty() { Path::new(path.file_name()?) } else { rel };
    let parent = rel.parent().filter(|p| !p.as_os_str().is_empty());
    let paper_id = match parent {
        Some(p) => slash_path(p),
        None => rel.file_stem()?.to_string_lossy().into_owned(),
    };
    Some(CorpusFile { path: path.to_path_buf(), relative: slash_path(rel), paper_id, kind })
}

/// Recursively collect `.tex` / `.bbl` files under each input, sorted by
/// path. Traversal errors are returned alongside the files found.
pub fn walk_corpus(inputs: &[PathBuf]) -> (Vec<CorpusFile>, Vec<CorpusError>) {
    let mut files = Vec::new();
    let mut errors = Vec::new();
    for input in inputs {
        if input.is_file() {
            let root = input.parent().unwrap_or(Path::new(""));
            files.extend(corpus_file(root, input));
            continue;
        }
        for item in WalkDir::new(input).sort_by_file_name() {
            match item {
                Ok(e) if e.file_type().is_file() => files.extend(corpus_file(input, e.path())),
                Ok(_) => {}
                Err(e) => errors.push(CorpusError::Walk {
                    path: e.path().map_or_else(|| input.clone(), Path::to_path_buf),
                    message: e.to_string(),
                }),
            }
        }
    }
    files.sort_by(|a, b| a.path.cmp(&b.path));
    files.dedup_by(|a, b| a.path == b.path);
    (files, errors)
}

pub fn load(file: &CorpusFile) -> Result<SourceDocument, CorpusError> {
    let bytes = std::fs::read(&file.path).map_err(|source| CorpusError::Io { path: file.path.clone(), source })?;
    Ok(SourceDocument::from_bytes(&file.path, &bytes, file.kind))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn walks_sorted_and_filtered() {
        let dir = tempfile::tempdir().unwrap();
        let root = dir.path();
        std::fs::create_dir_all(root.join("b/sub")).unwrap();
        std::fs::create_dir_all(root.join("a")).unwrap();
        for f in ["a/x.tex", "a/y.tex", "b/sub/z.bbl", "b/w.tex", "top.tex", "notes.txt"] {
            std::fs::write(root.join(f), "").unwrap();
        }
        let (files, errors) = walk_corpus(&[root.to_path_buf()]);
        assert!(errors.is_empty());
        let rel: Vec<&str> = files.iter().map(|f| f.relative.as_str()).collect();
        assert_eq!(rel, ["a/x.tex", "a/y.tex", "b/sub/z.bbl", "b/w.tex", "top.tex"]);
        let ids: Vec<&str> = files.iter().map(|f| f.paper_id.as_str()).collect();
        assert_eq!(ids, ["a", "a", "b/sub", "b", "top"]);
    }

    #[test]
    fn empty_directory() {
        let dir = tempfile::tempdir().unwrap();
        let (files, errors) = walk_corpus(&[dir.path().to_path_buf()]);
        assert!(files.is_empty() && errors.is_empty());
    }

    #[test]
    fn single_file_input() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("paper.bbl");
        std::fs::write(&p, "x").unwrap();
        let (files, _) = walk_corpus(&[p]);
        assert_eq!(files[0].paper_id, "paper");
        assert_eq!(files[0].kind, DocKind::Bbl);
    }
}
