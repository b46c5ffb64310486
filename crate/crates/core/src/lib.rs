//! Citation-key analysis for LaTeX bibliographies.
//!
//! The pipeline reads `.tex` / `.bbl` sources, splits `thebibliography`
//! environments into entries, extracts keys, years, author text and titles,
//! resolves author names, and measures how citation keys reference the
//! cited authors.

pub mod analytics;
pub mod authors;
pub mod config;
pub mod corpus;
pub mod features;
pub mod latex;
pub mod matching;
pub mod meta;
pub mod model;
pub mod pipeline;
pub mod report;
pub mod tex;

pub use analytics::{CorpusReport, EntryRecord, MatchParams, ReportParams, Tally};
pub use authors::AuthorName;
pub use config::{ConfigError, ReportFormat, RunConfig};
pub use corpus::{walk_corpus, CorpusFile};
pub use latex::{BibEntry, ParseError, SourceDocument};
pub use matching::{is_acronym, score_metrics, AcronymParams, MetricConfig};
pub use meta::{BibMeta, YearMode, YearWindow};
pub use model::{ClassifierModel, EvalReport, Hyperparams, ModelError};
pub use pipeline::{Diagnostics, FileOutput};
