//! Run configuration: TOML file plus `key=value` overrides.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::analytics::{parse_lexicon, DblpMode, MatchParams, ReportParams, DEFAULT_TYPE_LEXICON};
use crate::matching::{AcronymParams, MetricConfig};
use crate::meta::{YearMode, YearWindow};
use crate::model::Hyperparams;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("reading {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("config: {0}")]
    Parse(String),
    #[error("override {0:?} is not of the form key=value")]
    BadOverride(String),
    #[error("invalid value: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReportFormat {
    Json,
    Csv,
    Text,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ReportConfig {
    pub decade_boundaries: Vec<i32>,
    pub top_k: usize,
    pub ngram_min: usize,
    pub ngram_max: usize,
    pub strict_pmr: f64,
    pub loose_pmr: f64,
    pub dblp_mode: DblpMode,
    pub dblp_era_start: i32,
    pub affinity_margin: f64,
    /// Word list file replacing the bundled type/source lexicon.
    pub type_lexicon: Option<PathBuf>,
}

impl Default for ReportConfig {
    fn default() -> Self {
        let p = ReportParams::default();
        Self {
            decade_boundaries: p.decade_boundaries,
            top_k: p.top_k,
            ngram_min: p.ngram_min,
            ngram_max: p.ngram_max,
            strict_pmr: p.strict_pmr,
            loose_pmr: p.loose_pmr,
            dblp_mode: p.dblp_mode,
            dblp_era_start: p.dblp_era_start,
            affinity_margin: p.affinity_margin,
            type_lexicon: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub inputs: Vec<PathBuf>,
    pub output_dir: PathBuf,
    pub formats: Vec<ReportFormat>,
    pub year_mode: YearMode,
    /// Upper end of the year window is this plus one; defaults to today.
    pub current_year: Option<i32>,
    /// Exit with status 2 when the share of failed entries exceeds this.
    pub max_error_rate: f64,
    /// Model used for entries no pattern covers; none disables the fallback.
    pub model_path: Option<PathBuf>,
    pub metric: MetricConfig,
    pub acronym: AcronymParams,
    pub classifier: Hyperparams,
    pub report: ReportConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            inputs: Vec::new(),
            output_dir: PathBuf::from("out"),
            formats: vec![ReportFormat::Json, ReportFormat::Csv, ReportFormat::Text],
            year_mode: YearMode::default(),
            current_year: None,
            max_error_rate: 0.05,
            model_path: None,
            metric: MetricConfig::default(),
            acronym: AcronymParams::default(),
            classifier: Hyperparams::default(),
            report: ReportConfig::default(),
        }
    }
}

/// Set `path` (dotted) in a TOML table, creating intermediate tables.
fn set_path(root: &mut toml::Table, path: &str, value: toml::Value) -> Result<(), ConfigError> {
    let mut parts: Vec<&str> = path.split('.').collect();
    let last = parts.pop().filter(|s| !s.is_empty()).ok_or_else(|| ConfigError::BadOverride(path.into()))?;
    let mut table = root;
    for p in parts {
        let slot = table.entry(p.to_string()).or_insert_with(|| toml::Value::Table(toml::Table::new()));
        table = slot
            .as_table_mut()
            .ok_or_else(|| ConfigError::Invalid(format!("{p} is not a table")))?;
    }
    table.insert(last.to_string(), value);
    Ok(())
}

/// Parse the right-hand side of an override as a TOML value, falling back
/// to a bare string.
fn parse_value(raw: &str) -> toml::Value {
    let doc = format!("v = {raw}");
    match doc.parse::<toml::Table>() {
        Ok(mut t) => t.remove("v").unwrap_or_else(|| toml::Value::String(raw.to_string())),
        Err(_) => toml::Value::String(raw.to_string()),
    }
}

impl RunConfig {
    /// Build from optional TOML text and `key=value` overrides, then
    /// validate. Unknown keys are errors.
    pub fn from_toml_with_overrides(text: Option<&str>, overrides: &[String]) -> Result<Self, ConfigError> {
        let mut table: toml::Table = match text {
            Some(t) => t.parse().map_err(|e: toml::de::Error| ConfigError::Parse(e.to_string()))?,
            None => toml::Table::new(),
        };
        for o in overrides {
            let (k, v) = o.split_once('=').ok_or_else(|| ConfigError::BadOverride(o.clone()))?;
            set_path(&mut table, k.trim(), parse_value(v.trim()))?;
        }
        let cfg: RunConfig = toml::Value::Table(table)
            .try_into()
            .map_err(|e: toml::de::Error| ConfigError::Parse(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: Option<&Path>, overrides: &[String]) -> Result<Self, ConfigError> {
        let text = match path {
            Some(p) => Some(std::fs::read_to_string(p).map_err(|source| ConfigError::Io { path: p.into(), source })?),
            None => None,
        };
        Self::from_toml_with_overrides(text.as_deref(), overrides)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let invalid = |m: String| Err(ConfigError::Invalid(m));
        self.metric.validate().map_err(|e| ConfigError::Invalid(e.to_string()))?;
        self.acronym.validate().map_err(|e| ConfigError::Invalid(e.to_string()))?;
        self.classifier.validate().map_err(|e| ConfigError::Invalid(e.to_string()))?;
        if !(0.0..=1.0).contains(&self.max_error_rate) {
            return invalid(format!("max_error_rate {} not in [0, 1]", self.max_error_rate));
        }
        let r = &self.report;
        if r.decade_boundaries.windows(2).any(|w| w[0] >= w[1]) {
            return invalid("decade_boundaries must be strictly increasing".into());
        }
        if r.ngram_min == 0 || r.ngram_min > r.ngram_max {
            return invalid(format!("ngram range {}..={} is empty", r.ngram_min, r.ngram_max));
        }
        if !(0.0..=1.0).contains(&r.strict_pmr) || !(0.0..=1.0).contains(&r.loose_pmr) {
            return invalid("pmr thresholds must lie in [0, 1]".into());
        }
        if !(0.0..=1.0).contains(&r.affinity_margin) {
            return invalid(format!("affinity_margin {} not in [0, 1]", r.affinity_margin));
        }
        if self.formats.is_empty() {
            return invalid("formats must not be empty".into());
        }
        Ok(())
    }

    pub fn year_window(&self) -> YearWindow {
        use chrono::Datelike;
        let year = self.current_year.unwrap_or_else(|| chrono::Local::now().year());
        YearWindow::for_mode(self.year_mode, year)
    }

    pub fn match_params(&self) -> MatchParams {
        MatchParams { metric: self.metric, acronym: self.acronym, dblp_mode: self.report.dblp_mode }
    }

    pub fn report_params(&self) -> Result<ReportParams, ConfigError> {
        let r = &self.report;
        let lexicon = match &r.type_lexicon {
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|source| ConfigError::Io { path: p.clone(), source })?;
                parse_lexicon(&text)
            }
            None => parse_lexicon(DEFAULT_TYPE_LEXICON),
        };
        Ok(ReportParams {
            decade_boundaries: r.decade_boundaries.clone(),
            top_k: r.top_k,
            ngram_min: r.ngram_min,
            ngram_max: r.ngram_max,
            strict_pmr: r.strict_pmr,
            loose_pmr: r.loose_pmr,
            dblp_mode: r.dblp_mode,
            dblp_era_start: r.dblp_era_start,
            affinity_margin: r.affinity_margin,
            type_lexicon: lexicon,
        })
    }
}
