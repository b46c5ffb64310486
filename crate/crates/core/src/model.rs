//! Word-level NAME / NOT-A-NAME classifier.
//!
//! Logistic regression over [`WordFeatures`], trained by full-batch gradient
//! descent on instances labeled mechanically from pattern-extracted author
//! text: words of the author text are positives, words after it negatives.

use std::collections::{BTreeMap, HashMap};
use std::ops::Range;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::features::{compute_word_features, tokenize, WordFeatures};
use crate::latex::BibEntry;
use crate::meta::PatternMatch;
use crate::tex::render_plain;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("training data needs both classes (positives: {positives}, negatives: {negatives})")]
    DegenerateTraining { positives: usize, negatives: usize },
    #[error("invalid hyperparameter: {0}")]
    InvalidHyperparams(String),
    #[error("model file: {0}")]
    Format(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Hyperparams {
    pub learning_rate: f64,
    pub epochs: usize,
    pub l2: f64,
    pub seed: u64,
    /// Fraction of instances used for training; the rest is held out.
    pub split_ratio: f64,
    /// Loss weight of positive instances.
    pub positive_weight: f64,
    /// Size cap of the token-word vocabulary.
    pub vocab_cap: usize,
    pub cv_folds: usize,
    pub cv_rounds: usize,
    /// Window of the majority smoothing applied when decoding author text.
    pub smoothing_window: usize,
}

impl Default for Hyperparams {
    fn default() -> Self {
        Self {
            learning_rate: 0.1,
            epochs: 500,
            l2: 1e-4,
            seed: 42,
            split_ratio: 0.7,
            positive_weight: 1.0,
            vocab_cap: 50_000,
            cv_folds: 5,
            cv_rounds: 10,
            smoothing_window: 3,
        }
    }
}

impl Hyperparams {
    pub fn validate(&self) -> Result<(), ModelError> {
        let bad = |m: String| Err(ModelError::InvalidHyperparams(m));
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad(format!("learning_rate {}", self.learning_rate));
        }
        if !(self.l2 >= 0.0 && self.l2.is_finite()) {
            return bad(format!("l2 {}", self.l2));
        }
        if !(self.split_ratio > 0.0 && self.split_ratio < 1.0) {
            return bad(format!("split_ratio {} not in (0, 1)", self.split_ratio));
        }
        if !(self.positive_weight > 0.0 && self.positive_weight.is_finite()) {
            return bad(format!("positive_weight {}", self.positive_weight));
        }
        if self.cv_folds < 2 {
            return bad(format!("cv_folds {} < 2", self.cv_folds));
        }
        if self.smoothing_window % 2 == 0 {
            return bad(format!("smoothing_window {} must be odd", self.smoothing_window));
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Plain logistic regression on sparse rows
// ---------------------------------------------------------------------------

/// Sparse feature row: (dimension, value) pairs.
pub type SparseRow = Vec<(usize, f64)>;

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Dataset {
    pub rows: Vec<SparseRow>,
    pub labels: Vec<bool>,
    pub dim: usize,
}

impl Dataset {
    pub fn from_dense(points: &[Vec<f64>], labels: &[bool]) -> Self {
        let dim = points.first().map_or(0, Vec::len);
        let rows = points.iter().map(|p| p.iter().copied().enumerate().collect()).collect();
        Self { rows, labels: labels.to_vec(), dim }
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    fn class_counts(&self) -> (usize, usize) {
        let pos = self.labels.iter().filter(|l| **l).count();
        (pos, self.labels.len() - pos)
    }

    pub fn subset(&self, idx: &[usize]) -> Dataset {
        Dataset {
            rows: idx.iter().map(|&i| self.rows[i].clone()).collect(),
            labels: idx.iter().map(|&i| self.labels[i]).collect(),
            dim: self.dim,
        }
    }
}

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `ln(1 + e^z)` without overflow.
fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogisticModel {
    pub weights: Vec<f64>,
    pub bias: f64,
}

impl LogisticModel {
    pub fn zeros(dim: usize) -> Self {
        Self { weights: vec![0.0; dim], bias: 0.0 }
    }

    pub fn affine(&self, row: &[(usize, f64)]) -> f64 {
        row.iter().fold(self.bias, |acc, &(k, v)| acc + self.weights[k] * v)
    }

    pub fn predict_proba(&self, row: &[(usize, f64)]) -> f64 {
        sigmoid(self.affine(row))
    }
}

/// Mean weighted cross-entropy plus `l2 / 2 * |w|^2` (bias not penalized).
pub fn loss(model: &LogisticModel, data: &Dataset, l2: f64, positive_weight: f64) -> f64 {
    let n = data.len() as f64;
    let ce: f64 = data
        .rows
        .iter()
        .zip(&data.labels)
        .map(|(row, &y)| {
            let z = model.affine(row);
            if y {
                positive_weight * softplus(-z)
            } else {
                softplus(z)
            }
        })
        .sum();
    let reg: f64 = model.weights.iter().map(|w| w * w).sum();
    ce / n + 0.5 * l2 * reg
}

/// Analytic gradient of [`loss`] with respect to (weights, bias).
pub fn gradient(model: &LogisticModel, data: &Dataset, l2: f64, positive_weight: f64) -> (Vec<f64>, f64) {
    let n = data.len() as f64;
    let mut gw: Vec<f64> = model.weights.iter().map(|w| l2 * w).collect();
    let mut gb = 0.0;
    for (row, &y) in data.rows.iter().zip(&data.labels) {
        let p = model.predict_proba(row);
        let g = if y { positive_weight * (p - 1.0) } else { p } / n;
        for &(k, v) in row {
            gw[k] += g * v;
        }
        gb += g;
    }
    (gw, gb)
}

/// Full-batch gradient descent from zero weights. Returns the model and the
/// loss before every epoch plus the final loss.
pub fn fit(data: &Dataset, hp: &Hyperparams) -> Result<(LogisticModel, Vec<f64>), ModelError> {
    hp.validate()?;
    let (positives, negatives) = data.class_counts();
    if positives == 0 || negatives == 0 {
        return Err(ModelError::DegenerateTraining { positives, negatives });
    }
    let mut model = LogisticModel::zeros(data.dim);
    let mut history = Vec::with_capacity(hp.epochs + 1);
    for _ in 0..hp.epochs {
        history.push(loss(&model, data, hp.l2, hp.positive_weight));
        let (gw, gb) = gradient(&model, data, hp.l2, hp.positive_weight);
        for (w, g) in model.weights.iter_mut().zip(&gw) {
            *w -= hp.learning_rate * g;
        }
        model.bias -= hp.learning_rate * gb;
    }
    history.push(loss(&model, data, hp.l2, hp.positive_weight));
    Ok((model, history))
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct EvalReport {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub true_positives: usize,
    pub false_positives: usize,
    pub true_negatives: usize,
    pub false_negatives: usize,
}

impl EvalReport {
    pub fn from_counts(tp: usize, fp: usize, tn: usize, fn_: usize) -> Self {
        let ratio = |a: usize, b: usize| if b == 0 { 0.0 } else { a as f64 / b as f64 };
        let precision = ratio(tp, tp + fp);
        let recall = ratio(tp, tp + fn_);
        let f1 = if precision + recall > 0.0 { 2.0 * precision * recall / (precision + recall) } else { 0.0 };
        Self {
            precision,
            recall,
            f1,
            true_positives: tp,
            false_positives: fp,
            true_negatives: tn,
            false_negatives: fn_,
        }
    }

    pub fn from_predictions(predicted: &[bool], actual: &[bool]) -> Self {
        let (mut tp, mut fp, mut tn, mut fn_) = (0, 0, 0, 0);
        for (&p, &a) in predicted.iter().zip(actual) {
            match (p, a) {
                (true, true) => tp += 1,
                (true, false) => fp += 1,
                (false, false) => tn += 1,
                (false, true) => fn_ += 1,
            }
        }
        Self::from_counts(tp, fp, tn, fn_)
    }
}

pub fn evaluate(model: &LogisticModel, data: &Dataset) -> EvalReport {
    let predicted: Vec<bool> = data.rows.iter().map(|r| model.predict_proba(r) > 0.5).collect();
    EvalReport::from_predictions(&predicted, &data.labels)
}

/// Seeded shuffle split into (train, holdout) index lists.
pub fn split_indices(n: usize, ratio: f64, seed: u64) -> (Vec<usize>, Vec<usize>) {
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let cut = ((n as f64) * ratio).round() as usize;
    let holdout = idx.split_off(cut.min(n));
    (idx, holdout)
}

// ---------------------------------------------------------------------------
// Word features as model input
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledInstance {
    pub features: WordFeatures,
    pub label: bool,
    pub entry_id: String,
    pub token_index: usize,
}

/// Labels for one entry whose author text came from a pattern. Tokens
/// before the author text are not labeled.
pub fn label_entry(entry_id: &str, body: &str, hit: &PatternMatch) -> Vec<LabeledInstance> {
    let trailing = render_plain(&body[hit.span.end..]);
    label_tokens(entry_id, &hit.author_text, &trailing)
}

pub fn label_tokens(entry_id: &str, author_text: &str, trailing: &str) -> Vec<LabeledInstance> {
    let positives = tokenize(author_text).into_iter().map(|t| (t.text, true));
    let negatives = tokenize(trailing).into_iter().map(|t| (t.text, false));
    positives
        .chain(negatives)
        .enumerate()
        .map(|(i, (word, label))| LabeledInstance {
            features: compute_word_features(word),
            label,
            entry_id: entry_id.to_string(),
            token_index: i,
        })
        .collect()
}

/// Instances for every (entry, pattern hit) pair.
pub fn build_labeled_instances(items: &[(BibEntry, PatternMatch)]) -> Vec<LabeledInstance> {
    items
        .iter()
        .flat_map(|(entry, hit)| {
            let id = format!("{}#{}:{}", entry.source_path.display(), entry.bibliography, entry.ordinal);
            label_entry(&id, entry.body(), hit)
        })
        .collect()
}

const TOKEN_LENGTH_SCALE: f64 = 10.0;
const TOKEN_LENGTH_CAP: usize = 30;

/// Frozen dictionaries mapping categorical features to dimensions.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct FeatureEncoder {
    patterns: Vec<String>,
    words: Vec<String>,
    pattern_index: HashMap<String, usize>,
    word_index: HashMap<String, usize>,
}

impl FeatureEncoder {
    const BOOLS: usize = WordFeatures::BOOL_NAMES.len();

    pub fn new(patterns: Vec<String>, words: Vec<String>) -> Self {
        let pattern_index = patterns.iter().enumerate().map(|(i, p)| (p.clone(), i)).collect();
        let word_index = words.iter().enumerate().map(|(i, w)| (w.clone(), i)).collect();
        Self { patterns, words, pattern_index, word_index }
    }

    /// Dictionaries from training instances. Words are ranked by frequency
    /// (ties alphabetically) and capped; patterns are kept in full.
    pub fn fit(instances: &[LabeledInstance], vocab_cap: usize) -> Self {
        let mut patterns: Vec<String> =
            instances.iter().map(|i| i.features.summarized_pattern.clone()).collect::<std::collections::BTreeSet<_>>().into_iter().collect();
        patterns.sort();
        let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
        for inst in instances {
            if !inst.features.token_word.is_empty() {
                *counts.entry(inst.features.token_word.as_str()).or_default() += 1;
            }
        }
        let mut ranked: Vec<(&str, usize)> = counts.into_iter().collect();
        ranked.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(b.0)));
        let words = ranked.into_iter().take(vocab_cap).map(|(w, _)| w.to_string()).collect();
        Self::new(patterns, words)
    }

    fn pattern_base(&self) -> usize {
        Self::BOOLS + 1
    }

    fn word_base(&self) -> usize {
        self.pattern_base() + 1 + self.patterns.len()
    }

    pub fn dim(&self) -> usize {
        self.word_base() + 1 + self.words.len()
    }

    pub fn patterns(&self) -> &[String] {
        &self.patterns
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    /// Unseen categories map to the reserved unknown slot of their block.
    pub fn encode(&self, f: &WordFeatures) -> SparseRow {
        let mut row: SparseRow = f
            .bools()
            .iter()
            .enumerate()
            .filter(|(_, b)| **b)
            .map(|(i, _)| (i, 1.0))
            .collect();
        row.push((Self::BOOLS, f.token_length.min(TOKEN_LENGTH_CAP) as f64 / TOKEN_LENGTH_SCALE));
        let p = self.pattern_index.get(&f.summarized_pattern).map_or(0, |i| i + 1);
        row.push((self.pattern_base() + p, 1.0));
        let w = self.word_index.get(&f.token_word).map_or(0, |i| i + 1);
        row.push((self.word_base() + w, 1.0));
        row
    }

    /// Human-readable name of every dimension, in order.
    pub fn dimension_names(&self) -> Vec<String> {
        let mut names: Vec<String> = WordFeatures::BOOL_NAMES.iter().map(|n| format!("bool.{n}")).collect();
        names.push("num.token_length".to_string());
        names.push("pattern_unknown".to_string());
        names.extend(self.patterns.iter().map(|p| format!("pattern.{}", escape(p))));
        names.push("word_unknown".to_string());
        names.extend(self.words.iter().map(|w| format!("word.{}", escape(w))));
        names
    }
}

/// Trained NAME classifier: encoder dictionaries plus weights.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassifierModel {
    pub encoder: FeatureEncoder,
    pub weights: LogisticModel,
    pub hyperparams: Hyperparams,
}

impl ClassifierModel {
    pub fn predict(&self, features: &WordFeatures) -> f64 {
        self.weights.predict_proba(&self.encoder.encode(features))
    }

    pub fn dataset(&self, instances: &[LabeledInstance]) -> Dataset {
        Dataset {
            rows: instances.iter().map(|i| self.encoder.encode(&i.features)).collect(),
            labels: instances.iter().map(|i| i.label).collect(),
            dim: self.encoder.dim(),
        }
    }

    pub fn evaluate(&self, instances: &[LabeledInstance]) -> EvalReport {
        evaluate(&self.weights, &self.dataset(instances))
    }
}

/// Fit dictionaries and weights on all given instances.
pub fn train_on(instances: &[LabeledInstance], hp: &Hyperparams) -> Result<(ClassifierModel, Vec<f64>), ModelError> {
    let encoder = FeatureEncoder::fit(instances, hp.vocab_cap);
    let mut model = ClassifierModel { encoder, weights: LogisticModel::zeros(0), hyperparams: *hp };
    let data = model.dataset(instances);
    let (weights, history) = fit(&data, hp)?;
    model.weights = weights;
    Ok((model, history))
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainOutcome {
    pub model: ClassifierModel,
    pub holdout: EvalReport,
    pub train_size: usize,
    pub holdout_size: usize,
    pub loss_history: Vec<f64>,
}

/// Seeded split by `split_ratio`, train on the first part, evaluate on the
/// held-out rest.
pub fn train(instances: &[LabeledInstance], hp: &Hyperparams) -> Result<TrainOutcome, ModelError> {
    hp.validate()?;
    let (train_idx, hold_idx) = split_indices(instances.len(), hp.split_ratio, hp.seed);
    let train_set: Vec<LabeledInstance> = train_idx.iter().map(|&i| instances[i].clone()).collect();
    let hold_set: Vec<LabeledInstance> = hold_idx.iter().map(|&i| instances[i].clone()).collect();
    let (model, loss_history) = train_on(&train_set, hp)?;
    let holdout = model.evaluate(&hold_set);
    Ok(TrainOutcome { model, holdout, train_size: train_set.len(), holdout_size: hold_set.len(), loss_history })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvReport {
    pub folds: usize,
    pub rounds: usize,
    pub mean: EvalReport,
    pub per_round: Vec<EvalReport>,
}

/// k-fold cross validation inside the training split, repeated over rounds
/// that reshuffle the fold partition with seed `hp.seed + round`.
pub fn cross_validate(instances: &[LabeledInstance], hp: &Hyperparams) -> Result<CvReport, ModelError> {
    hp.validate()?;
    let (train_idx, _) = split_indices(instances.len(), hp.split_ratio, hp.seed);
    let k = hp.folds_for(train_idx.len());
    let mut per_round = Vec::with_capacity(hp.cv_rounds);
    for round in 0..hp.cv_rounds {
        let mut idx = train_idx.clone();
        idx.shuffle(&mut ChaCha8Rng::seed_from_u64(hp.seed.wrapping_add(round as u64 + 1)));
        let (mut tp, mut fp, mut tn, mut fn_) = (0, 0, 0, 0);
        for fold in 0..k {
            let mut fit_idx = Vec::new();
            let mut val_idx = Vec::new();
            for (pos, &i) in idx.iter().enumerate() {
                if pos % k == fold {
                    val_idx.push(i);
                } else {
                    fit_idx.push(i);
                }
            }
            let fit_set: Vec<LabeledInstance> = fit_idx.iter().map(|&i| instances[i].clone()).collect();
            let val_set: Vec<LabeledInstance> = val_idx.iter().map(|&i| instances[i].clone()).collect();
            let (model, _) = train_on(&fit_set, hp)?;
            let r = model.evaluate(&val_set);
            tp += r.true_positives;
            fp += r.false_positives;
            tn += r.true_negatives;
            fn_ += r.false_negatives;
        }
        per_round.push(EvalReport::from_counts(tp, fp, tn, fn_));
    }
    let n = per_round.len().max(1) as f64;
    let mut mean = EvalReport::from_counts(
        per_round.iter().map(|r| r.true_positives).sum(),
        per_round.iter().map(|r| r.false_positives).sum(),
        per_round.iter().map(|r| r.true_negatives).sum(),
        per_round.iter().map(|r| r.false_negatives).sum(),
    );
    mean.precision = per_round.iter().map(|r| r.precision).sum::<f64>() / n;
    mean.recall = per_round.iter().map(|r| r.recall).sum::<f64>() / n;
    mean.f1 = per_round.iter().map(|r| r.f1).sum::<f64>() / n;
    Ok(CvReport { folds: k, rounds: hp.cv_rounds, mean, per_round })
}

impl Hyperparams {
    fn folds_for(&self, n: usize) -> usize {
        self.cv_folds.min(n.max(2))
    }
}

// ---------------------------------------------------------------------------
// Decoding author text
// ---------------------------------------------------------------------------

/// Smooth 0/1 decisions: a negative token turns positive when a strict
/// majority of its centered window is positive. Positive tokens stay.
pub fn smooth_decisions(raw: &[bool], window: usize) -> Vec<bool> {
    let half = window / 2;
    (0..raw.len())
        .map(|i| {
            if raw[i] || window < 3 {
                return raw[i];
            }
            let lo = i.saturating_sub(half);
            let hi = (i + half + 1).min(raw.len());
            let positives = raw[lo..hi].iter().filter(|b| **b).count();
            2 * positives > window
        })
        .collect()
}

/// Length of the positive prefix run after smoothing.
pub fn author_prefix_len(probabilities: &[f64], window: usize) -> usize {
    let raw: Vec<bool> = probabilities.iter().map(|p| *p > 0.5).collect();
    smooth_decisions(&raw, window).iter().take_while(|b| **b).count()
}

/// Author text detected by the classifier in rendered entry text: the
/// maximal run of NAME tokens at the start of the text.
pub fn detect_author_text(model: &ClassifierModel, text: &str) -> Option<(String, Range<usize>)> {
    let tokens = tokenize(text);
    let probs: Vec<f64> = tokens.iter().map(|t| model.predict(&compute_word_features(t.text))).collect();
    let n = author_prefix_len(&probs, model.hyperparams.smoothing_window);
    if n == 0 {
        return None;
    }
    let span = tokens[0].start..tokens[n - 1].end;
    Some((text[span.clone()].to_string(), span))
}

// ---------------------------------------------------------------------------
// Model file
// ---------------------------------------------------------------------------

const FORMAT_NAME: &str = "citekey-name-model";
const FORMAT_VERSION: u32 = 1;

fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '%' | '=' | '\n' | '\r' | '\t' | ' ' => out.push_str(&format!("%{:02X}", c as u32)),
            c => out.push(c),
        }
    }
    out
}

fn unescape(s: &str) -> Result<String, ModelError> {
    let mut out = String::with_capacity(s.len());
    let mut chars = s.chars();
    while let Some(c) = chars.next() {
        if c == '%' {
            let hex: String = chars.by_ref().take(2).collect();
            let code = u32::from_str_radix(&hex, 16).map_err(|_| ModelError::Format(format!("bad escape %{hex}")))?;
            out.push(char::from_u32(code).ok_or_else(|| ModelError::Format(format!("bad escape %{hex}")))?);
        } else {
            out.push(c);
        }
    }
    Ok(out)
}

impl ClassifierModel {
    /// Serialize as `key=value` lines: header, hyperparameters, bias, then
    /// one weight per dimension keyed by its feature name.
    pub fn to_text(&self) -> String {
        let hp = &self.hyperparams;
        let mut out = String::new();
        out.push_str(&format!("format={FORMAT_NAME}\nversion={FORMAT_VERSION}\n"));
        out.push_str(&format!("hp.learning_rate={:?}\n", hp.learning_rate));
        out.push_str(&format!("hp.epochs={}\n", hp.epochs));
        out.push_str(&format!("hp.l2={:?}\n", hp.l2));
        out.push_str(&format!("hp.seed={}\n", hp.seed));
        out.push_str(&format!("hp.split_ratio={:?}\n", hp.split_ratio));
        out.push_str(&format!("hp.positive_weight={:?}\n", hp.positive_weight));
        out.push_str(&format!("hp.vocab_cap={}\n", hp.vocab_cap));
        out.push_str(&format!("hp.cv_folds={}\n", hp.cv_folds));
        out.push_str(&format!("hp.cv_rounds={}\n", hp.cv_rounds));
        out.push_str(&format!("hp.smoothing_window={}\n", hp.smoothing_window));
        out.push_str(&format!("bias={:?}\n", self.weights.bias));
        for (name, w) in self.encoder.dimension_names().iter().zip(&self.weights.weights) {
            out.push_str(&format!("w.{name}={w:?}\n"));
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self, ModelError> {
        let fmt_err = |m: String| ModelError::Format(m);
        let mut hp = Hyperparams::default();
        let mut bias = None;
        let mut header = (false, false);
        let mut weights = Vec::new();
        let mut patterns = Vec::new();
        let mut words = Vec::new();
        let mut expected_names: Vec<String> =
            WordFeatures::BOOL_NAMES.iter().map(|n| format!("bool.{n}")).collect();
        expected_names.push("num.token_length".into());
        expected_names.push("pattern_unknown".into());
        let mut fixed_seen = 0;
        let mut word_unknown_seen = false;

        for (lineno, line) in text.lines().enumerate() {
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) =
                line.split_once('=').ok_or_else(|| fmt_err(format!("line {}: missing '='", lineno + 1)))?;
            let num = |v: &str| v.parse::<f64>().map_err(|e| fmt_err(format!("line {}: {e}", lineno + 1)));
            let int = |v: &str| v.parse::<u64>().map_err(|e| fmt_err(format!("line {}: {e}", lineno + 1)));
            match key {
                "format" => {
                    if value != FORMAT_NAME {
                        return Err(fmt_err(format!("unknown format {value}")));
                    }
                    header.0 = true;
                }
                "version" => {
                    if value != FORMAT_VERSION.to_string() {
                        return Err(fmt_err(format!("unsupported version {value}")));
                    }
                    header.1 = true;
                }
                "hp.learning_rate" => hp.learning_rate = num(value)?,
                "hp.epochs" => hp.epochs = int(value)? as usize,
                "hp.l2" => hp.l2 = num(value)?,
                "hp.seed" => hp.seed = int(value)?,
                "hp.split_ratio" => hp.split_ratio = num(value)?,
                "hp.positive_weight" => hp.positive_weight = num(value)?,
                "hp.vocab_cap" => hp.vocab_cap = int(value)? as usize,
                "hp.cv_folds" => hp.cv_folds = int(value)? as usize,
                "hp.cv_rounds" => hp.cv_rounds = int(value)? as usize,
                "hp.smoothing_window" => hp.smoothing_window = int(value)? as usize,
                "bias" => bias = Some(num(value)?),
                _ => {
                    let name = key.strip_prefix("w.").ok_or_else(|| fmt_err(format!("unknown key {key}")))?;
                    let w = num(value)?;
                    if fixed_seen < expected_names.len() {
                        if name != expected_names[fixed_seen] {
                            return Err(fmt_err(format!("expected weight {}, found {name}", expected_names[fixed_seen])));
                        }
                        fixed_seen += 1;
                    } else if let Some(p) = name.strip_prefix("pattern.") {
                        if word_unknown_seen {
                            return Err(fmt_err("pattern weight after word block".into()));
                        }
                        patterns.push(unescape(p)?);
                    } else if name == "word_unknown" {
                        word_unknown_seen = true;
                    } else if let Some(wd) = name.strip_prefix("word.") {
                        if !word_unknown_seen {
                            return Err(fmt_err("word weight before word_unknown".into()));
                        }
                        words.push(unescape(wd)?);
                    } else {
                        return Err(fmt_err(format!("unknown weight {name}")));
                    }
                    weights.push(w);
                }
            }
        }
        if !(header.0 && header.1) {
            return Err(fmt_err("missing format header".into()));
        }
        if fixed_seen < expected_names.len() || !word_unknown_seen {
            return Err(fmt_err("truncated weight table".into()));
        }
        let bias = bias.ok_or_else(|| fmt_err("missing bias".into()))?;
        let encoder = FeatureEncoder::new(patterns, words);
        debug_assert_eq!(encoder.dim(), weights.len());
        Ok(Self { encoder, weights: LogisticModel { weights, bias }, hyperparams: hp })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_model_predicts_half() {
        let m = LogisticModel::zeros(3);
        assert_eq!(m.predict_proba(&[(0, 5.0), (2, -1.0)]), 0.5);
    }

    #[test]
    fn eval_identities() {
        let r = EvalReport::from_counts(8, 2, 5, 4);
        assert_eq!(r.precision, 8.0 / 10.0);
        assert_eq!(r.recall, 8.0 / 12.0);
        assert!((r.f1 - 2.0 * r.precision * r.recall / (r.precision + r.recall)).abs() < 1e-15);
        let r = EvalReport::from_counts(0, 0, 5, 0);
        assert_eq!((r.precision, r.recall, r.f1), (0.0, 0.0, 0.0));
    }

    #[test]
    fn degenerate_training() {
        let data = Dataset::from_dense(&[vec![1.0], vec![2.0]], &[true, true]);
        assert!(matches!(fit(&data, &Hyperparams::default()), Err(ModelError::DegenerateTraining { .. })));
    }

    #[test]
    fn constant_features_learn_base_rate() {
        let points = vec![vec![1.0, 0.5]; 40];
        let labels: Vec<bool> = (0..40).map(|i| i % 4 == 0).collect();
        let data = Dataset::from_dense(&points, &labels);
        let hp = Hyperparams { epochs: 3000, l2: 0.0, ..Default::default() };
        let (m, _) = fit(&data, &hp).unwrap();
        assert!((m.predict_proba(&data.rows[0]) - 0.25).abs() < 1e-3);
    }

    #[test]
    fn labels_from_author_and_trailing_text() {
        let inst = label_tokens("e", "A. Bee and C. Dee", "Some title words here. 2001.");
        let pos = inst.iter().filter(|i| i.label).count();
        assert_eq!(pos, 5);
        assert_eq!(inst.len() - pos, 5);
        assert!(label_tokens("e", "A. Bee", "").iter().all(|i| i.label));
    }

    #[test]
    fn editor_names_after_author_text_are_negative() {
        let inst = label_tokens("e", "J. Doe.", "Title. In P. Editor, editor, Proc.");
        let editor = inst.iter().find(|i| i.features.token_word == "editor" && i.features.init_capital).unwrap();
        assert!(!editor.label);
    }

    #[test]
    fn smoothing_examples() {
        assert_eq!(author_prefix_len(&[0.9, 0.8, 0.9, 0.2, 0.1], 3), 3);
        assert_eq!(author_prefix_len(&[0.4, 0.3], 3), 0);
        assert_eq!(author_prefix_len(&[0.9, 0.4, 0.9, 0.1], 3), 3);
        // an isolated low first token is not bridged
        assert_eq!(author_prefix_len(&[0.4, 0.9, 0.9], 3), 0);
    }

    #[test]
    fn escape_roundtrip() {
        for s in ["a=b", "%x", "A a\tb", "Aa-Aa"] {
            assert_eq!(unescape(&escape(s)).unwrap(), s);
        }
    }

    #[test]
    fn unknown_categories_are_finite() {
        let inst = label_tokens("e", "A. Bee", "title words");
        let (model, _) = train_on(&inst, &Hyperparams { epochs: 10, ..Default::default() }).unwrap();
        let p = model.predict(&compute_word_features("Zzyzx-Qq"));
        assert!(p.is_finite() && p > 0.0 && p < 1.0);
    }

    #[test]
    fn model_file_roundtrip() {
        let inst = label_tokens("e", "A. Bee and C. Dee", "Title of a=b paper. 2001.");
        let (model, _) = train_on(&inst, &Hyperparams { epochs: 20, ..Default::default() }).unwrap();
        let text = model.to_text();
        let back = ClassifierModel::from_text(&text).unwrap();
        assert_eq!(back, model);
        assert_eq!(back.to_text(), text);
    }

    #[test]
    fn model_file_rejects_bad_input() {
        assert!(ClassifierModel::from_text("").is_err());
        assert!(ClassifierModel::from_text("format=other\nversion=1\n").is_err());
        assert!(ClassifierModel::from_text("format=citekey-name-model\nversion=9\n").is_err());
    }
}
