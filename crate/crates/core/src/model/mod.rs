//! Training: document-level counts, information weights in bits, and the
//! assembled [`InaModel`].
//!
//! Each feature-class weight is one summand of the KL divergence between the
//! class distribution conditioned on the feature and the class prior:
//!
//! ```text
//! w(i, j) = P(j | i) * log2( P(j | i) / P(j) )
//! P(j | i) = N(i, j) / N(i)      P(j) = N(j) / N
//! ```
//!
//! A weight is positive when the feature makes the class more likely than its
//! prior and negative when it makes it less likely. Pairs never seen together
//! have no entry; there is no smoothing.

mod corpus;
mod persist;

use std::collections::{BTreeMap, BTreeSet};
use std::io;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::preprocess::{
    preprocess, Feature, LemmaTable, PipelineConfig, SynonymTable, TableError, Token,
    DEFAULT_WINDOW,
};

pub use corpus::{ingest_corpus, CorpusExample, CLASS_COLUMN, QUERY_COLUMN};
pub use persist::{load_model, save_model, FORMAT_TAG};

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("corpus header lacks required column `{0}`")]
    MissingColumn(&'static str),
    #[error("row {row}: {reason}")]
    MalformedRow { row: usize, reason: String },
    #[error("corpus has no examples")]
    EmptyCorpus,
    #[error("corpus needs at least two distinct classes")]
    DegenerateCorpus,
    #[error("no feature carries positive information about any class")]
    NoPositiveWeight,
    #[error("invalid configuration: {0}")]
    InvalidConfig(&'static str),
    #[error(transparent)]
    Table(#[from] TableError),
    #[error("bad model format: {0}")]
    BadFormat(String),
    #[error("model invariant `{invariant}` violated: {detail}")]
    InvariantViolation {
        invariant: &'static str,
        detail: String,
    },
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// Where the unknown-feature discount is applied.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DiscountStage {
    /// Confidence is the discount factor times the activation.
    #[default]
    PostActivation,
    /// Raw class scores are scaled before the activation.
    PreActivation,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub alpha_f: f64,
    pub window: usize,
    pub threshold: f64,
    pub ambiguity_band: f64,
    pub max_candidates: usize,
    pub discount_stage: DiscountStage,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            alpha_f: 2.0,
            window: DEFAULT_WINDOW,
            threshold: 0.6,
            ambiguity_band: 0.05,
            max_candidates: 5,
            discount_stage: DiscountStage::PostActivation,
        }
    }
}

impl ModelConfig {
    /// Returns the name of the first violated rule.
    pub fn validate(&self) -> Result<(), &'static str> {
        if !(self.alpha_f.is_finite() && self.alpha_f >= 0.0) {
            return Err("alpha_nonnegative");
        }
        if self.window == 0 {
            return Err("window_positive");
        }
        if !(0.0..=1.0).contains(&self.threshold) {
            return Err("threshold_range");
        }
        if !(self.ambiguity_band.is_finite() && self.ambiguity_band >= 0.0) {
            return Err("ambiguity_band_nonnegative");
        }
        if self.max_candidates == 0 {
            return Err("max_candidates_positive");
        }
        if self.discount_stage == DiscountStage::PreActivation && self.alpha_f > 1.0 {
            return Err("pre_activation_alpha");
        }
        Ok(())
    }
}

/// Document-level co-occurrence counts.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CountsTable {
    pub n_docs: usize,
    pub n_class: BTreeMap<String, usize>,
    pub n_feat: BTreeMap<Feature, usize>,
    pub n_joint: BTreeMap<Feature, BTreeMap<String, usize>>,
}

impl CountsTable {
    pub fn joint(&self, feature: &Feature, class: &str) -> usize {
        self.n_joint
            .get(feature)
            .and_then(|row| row.get(class))
            .copied()
            .unwrap_or(0)
    }
}

/// Sparse feature-by-class weights in bits.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct WeightMatrix {
    rows: BTreeMap<Feature, BTreeMap<String, f64>>,
}

impl WeightMatrix {
    pub fn get(&self, feature: &Feature, class: &str) -> Option<f64> {
        self.rows.get(feature)?.get(class).copied()
    }

    pub fn row(&self, feature: &Feature) -> Option<&BTreeMap<String, f64>> {
        self.rows.get(feature)
    }

    pub fn contains(&self, feature: &Feature) -> bool {
        self.rows.contains_key(feature)
    }

    pub fn rows(&self) -> impl Iterator<Item = (&Feature, &BTreeMap<String, f64>)> {
        self.rows.iter()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Feature, &str, f64)> {
        self.rows
            .iter()
            .flat_map(|(f, row)| row.iter().map(move |(c, &w)| (f, c.as_str(), w)))
    }

    /// Number of stored (feature, class) entries.
    pub fn len(&self) -> usize {
        self.rows.values().map(BTreeMap::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn max_weight(&self) -> Option<f64> {
        self.iter().map(|(_, _, w)| w).reduce(f64::max)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelStats {
    pub w_max: f64,
    pub classes: usize,
    pub vocab_size: usize,
    /// Number of features with a strictly positive weight, per class.
    pub positive_features: BTreeMap<String, usize>,
}

impl ModelStats {
    fn compute(weights: &WeightMatrix, classes: &[String], vocab_size: usize) -> Self {
        let mut positive_features: BTreeMap<String, usize> =
            classes.iter().map(|c| (c.clone(), 0)).collect();
        for (_, class, w) in weights.iter() {
            if w > 0.0 {
                *positive_features.entry(class.to_string()).or_default() += 1;
            }
        }
        ModelStats {
            w_max: weights.max_weight().unwrap_or(0.0),
            classes: classes.len(),
            vocab_size,
            positive_features,
        }
    }
}

/// A trained, immutable classifier.
#[derive(Debug, Clone, PartialEq)]
pub struct InaModel {
    config: ModelConfig,
    pipeline: PipelineConfig,
    weights: WeightMatrix,
    vocabulary: BTreeSet<Token>,
    classes: Vec<String>,
    representatives: BTreeMap<String, String>,
    stats: ModelStats,
}

impl InaModel {
    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    pub fn pipeline(&self) -> &PipelineConfig {
        &self.pipeline
    }

    pub fn weights(&self) -> &WeightMatrix {
        &self.weights
    }

    pub fn vocabulary(&self) -> &BTreeSet<Token> {
        &self.vocabulary
    }

    /// Class labels in lexicographic order; score vectors are indexed alike.
    pub fn classes(&self) -> &[String] {
        &self.classes
    }

    pub fn class_index(&self, class: &str) -> Option<usize> {
        self.classes
            .binary_search_by(|c| c.as_str().cmp(class))
            .ok()
    }

    pub fn representative(&self, class: &str) -> Option<&str> {
        self.representatives.get(class).map(String::as_str)
    }

    pub fn representatives(&self) -> &BTreeMap<String, String> {
        &self.representatives
    }

    pub fn stats(&self) -> &ModelStats {
        &self.stats
    }

    #[cfg(test)]
    pub(crate) fn stats_mut(&mut self) -> &mut ModelStats {
        &mut self.stats
    }

    /// Whether `feature` carries any stored weight.
    pub fn knows(&self, feature: &Feature) -> bool {
        self.weights.contains(feature)
    }

    /// The same trained weights under a different decision configuration.
    /// The window is part of the trained features and cannot change.
    pub fn with_config(&self, config: ModelConfig) -> Result<InaModel, ModelError> {
        config.validate().map_err(ModelError::InvalidConfig)?;
        if config.window != self.config.window {
            return Err(ModelError::InvalidConfig("window_fixed_after_training"));
        }
        let mut model = self.clone();
        model.config = config;
        Ok(model)
    }

    pub fn with_alpha(&self, alpha_f: f64) -> Result<InaModel, ModelError> {
        self.with_config(ModelConfig {
            alpha_f,
            ..self.config.clone()
        })
    }
}

/// Counts each distinct feature of each example once.
pub fn compute_counts(
    examples: &[CorpusExample],
    pipeline: &PipelineConfig,
) -> Result<CountsTable, ModelError> {
    if examples.is_empty() {
        return Err(ModelError::EmptyCorpus);
    }
    let mut counts = CountsTable {
        n_docs: examples.len(),
        ..CountsTable::default()
    };
    for example in examples {
        *counts
            .n_class
            .entry(example.class_label.clone())
            .or_default() += 1;
        for feature in preprocess(&example.query, pipeline).features() {
            *counts
                .n_joint
                .entry(feature.clone())
                .or_default()
                .entry(example.class_label.clone())
                .or_default() += 1;
            *counts.n_feat.entry(feature).or_default() += 1;
        }
    }
    Ok(counts)
}

pub fn compute_weights(counts: &CountsTable) -> WeightMatrix {
    let n_docs = counts.n_docs as f64;
    let rows = counts
        .n_joint
        .iter()
        .map(|(feature, joint)| {
            let n_feat = counts.n_feat[feature] as f64;
            let row = joint
                .iter()
                .filter(|&(_, &n)| n > 0)
                .map(|(class, &n)| {
                    let p_class_given_feat = n as f64 / n_feat;
                    let p_class = counts.n_class[class] as f64 / n_docs;
                    (
                        class.clone(),
                        p_class_given_feat * (p_class_given_feat / p_class).log2(),
                    )
                })
                .collect();
            (feature.clone(), row)
        })
        .collect();
    WeightMatrix { rows }
}

pub fn train(
    examples: &[CorpusExample],
    config: ModelConfig,
    synonyms: SynonymTable,
    lemmas: LemmaTable,
) -> Result<InaModel, ModelError> {
    config.validate().map_err(ModelError::InvalidConfig)?;
    let pipeline = PipelineConfig::new(config.window, synonyms, lemmas)?;
    if examples.is_empty() {
        return Err(ModelError::EmptyCorpus);
    }

    let mut representatives = BTreeMap::new();
    for example in examples {
        representatives
            .entry(example.class_label.clone())
            .or_insert_with(|| example.query.clone());
    }
    if representatives.len() < 2 {
        return Err(ModelError::DegenerateCorpus);
    }
    let classes: Vec<String> = representatives.keys().cloned().collect();

    let counts = compute_counts(examples, &pipeline)?;
    let weights = compute_weights(&counts);
    let vocabulary: BTreeSet<Token> = weights
        .rows()
        .filter_map(|(f, _)| match f {
            Feature::Unigram(t) => Some(t.clone()),
            Feature::Bigram(..) => None,
        })
        .collect();
    let stats = ModelStats::compute(&weights, &classes, vocabulary.len());
    if stats.w_max.is_nan() || stats.w_max <= 0.0 {
        return Err(ModelError::NoPositiveWeight);
    }

    Ok(InaModel {
        config,
        pipeline,
        weights,
        vocabulary,
        classes,
        representatives,
        stats,
    })
}
