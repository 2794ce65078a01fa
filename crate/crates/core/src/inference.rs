//! Scoring, unknown-feature discounting, activation and the decision policy.
//!
//! For a query the pipeline is
//!
//! ```text
//! I_j  = sum of w(i, j) over known features i          (raw score)
//! ai_j = (softmax_j + positive_share_j + tanh_j) / 3    (activation)
//! CL_j = (1 - alpha * u / (1 + u)) * ai_j               (confidence)
//! ```
//!
//! where `u` counts distinct query words the model has never seen. The
//! confidence depends on how many unknown words there are, never on which
//! ones they are.

use std::collections::BTreeMap;

use serde::Serialize;
use thiserror::Error;

use crate::model::{DiscountStage, InaModel};
use crate::preprocess::{preprocess, Feature, FeatureSet};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum InferenceError {
    #[error("model has no positive weight (w_max = {0})")]
    InvalidModel(f64),
}

/// A preprocessed query split into what the model knows and what it does not.
#[derive(Debug, Clone, PartialEq)]
pub struct QueryAnalysis {
    pub features: FeatureSet,
    /// Query features that carry weights in the model, in sorted order.
    pub known_features: Vec<Feature>,
    /// Distinct query tokens absent from the model vocabulary.
    pub unknown_count: usize,
}

impl QueryAnalysis {
    pub fn n_known(&self) -> usize {
        self.known_features.len()
    }
}

/// Raw class scores, indexed like [`InaModel::classes`].
pub type RawScores = Vec<f64>;

/// The three activation components and their mean for one class.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Activation {
    pub sm: f64,
    pub relu_norm: f64,
    pub tanh_comp: f64,
    pub ai: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassScore {
    pub class: String,
    pub raw_score: f64,
    pub sm: f64,
    pub relu_norm: f64,
    pub tanh_comp: f64,
    pub ai: f64,
    pub confidence: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScoreBreakdown {
    pub discount_factor: f64,
    pub unknown_count: usize,
    pub classes: Vec<ClassScore>,
}

impl ScoreBreakdown {
    pub fn confidences(&self) -> Vec<f64> {
        self.classes.iter().map(|c| c.confidence).collect()
    }

    /// Every number as raw bits, for exact comparisons.
    pub fn to_bits(&self) -> Vec<u64> {
        let mut bits = vec![self.discount_factor.to_bits(), self.unknown_count as u64];
        for c in &self.classes {
            bits.extend(
                [
                    c.raw_score,
                    c.sm,
                    c.relu_norm,
                    c.tanh_comp,
                    c.ai,
                    c.confidence,
                ]
                .map(f64::to_bits),
            );
        }
        bits
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Candidate {
    pub class: String,
    pub confidence: f64,
    pub representative: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum Decision {
    Answered { class: String, confidence: f64 },
    Ambiguous { candidates: Vec<Candidate> },
    Rejected { best_confidence: f64 },
}

impl Decision {
    pub fn status(&self) -> &'static str {
        match self {
            Decision::Answered { .. } => "answered",
            Decision::Ambiguous { .. } => "ambiguous",
            Decision::Rejected { .. } => "rejected",
        }
    }

    /// Confidence of the best class.
    pub fn confidence(&self) -> f64 {
        match self {
            Decision::Answered { confidence, .. } => *confidence,
            Decision::Ambiguous { candidates } => candidates[0].confidence,
            Decision::Rejected { best_confidence } => *best_confidence,
        }
    }

    /// The answered class, or the first candidate when ambiguous.
    pub fn top_class(&self) -> Option<&str> {
        match self {
            Decision::Answered { class, .. } => Some(class),
            Decision::Ambiguous { candidates } => Some(&candidates[0].class),
            Decision::Rejected { .. } => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Classification {
    pub analysis: QueryAnalysis,
    pub breakdown: ScoreBreakdown,
    pub decision: Decision,
}

pub fn analyze(raw: &str, model: &InaModel) -> QueryAnalysis {
    let features = preprocess(raw, model.pipeline());
    let unknown_count = features
        .tokens
        .iter()
        .filter(|t| !model.vocabulary().contains(*t))
        .count();
    // bigrams with an unknown component never carry weights, so they drop out here
    let known_features = features.features().filter(|f| model.knows(f)).collect();
    QueryAnalysis {
        features,
        known_features,
        unknown_count,
    }
}

/// `I_j = sum_i w(i, j) * x_i` with binary `x_i` over the known features.
pub fn score_raw(analysis: &QueryAnalysis, model: &InaModel) -> RawScores {
    let mut scores = vec![0.0; model.classes().len()];
    for feature in &analysis.known_features {
        let Some(row) = model.weights().row(feature) else {
            continue;
        };
        for (class, &w) in row {
            if let Some(j) = model.class_index(class) {
                scores[j] += w;
            }
        }
    }
    scores
}

/// `1 - alpha * u / (1 + u)`.
///
/// Evaluated as `((1 + u) - alpha * u) / (1 + u)` so that the only rounding
/// happens in the final division: with `alpha = 2` the values for
/// `u = 0, 1, 2, 3` are exactly `1, 0, -1/3, -1/2`.
pub fn discount_factor(unknown_count: usize, alpha_f: f64) -> f64 {
    let u = unknown_count as f64;
    ((1.0 + u) - alpha_f * u) / (1.0 + u)
}

/// The three-part activation over a raw score vector.
///
/// `w_max` normalizes the average weight per known feature; with no known
/// features the tanh component is zero.
pub fn ai_activation(scores: &[f64], n_known: usize, w_max: f64) -> Vec<Activation> {
    let peak = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = scores.iter().map(|&s| (s - peak).exp()).collect();
    let exp_sum: f64 = exps.iter().sum();
    let positive_sum: f64 = scores.iter().map(|&s| s.max(0.0)).sum();

    scores
        .iter()
        .zip(&exps)
        .map(|(&score, &e)| {
            let sm = e / exp_sum;
            let relu_norm = if positive_sum > 0.0 {
                score.max(0.0) / positive_sum
            } else {
                0.0
            };
            let tanh_comp = if n_known > 0 {
                (score / n_known as f64 / w_max).tanh()
            } else {
                0.0
            };
            let ai = ((sm + relu_norm + tanh_comp) / 3.0).clamp(-1.0, 1.0);
            Activation {
                sm,
                relu_norm,
                tanh_comp,
                ai,
            }
        })
        .collect()
}

pub fn activate(
    raw: &[f64],
    analysis: &QueryAnalysis,
    model: &InaModel,
) -> Result<Vec<Activation>, InferenceError> {
    let w_max = model.stats().w_max;
    if w_max.is_nan() || w_max <= 0.0 {
        return Err(InferenceError::InvalidModel(w_max));
    }
    let config = model.config();
    match config.discount_stage {
        DiscountStage::PostActivation => Ok(ai_activation(raw, analysis.n_known(), w_max)),
        DiscountStage::PreActivation => {
            let factor = discount_factor(analysis.unknown_count, config.alpha_f);
            let scaled: Vec<f64> = raw.iter().map(|s| s * factor).collect();
            Ok(ai_activation(&scaled, analysis.n_known(), w_max))
        }
    }
}

/// Per-class confidence in `[-1, 1]`, indexed like the model classes.
pub fn confidence(
    activations: &[Activation],
    analysis: &QueryAnalysis,
    model: &InaModel,
) -> Vec<f64> {
    let config = model.config();
    let factor = match config.discount_stage {
        DiscountStage::PostActivation => discount_factor(analysis.unknown_count, config.alpha_f),
        DiscountStage::PreActivation => 1.0,
    };
    activations
        .iter()
        .map(|a| (factor * a.ai).clamp(-1.0, 1.0))
        .collect()
}

pub fn decide(confidences: &[f64], model: &InaModel) -> Decision {
    let classes = model.classes();
    let config = model.config();
    // classes are sorted, so keeping the first maximum breaks ties lexicographically
    let mut best = 0;
    for (j, &c) in confidences.iter().enumerate() {
        if c > confidences[best] {
            best = j;
        }
    }
    let top = confidences[best];
    if top < config.threshold {
        return Decision::Rejected {
            best_confidence: top,
        };
    }

    let mut near: Vec<usize> = (0..confidences.len())
        .filter(|&j| confidences[j] >= top - config.ambiguity_band)
        .collect();
    near.sort_by(|&a, &b| {
        confidences[b]
            .total_cmp(&confidences[a])
            .then_with(|| classes[a].cmp(&classes[b]))
    });
    near.truncate(config.max_candidates);

    if near.len() == 1 {
        return Decision::Answered {
            class: classes[best].clone(),
            confidence: top,
        };
    }
    let candidates = near
        .into_iter()
        .map(|j| Candidate {
            class: classes[j].clone(),
            confidence: confidences[j],
            representative: model
                .representative(&classes[j])
                .unwrap_or_default()
                .to_string(),
        })
        .collect();
    Decision::Ambiguous { candidates }
}

pub fn classify(raw: &str, model: &InaModel) -> Result<Classification, InferenceError> {
    let analysis = analyze(raw, model);
    let scores = score_raw(&analysis, model);
    let activations = activate(&scores, &analysis, model)?;
    let confidences = confidence(&activations, &analysis, model);
    let decision = decide(&confidences, model);

    let config = model.config();
    let breakdown = ScoreBreakdown {
        discount_factor: discount_factor(analysis.unknown_count, config.alpha_f),
        unknown_count: analysis.unknown_count,
        classes: model
            .classes()
            .iter()
            .enumerate()
            .map(|(j, class)| ClassScore {
                class: class.clone(),
                raw_score: scores[j],
                sm: activations[j].sm,
                relu_norm: activations[j].relu_norm,
                tanh_comp: activations[j].tanh_comp,
                ai: activations[j].ai,
                confidence: confidences[j],
            })
            .collect(),
    };
    Ok(Classification {
        analysis,
        breakdown,
        decision,
    })
}

/// Confidence per class label.
pub fn confidence_map(breakdown: &ScoreBreakdown) -> BTreeMap<&str, f64> {
    breakdown
        .classes
        .iter()
        .map(|c| (c.class.as_str(), c.confidence))
        .collect()
}
