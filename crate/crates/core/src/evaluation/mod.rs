//! Metrics, unknown-token injection, the basic-vs-updated experiment and the
//! equal-unknowns property suite.

mod inject;
pub mod synthetic;
mod theorem;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io::Read;

use serde::Serialize;
use thiserror::Error;

use crate::inference::{classify, Decision, InferenceError};
use crate::model::{ingest_corpus, InaModel, ModelError};

pub use inject::{inject_unknown, unknown_token, Injected, InjectionSpec, RESERVED_PREFIX};
pub use theorem::{theorem_suite, TheoremReport};

/// Expected label of a query that no class should answer.
pub const IRRELEVANT: &str = "__irrelevant__";

/// Injected queries whose unknown share exceeds this are expected to be
/// rejected in the experiment.
pub const IRRELEVANT_UNKNOWN_SHARE: f64 = 1.0 / 3.0;

const AMBIGUOUS: &str = "__ambiguous__";

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("test set is empty")]
    EmptyTestSet,
    #[error("case {0}: cannot inject into an empty query")]
    EmptyQuery(usize),
    #[error("invalid injection spec: {0}")]
    InvalidSpec(&'static str),
    #[error("case {index}: label {label:?} is neither a model class nor {IRRELEVANT}")]
    UnknownLabel { index: usize, label: String },
    #[error(transparent)]
    Inference(#[from] InferenceError),
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TestCase {
    pub query: String,
    pub expected: String,
}

impl TestCase {
    pub fn new(query: impl Into<String>, expected: impl Into<String>) -> Self {
        TestCase {
            query: query.into(),
            expected: expected.into(),
        }
    }

    pub fn is_irrelevant(&self) -> bool {
        self.expected == IRRELEVANT
    }
}

/// Reads a test set with the corpus CSV schema.
pub fn load_test_cases<R: Read>(source: R) -> Result<Vec<TestCase>, EvalError> {
    let examples = ingest_corpus(source).map_err(|e| match e {
        ModelError::EmptyCorpus => EvalError::EmptyTestSet,
        other => EvalError::Model(other),
    })?;
    Ok(examples
        .into_iter()
        .map(|e| TestCase::new(e.query, e.class_label))
        .collect())
}

/// How an ambiguous decision is scored.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EvalMode {
    /// Never correct.
    Strict,
    /// Correct when the top candidate is the expected class.
    #[default]
    Lenient,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricsReport {
    pub total: usize,
    pub correct: usize,
    pub accuracy: f64,
    /// Macro average over the model classes that occur as expected or predicted labels.
    pub precision: f64,
    pub recall: f64,
    pub rejection_rate: f64,
    /// expected label -> predicted label -> count
    pub confusion: BTreeMap<String, BTreeMap<String, usize>>,
}

fn predicted_label(decision: &Decision, mode: EvalMode) -> &str {
    match (decision, mode) {
        (Decision::Answered { class, .. }, _) => class,
        (Decision::Rejected { .. }, _) => IRRELEVANT,
        (Decision::Ambiguous { .. }, EvalMode::Strict) => AMBIGUOUS,
        (Decision::Ambiguous { candidates }, EvalMode::Lenient) => &candidates[0].class,
    }
}

pub fn evaluate(
    model: &InaModel,
    cases: &[TestCase],
    mode: EvalMode,
) -> Result<MetricsReport, EvalError> {
    if cases.is_empty() {
        return Err(EvalError::EmptyTestSet);
    }
    let mut confusion: BTreeMap<String, BTreeMap<String, usize>> = BTreeMap::new();
    let mut rejected = 0;
    for (index, case) in cases.iter().enumerate() {
        if !case.is_irrelevant() && model.class_index(&case.expected).is_none() {
            return Err(EvalError::UnknownLabel {
                index,
                label: case.expected.clone(),
            });
        }
        let decision = classify(&case.query, model)?.decision;
        if matches!(decision, Decision::Rejected { .. }) {
            rejected += 1;
        }
        *confusion
            .entry(case.expected.clone())
            .or_default()
            .entry(predicted_label(&decision, mode).to_string())
            .or_default() += 1;
    }

    let total = cases.len();
    let correct: usize = confusion
        .iter()
        .filter_map(|(expected, row)| row.get(expected))
        .sum();

    let mut participating = BTreeSet::new();
    let mut predicted_totals: BTreeMap<&str, usize> = BTreeMap::new();
    for (expected, row) in &confusion {
        for (predicted, &n) in row {
            *predicted_totals.entry(predicted).or_default() += n;
            participating.extend(
                [expected.as_str(), predicted.as_str()]
                    .into_iter()
                    .filter(|l| model.class_index(l).is_some()),
            );
        }
    }
    let (precision, recall) = if participating.is_empty() {
        (1.0, 1.0)
    } else {
        let mut p_sum = 0.0;
        let mut r_sum = 0.0;
        for class in &participating {
            let tp = confusion
                .get(*class)
                .and_then(|r| r.get(*class))
                .copied()
                .unwrap_or(0);
            let predicted = predicted_totals.get(class).copied().unwrap_or(0);
            let support: usize = confusion.get(*class).map(|r| r.values().sum()).unwrap_or(0);
            p_sum += ratio(tp, predicted);
            r_sum += ratio(tp, support);
        }
        let n = participating.len() as f64;
        (p_sum / n, r_sum / n)
    };

    Ok(MetricsReport {
        total,
        correct,
        accuracy: ratio(correct, total),
        precision,
        recall,
        rejection_rate: ratio(rejected, total),
        confusion,
    })
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Accuracy grid of the basic (no discount) and updated models on clean and
/// injected test sets.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentTable {
    pub clean: MethodPair,
    pub injected: MethodPair,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MethodPair {
    pub basic: MetricsReport,
    pub updated: MetricsReport,
}

impl ExperimentTable {
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("experiment table serializes")
    }
}

impl fmt::Display for ExperimentTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "{:<10} {:<8} {:>8} {:>9} {:>8} {:>9} {:>6}",
            "condition", "method", "accuracy", "precision", "recall", "rejection", "cases"
        )?;
        let rows = [
            ("clean", "basic", &self.clean.basic),
            ("clean", "updated", &self.clean.updated),
            ("injected", "basic", &self.injected.basic),
            ("injected", "updated", &self.injected.updated),
        ];
        for (condition, method, r) in rows {
            writeln!(
                f,
                "{:<10} {:<8} {:>8.4} {:>9.4} {:>8.4} {:>9.4} {:>6}",
                condition, method, r.accuracy, r.precision, r.recall, r.rejection_rate, r.total
            )?;
        }
        Ok(())
    }
}

impl fmt::Display for MetricsReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "cases      {}", self.total)?;
        writeln!(f, "correct    {}", self.correct)?;
        writeln!(f, "accuracy   {:.4}", self.accuracy)?;
        writeln!(f, "precision  {:.4}", self.precision)?;
        writeln!(f, "recall     {:.4}", self.recall)?;
        writeln!(f, "rejection  {:.4}", self.rejection_rate)
    }
}

/// Builds the injected condition: every clean case is injected at
/// `spec.fraction`; cases whose unknown share then exceeds
/// [`IRRELEVANT_UNKNOWN_SHARE`] are relabeled [`IRRELEVANT`]. The
/// `irrelevant` cases are appended unchanged.
pub fn injected_condition(
    clean: &[TestCase],
    irrelevant: &[TestCase],
    spec: &InjectionSpec,
) -> Result<Vec<TestCase>, EvalError> {
    let mut cases = Vec::with_capacity(clean.len() + irrelevant.len());
    for (index, case) in clean.iter().enumerate() {
        let injected = inject_unknown(case, index, spec)?;
        let mut case = injected.case.clone();
        if injected.unknown_share() > IRRELEVANT_UNKNOWN_SHARE {
            case.expected = IRRELEVANT.to_string();
        }
        cases.push(case);
    }
    cases.extend_from_slice(irrelevant);
    Ok(cases)
}

/// Runs both models over the clean set and the injected condition.
pub fn table2_experiment(
    basic: &InaModel,
    updated: &InaModel,
    clean: &[TestCase],
    irrelevant: &[TestCase],
    spec: &InjectionSpec,
    mode: EvalMode,
) -> Result<ExperimentTable, EvalError> {
    let injected = injected_condition(clean, irrelevant, spec)?;
    Ok(ExperimentTable {
        clean: MethodPair {
            basic: evaluate(basic, clean, mode)?,
            updated: evaluate(updated, clean, mode)?,
        },
        injected: MethodPair {
            basic: evaluate(basic, &injected, mode)?,
            updated: evaluate(updated, &injected, mode)?,
        },
    })
}
