//! Interpretable text classification with information-weighted features and
//! a confidence penalty for words the model has never seen.
//!
//! Training turns a labeled query corpus into per-feature, per-class weights
//! measured in bits. Classification sums the weights of the known features,
//! passes the sums through a three-part activation, and scales the result by a
//! factor that shrinks as the number of unknown words grows. Low-confidence
//! queries are rejected; near-ties are handed back as a short candidate list.
//!
//! ```
//! use ina_core::{classify, train, CorpusExample, Decision, LemmaTable, ModelConfig, SynonymTable};
//!
//! let corpus = vec![
//!     CorpusExample::new("wheel steering", "car"),
//!     CorpusExample::new("wheel fast", "car"),
//!     CorpusExample::new("dipper bucket", "excavator"),
//!     CorpusExample::new("bucket arm", "excavator"),
//! ];
//! let model = train(&corpus, ModelConfig::default(), SynonymTable::default(), LemmaTable::default())?;
//!
//! let answer = classify("wheel steering", &model)?;
//! assert!(matches!(answer.decision, Decision::Answered { ref class, .. } if class == "car"));
//!
//! let unknown = classify("qqq www eee", &model)?;
//! assert!(matches!(unknown.decision, Decision::Rejected { .. }));
//! # Ok::<(), Box<dyn std::error::Error>>(())
//! ```

pub mod evaluation;
pub mod inference;
pub mod model;
pub mod preprocess;

pub use evaluation::{
    evaluate, inject_unknown, load_test_cases, table2_experiment, theorem_suite, EvalError,
    EvalMode, ExperimentTable, InjectionSpec, MetricsReport, TestCase, TheoremReport, IRRELEVANT,
};
pub use inference::{
    activate, ai_activation, analyze, classify, confidence, decide, discount_factor, score_raw,
    Activation, Candidate, ClassScore, Classification, Decision, InferenceError, QueryAnalysis,
    ScoreBreakdown,
};
pub use model::{
    compute_counts, compute_weights, ingest_corpus, load_model, save_model, train, CorpusExample,
    CountsTable, DiscountStage, InaModel, ModelConfig, ModelError, ModelStats, WeightMatrix,
    FORMAT_TAG,
};
pub use preprocess::{
    preprocess, Feature, FeatureSet, LemmaTable, PipelineConfig, SynonymRule, SynonymTable,
    TableError, Token,
};

// The guide under book/ is compiled here so its snippets run as doctests.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/preprocessing.md")]
    mod preprocessing {}
    #[doc = include_str!("../../../book/src/weights.md")]
    mod weights {}
    #[doc = include_str!("../../../book/src/scoring.md")]
    mod scoring {}
    #[doc = include_str!("../../../book/src/unknown-words.md")]
    mod unknown_words {}
    #[doc = include_str!("../../../book/src/decisions.md")]
    mod decisions {}
    #[doc = include_str!("../../../book/src/persistence.md")]
    mod persistence {}
    #[doc = include_str!("../../../book/src/evaluation.md")]
    mod evaluation {}
    #[doc = include_str!("../../../book/src/cli-and-service.md")]
    mod cli_and_service {}
}
