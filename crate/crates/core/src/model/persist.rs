//! Canonical JSON persistence (`ina-model/1`).
//!
//! Output is built as a `serde_json::Value`, whose object maps keep keys in
//! sorted order, and numbers are printed in shortest round-trip form. Saving
//! the same model twice therefore yields identical bytes.

use std::collections::{BTreeMap, BTreeSet};
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::{InaModel, ModelConfig, ModelError, ModelStats, WeightMatrix};
use crate::preprocess::{
    Feature, LemmaTable, PipelineConfig, SynonymRule, SynonymTable, TableError, Token,
};

pub const FORMAT_TAG: &str = "ina-model/1";

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelFile {
    format: String,
    config: ModelConfig,
    classes: Vec<String>,
    representatives: BTreeMap<String, String>,
    vocabulary: Vec<String>,
    weights: BTreeMap<String, BTreeMap<String, StoredNumber>>,
    stats: ModelStats,
    pipeline: PipelineFile,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PipelineFile {
    synonyms: Vec<RuleFile>,
    lemmas: BTreeMap<String, String>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RuleFile {
    pattern: Vec<String>,
    replacement: Vec<String>,
}

/// A weight as stored on disk. Strings such as `"Infinity"` are accepted on
/// read so that they fail validation by name rather than as a parse error.
#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum StoredNumber {
    Number(f64),
    Text(String),
}

impl StoredNumber {
    fn value(&self) -> f64 {
        match self {
            StoredNumber::Number(x) => *x,
            StoredNumber::Text(s) => s.trim().parse().unwrap_or(f64::NAN),
        }
    }
}

pub fn save_model<W: Write>(model: &InaModel, mut sink: W) -> Result<(), ModelError> {
    let file = ModelFile {
        format: FORMAT_TAG.to_string(),
        config: model.config.clone(),
        classes: model.classes.clone(),
        representatives: model.representatives.clone(),
        vocabulary: model.vocabulary.iter().map(|t| t.to_string()).collect(),
        weights: model
            .weights
            .rows()
            .map(|(f, row)| {
                let row = row
                    .iter()
                    .map(|(c, &w)| (c.clone(), StoredNumber::Number(w)))
                    .collect();
                (f.to_string(), row)
            })
            .collect(),
        stats: model.stats.clone(),
        pipeline: PipelineFile {
            synonyms: model
                .pipeline
                .synonyms
                .rules()
                .iter()
                .map(|r| RuleFile {
                    pattern: r.pattern.iter().map(|t| t.to_string()).collect(),
                    replacement: r.replacement.iter().map(|t| t.to_string()).collect(),
                })
                .collect(),
            lemmas: model
                .pipeline
                .lemmas
                .entries()
                .iter()
                .map(|(k, v)| (k.to_string(), v.to_string()))
                .collect(),
        },
    };
    let value = serde_json::to_value(&file).map_err(|e| ModelError::BadFormat(e.to_string()))?;
    serde_json::to_writer(&mut sink, &value).map_err(|e| match e.io_error_kind() {
        Some(kind) => ModelError::Io(kind.into()),
        None => ModelError::BadFormat(e.to_string()),
    })?;
    sink.flush()?;
    Ok(())
}

pub fn load_model<R: Read>(source: R) -> Result<InaModel, ModelError> {
    let value: Value = serde_json::from_reader(source).map_err(|e| {
        if e.is_io() {
            ModelError::Io(e.into())
        } else {
            ModelError::BadFormat(e.to_string())
        }
    })?;
    match value.get("format").and_then(Value::as_str) {
        Some(FORMAT_TAG) => {}
        Some(other) => {
            return Err(ModelError::BadFormat(format!(
                "unsupported format {other:?}"
            )))
        }
        None => return Err(ModelError::BadFormat("missing format tag".into())),
    }
    let file: ModelFile =
        serde_json::from_value(value).map_err(|e| ModelError::BadFormat(e.to_string()))?;
    validate(file)
}

fn violation(invariant: &'static str, detail: impl Into<String>) -> ModelError {
    ModelError::InvariantViolation {
        invariant,
        detail: detail.into(),
    }
}

fn token(s: String) -> Result<Token, ModelError> {
    Token::new(s).map_err(|e| violation("token", e.to_string()))
}

fn validate(file: ModelFile) -> Result<InaModel, ModelError> {
    file.config
        .validate()
        .map_err(|name| violation(name, "config"))?;

    let classes = file.classes;
    if let Some(c) = classes.iter().find(|c| c.trim().is_empty()) {
        return Err(violation("class_label_nonempty", format!("{c:?}")));
    }
    if let Some(pair) = classes.windows(2).find(|w| w[0] >= w[1]) {
        return Err(violation(
            "class_list_sorted",
            format!("{:?} before {:?}", pair[0], pair[1]),
        ));
    }
    if classes.len() < 2 {
        return Err(violation(
            "at_least_two_classes",
            format!("{} classes", classes.len()),
        ));
    }
    if !file.representatives.keys().eq(classes.iter()) {
        return Err(violation(
            "representatives_complete",
            "representatives must cover exactly the class list",
        ));
    }

    let mut rows = BTreeMap::new();
    for (key, stored_row) in file.weights {
        let feature: Feature = key
            .parse()
            .map_err(|e: TableError| violation("feature_key", e.to_string()))?;
        if stored_row.is_empty() {
            return Err(violation("weight_row_nonempty", key));
        }
        let mut row = BTreeMap::new();
        for (class, stored) in stored_row {
            let w = stored.value();
            if !w.is_finite() {
                return Err(violation("weight_finite", format!("{key}/{class}")));
            }
            if classes.binary_search(&class).is_err() {
                return Err(violation("weight_class_known", format!("{key}/{class}")));
            }
            row.insert(class, w);
        }
        rows.insert(feature, row);
    }
    let weights = WeightMatrix { rows };

    let mut vocabulary = BTreeSet::new();
    for word in file.vocabulary {
        let t = token(word)?;
        if !vocabulary.insert(t.clone()) {
            return Err(violation("vocabulary_unique", t.to_string()));
        }
    }
    let unigrams: BTreeSet<&Token> = weights
        .rows()
        .filter_map(|(f, _)| match f {
            Feature::Unigram(t) => Some(t),
            Feature::Bigram(..) => None,
        })
        .collect();
    if !unigrams.iter().copied().eq(vocabulary.iter()) {
        return Err(violation(
            "vocabulary_matches_features",
            "vocabulary must equal the set of weighted unigrams",
        ));
    }
    for (feature, _) in weights.rows() {
        if let Some(t) = feature.tokens().find(|t| !vocabulary.contains(*t)) {
            return Err(violation(
                "bigram_components_in_vocabulary",
                format!("{feature} ({t})"),
            ));
        }
    }

    let expected = ModelStats::compute(&weights, &classes, vocabulary.len());
    if expected.w_max.is_nan() || expected.w_max <= 0.0 {
        return Err(violation("w_max_positive", format!("{}", expected.w_max)));
    }
    if file.stats.w_max.to_bits() != expected.w_max.to_bits() || file.stats != expected {
        return Err(violation(
            "stats_consistent",
            "stats do not match stored weights",
        ));
    }

    let rules = file
        .pipeline
        .synonyms
        .into_iter()
        .map(|r| {
            Ok(SynonymRule {
                pattern: r.pattern.into_iter().map(token).collect::<Result<_, _>>()?,
                replacement: r
                    .replacement
                    .into_iter()
                    .map(token)
                    .collect::<Result<_, _>>()?,
            })
        })
        .collect::<Result<Vec<_>, ModelError>>()?;
    let synonyms =
        SynonymTable::new(rules).map_err(|e| violation("synonym_table", e.to_string()))?;
    let lemmas = file
        .pipeline
        .lemmas
        .into_iter()
        .map(|(k, v)| Ok((token(k)?, token(v)?)))
        .collect::<Result<BTreeMap<_, _>, ModelError>>()?;
    let pipeline = PipelineConfig::new(file.config.window, synonyms, LemmaTable::new(lemmas))
        .map_err(|e| violation("window_positive", e.to_string()))?;

    Ok(InaModel {
        config: file.config,
        pipeline,
        weights,
        vocabulary,
        classes,
        representatives: file.representatives,
        stats: file.stats,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::tests::vehicle_model;

    fn saved(model: &InaModel) -> Vec<u8> {
        let mut buf = Vec::new();
        save_model(model, &mut buf).unwrap();
        buf
    }

    fn assert_keys_sorted(value: &Value) {
        match value {
            Value::Object(map) => {
                let keys: Vec<_> = map.keys().collect();
                let mut sorted = keys.clone();
                sorted.sort();
                assert_eq!(keys, sorted);
                map.values().for_each(assert_keys_sorted);
            }
            Value::Array(items) => items.iter().for_each(assert_keys_sorted),
            _ => {}
        }
    }

    #[test]
    fn roundtrip_is_byte_identical() {
        let model = vehicle_model();
        let first = saved(&model);
        let loaded = load_model(first.as_slice()).unwrap();
        assert_eq!(loaded, model);
        assert_eq!(saved(&loaded), first);
    }

    #[test]
    fn format_tag_and_sorted_keys() {
        let bytes = saved(&vehicle_model());
        let text = std::str::from_utf8(&bytes).unwrap();
        assert!(text.starts_with("{\"classes\":"));
        let value: Value = serde_json::from_slice(&bytes).unwrap();
        assert_eq!(value["format"], FORMAT_TAG);
        // raw scan: top-level keys appear in sorted order in the byte stream
        let positions: Vec<usize> = [
            "\"classes\"",
            "\"config\"",
            "\"format\"",
            "\"pipeline\"",
            "\"representatives\"",
            "\"stats\"",
            "\"vocabulary\"",
            "\"weights\"",
        ]
        .iter()
        .map(|k| text.find(k).unwrap())
        .collect();
        assert!(positions.windows(2).all(|w| w[0] < w[1]));
        assert_keys_sorted(&value);
    }

    #[test]
    fn wrong_format_tag() {
        assert!(matches!(
            load_model(r#"{"format":"ina-model/2"}"#.as_bytes()),
            Err(ModelError::BadFormat(_))
        ));
        assert!(matches!(
            load_model(r#"{}"#.as_bytes()),
            Err(ModelError::BadFormat(_))
        ));
        assert!(matches!(
            load_model("not json".as_bytes()),
            Err(ModelError::BadFormat(_))
        ));
    }

    #[test]
    fn infinite_weight_rejected() {
        let bytes = saved(&vehicle_model());
        let mut value: Value = serde_json::from_slice(&bytes).unwrap();
        value["weights"]["wheel"]["car"] = Value::String("Infinity".into());
        let err = load_model(value.to_string().as_bytes()).unwrap_err();
        assert!(matches!(
            err,
            ModelError::InvariantViolation {
                invariant: "weight_finite",
                ..
            }
        ));
    }
}
