use std::collections::BTreeMap;
use std::io::Read;

use super::ModelError;

/// One labeled training query. Columns other than `query` and `class` are
/// carried along in `extra` but never used for training.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CorpusExample {
    pub query: String,
    pub class_label: String,
    pub extra: BTreeMap<String, String>,
}

impl CorpusExample {
    pub fn new(query: impl Into<String>, class_label: impl Into<String>) -> Self {
        CorpusExample {
            query: query.into(),
            class_label: class_label.into(),
            extra: BTreeMap::new(),
        }
    }
}

pub const QUERY_COLUMN: &str = "query";
pub const CLASS_COLUMN: &str = "class";

/// Reads an RFC 4180 CSV with a header row naming at least `query` and `class`.
pub fn ingest_corpus<R: Read>(source: R) -> Result<Vec<CorpusExample>, ModelError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(false)
        .from_reader(source);
    let headers: Vec<String> = reader
        .headers()
        .map_err(|e| csv_error(e, 1))?
        .iter()
        .map(|h| h.trim().to_string())
        .collect();
    let column = |name: &'static str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or(ModelError::MissingColumn(name))
    };
    let query_at = column(QUERY_COLUMN)?;
    let class_at = column(CLASS_COLUMN)?;

    let mut examples = Vec::new();
    for (i, record) in reader.records().enumerate() {
        // header is line 1
        let row = i + 2;
        let record = record.map_err(|e| csv_error(e, row))?;
        let class_label = record[class_at].trim().to_string();
        if class_label.is_empty() {
            return Err(ModelError::MalformedRow {
                row,
                reason: "empty class label".into(),
            });
        }
        let extra = headers
            .iter()
            .enumerate()
            .filter(|&(k, _)| k != query_at && k != class_at)
            .map(|(k, h)| (h.clone(), record[k].to_string()))
            .collect();
        examples.push(CorpusExample {
            query: record[query_at].to_string(),
            class_label,
            extra,
        });
    }
    if examples.is_empty() {
        return Err(ModelError::EmptyCorpus);
    }
    Ok(examples)
}

fn csv_error(err: csv::Error, row: usize) -> ModelError {
    match err.into_kind() {
        csv::ErrorKind::Io(e) => ModelError::Io(e),
        csv::ErrorKind::UnequalLengths {
            expected_len, len, ..
        } => ModelError::MalformedRow {
            row,
            reason: format!("expected {expected_len} fields, found {len}"),
        },
        other => ModelError::MalformedRow {
            row,
            reason: format!("{other:?}"),
        },
    }
}
