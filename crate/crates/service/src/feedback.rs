use std::fs::{File, OpenOptions};
use std::io::{self, Write};
use std::path::Path;
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

/// One disambiguation choice, stored as a JSON Lines record.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeedbackRecord {
    /// RFC 3339, UTC.
    pub ts: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub query_id: Option<String>,
    pub query: String,
    pub candidates: Vec<String>,
    pub chosen_class: String,
}

impl FeedbackRecord {
    pub fn now(
        query_id: Option<String>,
        query: impl Into<String>,
        candidates: Vec<String>,
        chosen_class: impl Into<String>,
    ) -> Self {
        FeedbackRecord {
            ts: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Millis, true),
            query_id,
            query: query.into(),
            candidates,
            chosen_class: chosen_class.into(),
        }
    }
}

/// Append-only JSON Lines sink. Each record is written as one `write_all`
/// under the lock, so concurrent writers never interleave within a line.
#[derive(Debug)]
pub struct FeedbackLog {
    sink: Option<Mutex<File>>,
}

impl FeedbackLog {
    pub fn open(path: impl AsRef<Path>) -> io::Result<Self> {
        let file = OpenOptions::new().create(true).append(true).open(path)?;
        Ok(FeedbackLog {
            sink: Some(Mutex::new(file)),
        })
    }

    /// A log that drops every record.
    pub fn disabled() -> Self {
        FeedbackLog { sink: None }
    }

    pub fn append(&self, record: &FeedbackRecord) -> io::Result<()> {
        let Some(sink) = &self.sink else {
            return Ok(());
        };
        let mut line = serde_json::to_vec(record).map_err(io::Error::other)?;
        line.push(b'\n');
        let mut file = sink.lock().unwrap_or_else(|e| e.into_inner());
        file.write_all(&line)?;
        file.flush()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn appends_lines() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("fb.jsonl");
        let log = FeedbackLog::open(&path).unwrap();
        let rec = FeedbackRecord::now(None, "q", vec!["a".into(), "b".into()], "b");
        log.append(&rec).unwrap();
        log.append(&rec).unwrap();
        drop(log);
        // reopening appends rather than truncating
        FeedbackLog::open(&path).unwrap().append(&rec).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let lines: Vec<_> = text.lines().collect();
        assert_eq!(lines.len(), 3);
        let parsed: FeedbackRecord = serde_json::from_str(lines[0]).unwrap();
        assert_eq!(parsed, rec);
        assert!(!lines[0].contains("query_id"));
        assert!(chrono::DateTime::parse_from_rfc3339(&parsed.ts).is_ok());
    }
}
