//! Line-oriented audit records: `key = value`, one per line, with a JSON mirror.

use std::fmt;

use serde::Serialize;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
    /// Measured quantity or ratio; never fails a report.
    Info,
}

#[derive(Clone, Debug, Serialize)]
pub struct Entry {
    pub key: String,
    pub value: String,
    pub status: Status,
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct AuditReport {
    pub title: String,
    pub entries: Vec<Entry>,
}

impl AuditReport {
    pub fn new(title: impl Into<String>) -> AuditReport {
        AuditReport {
            title: title.into(),
            entries: Vec::new(),
        }
    }

    pub fn info(&mut self, key: impl Into<String>, value: impl fmt::Display) -> &mut Self {
        self.entries.push(Entry {
            key: key.into(),
            value: value.to_string(),
            status: Status::Info,
        });
        self
    }

    /// Hard check. The value column holds `PASS`/`FAIL`; put measurements in
    /// neighbouring `info` lines.
    pub fn check(&mut self, key: impl Into<String>, ok: bool) -> &mut Self {
        self.entries.push(Entry {
            key: key.into(),
            value: if ok { "PASS" } else { "FAIL" }.to_string(),
            status: if ok { Status::Pass } else { Status::Fail },
        });
        self
    }

    /// Appends another report's entries under `prefix.`.
    pub fn extend_prefixed(&mut self, prefix: &str, other: &AuditReport) -> &mut Self {
        for e in &other.entries {
            self.entries.push(Entry {
                key: format!("{prefix}.{}", e.key),
                ..e.clone()
            });
        }
        self
    }

    pub fn passed(&self) -> bool {
        self.entries.iter().all(|e| e.status != Status::Fail)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Entry> {
        self.entries.iter().filter(|e| e.status == Status::Fail)
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries
            .iter()
            .find(|e| e.key == key)
            .map(|e| e.value.as_str())
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "title": self.title,
            "passed": self.passed(),
            "entries": self.entries,
        })
    }
}

impl fmt::Display for AuditReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if !self.title.is_empty() {
            writeln!(f, "# {}", self.title)?;
        }
        for e in &self.entries {
            writeln!(f, "{} = {}", e.key, e.value)?;
        }
        Ok(())
    }
}
