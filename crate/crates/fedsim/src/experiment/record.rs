//! Experiment records: JSON Lines files, one header line, then one line per
//! logged entry, then a terminal status line. Streamable, appendable,
//! diffable.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const RECORD_SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RecordHeader {
    pub schema_version: u32,
    pub artifact_version: String,
    /// Full resolved runner config; sufficient to re-run exactly.
    pub config: serde_json::Value,
    pub task_sha256: String,
    /// Wall-clock start, filled only when FEDSIM_WALLCLOCK=1: records are
    /// byte-reproducible by default.
    pub started_at: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RecordEntry {
    pub round: u64,
    pub virtual_time: u64,
    /// Metric values; `None` marks a non-finite measurement.
    pub metrics: BTreeMap<String, Option<f64>>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RecordStatus {
    Completed,
    Diverged,
    Aborted,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
struct StatusLine {
    status: RecordStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    error: Option<String>,
}

/// One runner's persisted time series of metrics.
#[derive(Clone, Debug, PartialEq)]
pub struct Record {
    pub header: RecordHeader,
    pub entries: Vec<RecordEntry>,
    pub status: RecordStatus,
    pub error: Option<String>,
}

impl Record {
    pub fn final_entry(&self) -> Option<&RecordEntry> {
        self.entries.last()
    }

    pub fn to_jsonl(&self) -> Result<String> {
        let mut out = serde_json::to_string(&self.header)?;
        out.push('\n');
        for entry in &self.entries {
            out.push_str(&serde_json::to_string(entry)?);
            out.push('\n');
        }
        let status = StatusLine { status: self.status, error: self.error.clone() };
        out.push_str(&serde_json::to_string(&status)?);
        out.push('\n');
        Ok(out)
    }

    pub fn from_jsonl(text: &str) -> Result<Record> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header_line =
            lines.next().ok_or_else(|| Error::EmptyInput("record file is empty".into()))?;
        let header: RecordHeader = serde_json::from_str(header_line)?;
        let mut entries = Vec::new();
        let mut status = None;
        for line in lines {
            if let Ok(s) = serde_json::from_str::<StatusLine>(line) {
                status = Some(s);
                continue;
            }
            entries.push(serde_json::from_str::<RecordEntry>(line)?);
        }
        let status = status
            .ok_or_else(|| Error::TaskLoad("record has no terminal status line".into()))?;
        Ok(Record { header, entries, status: status.status, error: status.error })
    }

    pub fn load(path: &Path) -> Result<Record> {
        Record::from_jsonl(&fs::read_to_string(path)?)
    }

    /// Atomic write: temp file in the same directory, then rename. Safe when
    /// identical runners race toward the same path.
    pub fn write(&self, path: &Path) -> Result<()> {
        let dir = path.parent().unwrap_or_else(|| Path::new("."));
        fs::create_dir_all(dir)?;
        let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
        tmp.write_all(self.to_jsonl()?.as_bytes())?;
        tmp.persist(path).map_err(|e| Error::Io(e.error))?;
        Ok(())
    }
}

/// Accumulates log entries for an open record, enforcing time ordering.
#[derive(Clone, Debug)]
pub struct RecordBuilder {
    header: RecordHeader,
    entries: Vec<RecordEntry>,
    diverged: bool,
    error: Option<String>,
}

impl RecordBuilder {
    pub fn new(config: serde_json::Value, task_sha256: String) -> Self {
        let started_at = if std::env::var("FEDSIM_WALLCLOCK").as_deref() == Ok("1") {
            Some(format!(
                "{}",
                std::time::SystemTime::now()
                    .duration_since(std::time::UNIX_EPOCH)
                    .map(|d| d.as_secs())
                    .unwrap_or(0)
            ))
        } else {
            None
        };
        Self {
            header: RecordHeader {
                schema_version: RECORD_SCHEMA_VERSION,
                artifact_version: env!("CARGO_PKG_VERSION").to_string(),
                config,
                task_sha256,
                started_at,
            },
            entries: Vec::new(),
            diverged: false,
            error: None,
        }
    }

    /// Appends or merges a metric at `(round, virtual_time)`.
    ///
    /// Non-finite values are stored as null and flag the record as diverged.
    pub fn log_metric(
        &mut self,
        round: u64,
        virtual_time: u64,
        name: &str,
        value: f64,
    ) -> Result<()> {
        let stored = if value.is_finite() {
            Some(value)
        } else {
            self.diverged = true;
            None
        };
        if let Some(last) = self.entries.last_mut() {
            if last.round == round && last.virtual_time == virtual_time {
                last.metrics.insert(name.to_string(), stored);
                return Ok(());
            }
            if round < last.round || virtual_time <= last.virtual_time {
                return Err(Error::RecordOrder(format!(
                    "entry ({round}, t={virtual_time}) after ({}, t={})",
                    last.round, last.virtual_time
                )));
            }
        }
        let mut metrics = BTreeMap::new();
        metrics.insert(name.to_string(), stored);
        self.entries.push(RecordEntry { round, virtual_time, metrics });
        Ok(())
    }

    pub fn mark_diverged(&mut self, msg: impl Into<String>) {
        self.diverged = true;
        self.error = Some(msg.into());
    }

    pub fn is_diverged(&self) -> bool {
        self.diverged
    }

    pub fn last_logged(&self) -> Option<(u64, u64)> {
        self.entries.last().map(|e| (e.round, e.virtual_time))
    }

    pub fn finish(self, status: RecordStatus) -> Record {
        let status = if self.diverged { RecordStatus::Diverged } else { status };
        Record { header: self.header, entries: self.entries, status, error: self.error }
    }

    pub fn abort(self, error: impl Into<String>) -> Record {
        Record {
            header: self.header,
            entries: self.entries,
            status: RecordStatus::Aborted,
            error: Some(error.into()),
        }
    }
}
