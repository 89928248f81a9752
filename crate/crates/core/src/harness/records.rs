//! Append-only JSONL experiment records.

use std::collections::BTreeMap;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Read, Seek, SeekFrom, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::imbalance::MethodId;
use crate::metrics::EvalScores;
use crate::{Error, Result};

pub const RECORD_VERSION: u32 = 1;

/// Identity of one training job.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct JobKey {
    pub dataset: String,
    pub method: MethodId,
    pub fold: usize,
    pub repetition: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentRecord {
    pub v: u32,
    pub dataset: String,
    pub method: MethodId,
    pub fold: usize,
    pub repetition: usize,
    pub seed: u64,
    pub depth: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scores: Option<EvalScores>,
    pub epochs_run: usize,
    pub wall_time_s: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl ExperimentRecord {
    pub fn key(&self) -> JobKey {
        JobKey {
            dataset: self.dataset.clone(),
            method: self.method,
            fold: self.fold,
            repetition: self.repetition,
        }
    }

    pub fn is_ok(&self) -> bool {
        self.error.is_none() && self.scores.is_some()
    }
}

/// Reads every parseable record. Lines that fail to parse (a torn final
/// line after a crash, for instance) are skipped with a warning.
pub fn read_records(path: &Path) -> Result<Vec<ExperimentRecord>> {
    let file = match File::open(path) {
        Ok(f) => f,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(Vec::new()),
        Err(e) => return Err(Error::io(path, e)),
    };
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str::<ExperimentRecord>(&line) {
            Ok(r) if r.v == RECORD_VERSION => out.push(r),
            Ok(r) => log::warn!("{}:{}: skipping record with schema version {}", path.display(), i + 1, r.v),
            Err(e) => log::warn!("{}:{}: skipping unparseable record: {e}", path.display(), i + 1),
        }
    }
    Ok(out)
}

/// Keeps the last record written for each job key, in key order.
pub fn latest_by_key(records: Vec<ExperimentRecord>) -> Vec<ExperimentRecord> {
    let mut map = BTreeMap::new();
    for r in records {
        map.insert(r.key(), r);
    }
    map.into_values().collect()
}

/// Durable appender: each record is written as one line and synced.
pub struct RecordSink {
    path: PathBuf,
    file: File,
}

impl RecordSink {
    /// Opens `path` for appending, first truncating any partial final line.
    pub fn open(path: &Path) -> Result<Self> {
        let mut file = OpenOptions::new()
            .read(true)
            .append(true)
            .create(true)
            .open(path)
            .map_err(|e| Error::io(path, e))?;
        let len = file.metadata().map_err(|e| Error::io(path, e))?.len();
        if len > 0 {
            let mut contents = Vec::with_capacity(len as usize);
            file.seek(SeekFrom::Start(0)).map_err(|e| Error::io(path, e))?;
            file.read_to_end(&mut contents).map_err(|e| Error::io(path, e))?;
            if contents.last() != Some(&b'\n') {
                let keep = contents.iter().rposition(|&b| b == b'\n').map_or(0, |p| p + 1);
                log::warn!("{}: dropping {} bytes of a partial record", path.display(), contents.len() - keep);
                file.set_len(keep as u64).map_err(|e| Error::io(path, e))?;
            }
        }
        Ok(RecordSink {
            path: path.to_path_buf(),
            file,
        })
    }

    pub fn append(&mut self, record: &ExperimentRecord) -> Result<()> {
        let mut line = serde_json::to_string(record)?;
        line.push('\n');
        self.file.write_all(line.as_bytes()).map_err(|e| Error::io(&self.path, e))?;
        self.file.sync_data().map_err(|e| Error::io(&self.path, e))?;
        Ok(())
    }

    pub fn path(&self) -> &Path {
        &self.path
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(fold: usize, f1: f64) -> ExperimentRecord {
        ExperimentRecord {
            v: RECORD_VERSION,
            dataset: "d".into(),
            method: MethodId::Gdro,
            fold,
            repetition: 0,
            seed: 42,
            depth: 2,
            scores: Some(EvalScores {
                f1,
                g_mean: 0.1 + 0.2,
                pr_auc: 1.0 / 3.0,
                roc_auc: 0.75,
                precision: 0.5,
                recall: 1e-17,
            }),
            epochs_run: 12,
            wall_time_s: 0.25,
            error: None,
        }
    }

    #[test]
    fn append_and_read_back_bit_identical() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("r.jsonl");
        let mut sink = RecordSink::open(&path).unwrap();
        let a = record(0, 0.123_456_789_012_345_68);
        let b = record(1, std::f64::consts::PI / 7.0);
        sink.append(&a).unwrap();
        sink.append(&b).unwrap();
        assert_eq!(read_records(&path).unwrap(), vec![a.clone(), b]);
        let line = std::fs::read_to_string(&path).unwrap();
        assert!(line.starts_with(r#"{"v":1,"#));
    }

    #[test]
    fn torn_tail_is_repaired_on_open() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("r.jsonl");
        let a = record(0, 0.5);
        let mut text = serde_json::to_string(&a).unwrap();
        text.push('\n');
        text.push_str(r#"{"v":1,"dataset":"d","meth"#);
        std::fs::write(&path, &text).unwrap();
        assert_eq!(read_records(&path).unwrap(), vec![a.clone()]);
        let mut sink = RecordSink::open(&path).unwrap();
        let b = record(1, 0.7);
        sink.append(&b).unwrap();
        assert_eq!(read_records(&path).unwrap(), vec![a, b]);
    }

    #[test]
    fn latest_record_wins() {
        let mut failed = record(3, 0.0);
        failed.scores = None;
        failed.error = Some("boom".into());
        let ok = record(3, 0.9);
        let out = latest_by_key(vec![failed, ok.clone()]);
        assert_eq!(out, vec![ok]);
    }

    #[test]
    fn missing_file_reads_empty() {
        assert!(read_records(Path::new("/nonexistent/records.jsonl")).unwrap().is_empty());
    }
}
