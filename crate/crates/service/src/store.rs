//! JSON-lines persistence: one append-only event log per trial plus a log of
//! idempotency keys.

use std::collections::HashMap;
use std::fs::{self, File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use aaa_core::decision::{TrialEvent, SCHEMA_VERSION};

use crate::ApiError;

/// One line of an event log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct LogLine {
    pub schema_version: u32,
    #[serde(flatten)]
    pub event: TrialEvent,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct KeyLine {
    key: String,
    id: String,
}

/// Parses an event log. Blank lines are skipped.
pub fn parse_log(text: &str) -> Result<Vec<TrialEvent>, ApiError> {
    let mut events = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let l: LogLine =
            serde_json::from_str(line).map_err(|e| ApiError::Corrupt(format!("line {}: {e}", i + 1)))?;
        if l.schema_version != SCHEMA_VERSION {
            return Err(ApiError::Corrupt(format!(
                "line {}: schema version {} (expected {SCHEMA_VERSION})",
                i + 1,
                l.schema_version
            )));
        }
        events.push(l.event);
    }
    Ok(events)
}

pub fn render_log(events: &[TrialEvent]) -> String {
    let mut out = String::new();
    for e in events {
        let line = LogLine {
            schema_version: SCHEMA_VERSION,
            event: e.clone(),
        };
        out.push_str(&serde_json::to_string(&line).expect("events serialize"));
        out.push('\n');
    }
    out
}

/// Directory of `<id>.jsonl` trial logs.
#[derive(Debug, Clone)]
pub struct Store {
    dir: PathBuf,
}

impl Store {
    pub fn open(dir: impl Into<PathBuf>) -> Result<Self, ApiError> {
        let dir = dir.into();
        fs::create_dir_all(&dir)?;
        Ok(Self { dir })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    fn trial_path(&self, id: &str) -> PathBuf {
        self.dir.join(format!("{id}.jsonl"))
    }

    fn keys_path(&self) -> PathBuf {
        self.dir.join("idempotency-keys.jsonl")
    }

    /// Appends `events` to the trial's log and syncs it.
    pub fn append(&self, id: &str, events: &[TrialEvent]) -> Result<(), ApiError> {
        let mut f = OpenOptions::new().create(true).append(true).open(self.trial_path(id))?;
        f.write_all(render_log(events).as_bytes())?;
        f.sync_data()?;
        Ok(())
    }

    pub fn record_key(&self, key: &str, id: &str) -> Result<(), ApiError> {
        let mut f = OpenOptions::new().create(true).append(true).open(self.keys_path())?;
        let line = serde_json::to_string(&KeyLine {
            key: key.into(),
            id: id.into(),
        })
        .expect("keys serialize");
        writeln!(f, "{line}")?;
        f.sync_data()?;
        Ok(())
    }

    /// Every stored trial log, keyed by trial id.
    pub fn load_trials(&self) -> Result<Vec<(String, Vec<TrialEvent>)>, ApiError> {
        let mut out = Vec::new();
        for entry in fs::read_dir(&self.dir)? {
            let path = entry?.path();
            let Some(id) = path.file_name().and_then(|n| n.to_str()).and_then(|n| n.strip_suffix(".jsonl")) else {
                continue;
            };
            if path == self.keys_path() {
                continue;
            }
            let events = parse_log(&fs::read_to_string(&path)?).map_err(|e| ApiError::Corrupt(format!("{id}: {e}")))?;
            out.push((id.to_string(), events));
        }
        out.sort_by(|a, b| a.0.cmp(&b.0));
        Ok(out)
    }

    pub fn load_keys(&self) -> Result<HashMap<String, String>, ApiError> {
        let path = self.keys_path();
        if !path.exists() {
            return Ok(HashMap::new());
        }
        let mut keys = HashMap::new();
        for line in BufReader::new(File::open(path)?).lines() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let k: KeyLine = serde_json::from_str(&line).map_err(|e| ApiError::Corrupt(e.to_string()))?;
            keys.insert(k.key, k.id);
        }
        Ok(keys)
    }
}
