//! Append-only event log, one JSON object per line, and its replay audit.

use std::collections::{HashSet, VecDeque};
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, LineWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use uuid::Uuid;

use crate::error::Result;
use crate::genome::Genome;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct LogRecord {
    pub seq: u64,
    pub timestamp: String,
    pub experiment_id: u64,
    #[serde(flatten)]
    pub event: LogEvent,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "kebab-case", rename_all_fields = "camelCase")]
pub enum LogEvent {
    Put {
        entry_id: u64,
        uuid: Uuid,
        genome: Genome,
        fitness: f64,
        generation: u64,
        evicted: Option<u64>,
    },
    Get {
        entry_id: Option<u64>,
    },
    Solved {
        entry_id: u64,
        uuid: Uuid,
        genome: Genome,
        fitness: f64,
        new_experiment_id: u64,
    },
    Reset {
        administrative: bool,
        new_experiment_id: u64,
    },
    ClientError {
        reason: String,
    },
}

/// Where log records go. File output is line-buffered so every record is on
/// disk once the call that produced it returns.
#[derive(Default)]
pub struct LogSink {
    file: Option<LineWriter<File>>,
    memory: Option<Vec<LogRecord>>,
}

impl LogSink {
    pub fn discard() -> Self {
        Self::default()
    }

    pub fn in_memory() -> Self {
        LogSink { file: None, memory: Some(Vec::new()) }
    }

    pub fn to_file(path: &Path) -> Result<Self> {
        let file = OpenOptions::new().create(true).append(true).open(path)?;
        Ok(LogSink { file: Some(LineWriter::new(file)), memory: None })
    }

    pub fn with_memory(mut self) -> Self {
        self.memory.get_or_insert_with(Vec::new);
        self
    }

    pub(crate) fn append(&mut self, record: LogRecord) {
        if let Some(file) = self.file.as_mut() {
            let line = serde_json::to_string(&record).expect("log records serialize");
            if let Err(e) = writeln!(file, "{line}") {
                tracing::error!(error = %e, "failed to write log record");
            }
        }
        if let Some(memory) = self.memory.as_mut() {
            memory.push(record);
        }
    }

    pub(crate) fn records(&self) -> Option<&[LogRecord]> {
        self.memory.as_deref()
    }
}

pub fn read_log(path: &Path) -> Result<Vec<LogRecord>> {
    let reader = BufReader::new(File::open(path)?);
    let mut out = Vec::new();
    for line in reader.lines() {
        let line = line?;
        if !line.trim().is_empty() {
            out.push(serde_json::from_str(&line)?);
        }
    }
    Ok(out)
}

/// State reconstructed from a log.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ReplaySummary {
    pub experiment_id: u64,
    pub pool: Vec<u64>,
    pub puts: u64,
    pub gets: u64,
    pub solutions: u64,
    pub resets: u64,
    pub rejected: u64,
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
#[error("log record {seq}: {reason}")]
pub struct ReplayError {
    pub seq: u64,
    pub reason: String,
}

/// Replays a log from server start, checking that each record is a legal
/// serial step: sequence numbers are contiguous, puts and solutions belong to
/// the current experiment, evictions are oldest-first within `capacity`, and
/// every served entry is in the pool at that point.
pub fn replay(records: &[LogRecord], capacity: usize) -> Result<ReplaySummary, ReplayError> {
    let mut s = ReplaySummary { experiment_id: 1, ..Default::default() };
    let mut pool: VecDeque<u64> = VecDeque::new();
    let mut seen: HashSet<u64> = HashSet::new();

    for (i, rec) in records.iter().enumerate() {
        let fail = |reason: String| Err(ReplayError { seq: rec.seq, reason });
        if rec.seq != i as u64 + 1 {
            return fail(format!("expected sequence number {}", i + 1));
        }
        if !matches!(rec.event, LogEvent::ClientError { .. }) && rec.experiment_id != s.experiment_id {
            return fail(format!("belongs to experiment {}, current is {}", rec.experiment_id, s.experiment_id));
        }
        match &rec.event {
            LogEvent::Put { entry_id, evicted, .. } => {
                if !seen.insert(*entry_id) {
                    return fail(format!("entry {entry_id} stored twice"));
                }
                let expected_eviction = if pool.len() == capacity { pool.pop_front() } else { None };
                if expected_eviction != *evicted {
                    return fail(format!("evicted {evicted:?}, expected {expected_eviction:?}"));
                }
                pool.push_back(*entry_id);
                s.puts += 1;
            }
            LogEvent::Get { entry_id } => {
                match entry_id {
                    Some(id) if !pool.contains(id) => return fail(format!("served entry {id} not in the pool")),
                    None if !pool.is_empty() => return fail("reported an empty pool that was not empty".into()),
                    _ => {}
                }
                s.gets += 1;
            }
            LogEvent::Solved { entry_id, new_experiment_id, .. } => {
                if pool.back() != Some(entry_id) {
                    return fail(format!("solution entry {entry_id} was not the latest put"));
                }
                if *new_experiment_id != s.experiment_id + 1 {
                    return fail("experiment counter did not advance by one".into());
                }
                pool.clear();
                s.experiment_id += 1;
                s.solutions += 1;
            }
            LogEvent::Reset { new_experiment_id, .. } => {
                if *new_experiment_id != s.experiment_id + 1 {
                    return fail("experiment counter did not advance by one".into());
                }
                pool.clear();
                s.experiment_id += 1;
                s.resets += 1;
            }
            LogEvent::ClientError { .. } => s.rejected += 1,
        }
    }
    s.pool = pool.into_iter().collect();
    Ok(s)
}
