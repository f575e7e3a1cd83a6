//! Append-only newline-delimited JSON log.
//!
//! Each line is one [`LogEvent`]. Every append is flushed to disk before it
//! is acknowledged. On open, a torn final line (no terminating newline) from
//! an interrupted write is discarded and the file truncated back to the last
//! complete event.

use std::fs::{File, OpenOptions};
use std::io::{Read, Seek, SeekFrom, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::ExpError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum LogEvent {
    Session {
        id: u64,
        observer: String,
        session: u8,
        seed: u64,
        order: Vec<String>,
    },
    Rating {
        session_id: u64,
        trial: usize,
        stimulus_id: String,
        metal: f64,
        shiny_black: f64,
        shiny_white: f64,
        other: f64,
    },
}

#[derive(Debug)]
pub struct EventLog {
    path: PathBuf,
    file: File,
}

impl EventLog {
    /// Open (creating if needed) and return the log with its replayed events.
    pub fn open(path: impl AsRef<Path>) -> Result<(Self, Vec<LogEvent>), ExpError> {
        let path = path.as_ref().to_path_buf();
        let mut file = OpenOptions::new().read(true).append(true).create(true).open(&path)?;
        let mut bytes = Vec::new();
        file.read_to_end(&mut bytes)?;

        let complete = bytes.iter().rposition(|b| *b == b'\n').map_or(0, |i| i + 1);
        if complete < bytes.len() {
            file.set_len(complete as u64)?;
            file.seek(SeekFrom::End(0))?;
        }
        let events = parse_events(&bytes[..complete])?;
        Ok((Self { path, file }, events))
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn append(&mut self, event: &LogEvent) -> Result<(), ExpError> {
        let mut line = serde_json::to_vec(event).map_err(|e| ExpError::Log(e.to_string()))?;
        line.push(b'\n');
        self.file.write_all(&line)?;
        self.file.sync_data()?;
        Ok(())
    }
}

/// Parse complete log lines; blank lines are skipped.
pub fn parse_events(bytes: &[u8]) -> Result<Vec<LogEvent>, ExpError> {
    bytes
        .split(|b| *b == b'\n')
        .enumerate()
        .filter(|(_, l)| !l.iter().all(u8::is_ascii_whitespace))
        .map(|(i, l)| {
            serde_json::from_slice(l).map_err(|e| ExpError::Log(format!("line {}: {e}", i + 1)))
        })
        .collect()
}
