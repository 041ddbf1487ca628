//! Append-only JSON-lines event log.
//!
//! Every event is flushed and synced before the caller is acknowledged.
//! On replay a final line without its newline is treated as a torn write,
//! dropped and truncated away; any other unreadable line is an error.

use serde::{Deserialize, Serialize};
use std::fs::{File, OpenOptions};
use std::io::{Read, Seek, SeekFrom, Write};
use std::path::{Path, PathBuf};

use super::{Scores, StudyError};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum LogEvent {
    Registered {
        rater_id: String,
        token: String,
        images: Vec<String>,
    },
    Rated {
        rater_id: String,
        image_id: String,
        scores: Scores,
    },
}

#[derive(Debug)]
pub struct EventLog {
    path: PathBuf,
    file: File,
}

impl EventLog {
    /// Opens or creates the log and returns it with all complete events.
    pub fn open(path: &Path) -> Result<(Self, Vec<LogEvent>), StudyError> {
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir)?;
        }
        let mut file = OpenOptions::new().read(true).append(true).create(true).open(path)?;
        let mut text = String::new();
        file.read_to_string(&mut text)?;

        let mut events = Vec::new();
        let mut consumed = 0usize;
        for (i, chunk) in text.split_inclusive('\n').enumerate() {
            if !chunk.ends_with('\n') {
                // Torn tail; discard.
                break;
            }
            consumed += chunk.len();
            let line = chunk.trim();
            if line.is_empty() {
                continue;
            }
            let event = serde_json::from_str(line).map_err(|e| StudyError::CorruptLog {
                line: i + 1,
                message: e.to_string(),
            })?;
            events.push(event);
        }
        if consumed < text.len() {
            file.set_len(consumed as u64)?;
            file.seek(SeekFrom::End(0))?;
            file.sync_all()?;
        }
        Ok((EventLog { path: path.to_path_buf(), file }, events))
    }

    pub fn append(&mut self, event: &LogEvent) -> Result<(), StudyError> {
        let mut line = serde_json::to_string(event).map_err(|e| StudyError::Io(std::io::Error::other(e)))?;
        line.push('\n');
        self.file.write_all(line.as_bytes())?;
        self.file.flush()?;
        self.file.sync_data()?;
        Ok(())
    }

    pub fn path(&self) -> &Path {
        &self.path
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rated(i: u8) -> LogEvent {
        LogEvent::Rated {
            rater_id: "r".into(),
            image_id: format!("img{i}"),
            scores: Scores { torticollis: i % 5, laterocollis: 0, antero_retrocollis: 1, lateral_shift: 1 },
        }
    }

    #[test]
    fn append_and_replay() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("sub/log.jsonl");
        {
            let (mut log, events) = EventLog::open(&path).unwrap();
            assert!(events.is_empty());
            for i in 0..3 {
                log.append(&rated(i)).unwrap();
            }
        }
        let (_, events) = EventLog::open(&path).unwrap();
        assert_eq!(events, vec![rated(0), rated(1), rated(2)]);
    }

    #[test]
    fn torn_tail_is_dropped_and_truncated() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("log.jsonl");
        {
            let (mut log, _) = EventLog::open(&path).unwrap();
            log.append(&rated(0)).unwrap();
        }
        let mut f = OpenOptions::new().append(true).open(&path).unwrap();
        f.write_all(b"{\"event\":\"rated\",\"rater_").unwrap();
        drop(f);
        let (mut log, events) = EventLog::open(&path).unwrap();
        assert_eq!(events, vec![rated(0)]);
        log.append(&rated(1)).unwrap();
        drop(log);
        let (_, events) = EventLog::open(&path).unwrap();
        assert_eq!(events, vec![rated(0), rated(1)]);
    }

    #[test]
    fn corrupt_middle_line_is_an_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("log.jsonl");
        std::fs::write(&path, "not json\n{}\n").unwrap();
        assert!(matches!(EventLog::open(&path), Err(StudyError::CorruptLog { line: 1, .. })));
    }
}
