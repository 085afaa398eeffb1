use std::fs::{self, File, OpenOptions};
use std::io::{Read, Seek, SeekFrom, Write};
use std::path::{Path, PathBuf};

use chrono::{DateTime, Utc};

use super::{parse_log, CardDocument, EventRecord, EventStore, CARDS_DIR, EVENTS_FILE};
use crate::card::{CardVersion, TrlCard};
use crate::error::StoreError;
use crate::ids::TechId;
use crate::lifecycle::DomainEvent;

/// Workspace directory store: `events.log` plus `cards/<tech>/card-v<N>.json`.
#[derive(Debug)]
pub struct FileStore {
    root: PathBuf,
}

impl FileStore {
    /// Opens an existing workspace.
    pub fn open(root: impl Into<PathBuf>) -> Result<Self, StoreError> {
        let root = root.into();
        if !root.join(EVENTS_FILE).is_file() {
            return Err(StoreError::WorkspaceNotFound(root));
        }
        Ok(FileStore { root })
    }

    /// Creates the directory layout with an empty log.
    pub fn create(root: impl Into<PathBuf>) -> Result<Self, StoreError> {
        let root = root.into();
        let log = root.join(EVENTS_FILE);
        if log.exists() {
            return Err(StoreError::WorkspaceExists(root));
        }
        fs::create_dir_all(root.join(CARDS_DIR)).map_err(|e| StoreError::io(&root, e))?;
        File::create(&log).map_err(|e| StoreError::io(&log, e))?;
        Ok(FileStore { root })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    fn log_path(&self) -> PathBuf {
        self.root.join(EVENTS_FILE)
    }

    fn card_dir(&self, tech: &TechId) -> PathBuf {
        self.root.join(CARDS_DIR).join(tech.as_str())
    }

    /// Version numbers present on disk for a technology, ascending.
    fn stored_versions(&self, tech: &TechId) -> Result<Vec<u32>, StoreError> {
        let dir = self.card_dir(tech);
        let entries = match fs::read_dir(&dir) {
            Ok(entries) => entries,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(Vec::new()),
            Err(e) => return Err(StoreError::io(dir, e)),
        };
        let mut versions = Vec::new();
        for entry in entries {
            let entry = entry.map_err(|e| StoreError::io(&dir, e))?;
            let name = entry.file_name();
            let Some(n) = name
                .to_str()
                .and_then(|n| n.strip_prefix("card-v"))
                .and_then(|n| n.strip_suffix(".json"))
                .and_then(|n| n.parse::<u32>().ok())
            else {
                continue;
            };
            versions.push(n);
        }
        versions.sort_unstable();
        Ok(versions)
    }

    fn card_path(&self, tech: &TechId, version_no: u32) -> PathBuf {
        self.card_dir(tech).join(format!("card-v{version_no}.json"))
    }
}

/// Seq of the last complete record in the log text.
fn last_seq(text: &str) -> u64 {
    text.lines()
        .rev()
        .find(|l| !l.trim().is_empty())
        .and_then(|l| serde_json::from_str::<serde_json::Value>(l).ok())
        .and_then(|v| v.get("seq").and_then(|s| s.as_u64()))
        .unwrap_or(0)
}

impl EventStore for FileStore {
    fn append(
        &mut self,
        expected_seq: u64,
        ts: DateTime<Utc>,
        event: &DomainEvent,
    ) -> Result<EventRecord, StoreError> {
        let path = self.log_path();
        let io = |e| StoreError::io(&path, e);
        let mut file = OpenOptions::new().read(true).append(true).open(&path).map_err(io)?;
        // advisory lock, released when `file` drops
        file.lock().map_err(io)?;
        let mut text = String::new();
        file.seek(SeekFrom::Start(0)).map_err(io)?;
        file.read_to_string(&mut text).map_err(io)?;
        let actual = last_seq(&text);
        if expected_seq != actual + 1 {
            return Err(StoreError::SequenceConflict {
                expected: expected_seq,
                actual,
            });
        }
        let record = EventRecord {
            seq: expected_seq,
            ts,
            event: event.clone(),
        };
        let mut line = record
            .to_line()
            .map_err(|e| StoreError::Serialization(e.to_string()))?;
        line.push('\n');
        file.write_all(line.as_bytes()).map_err(io)?;
        file.sync_data().map_err(io)?;
        Ok(record)
    }

    fn records(&self) -> Result<Vec<EventRecord>, StoreError> {
        let path = self.log_path();
        let text = fs::read_to_string(&path).map_err(|e| StoreError::io(&path, e))?;
        parse_log(&text)
    }

    fn head_seq(&self) -> Result<u64, StoreError> {
        let path = self.log_path();
        let text = fs::read_to_string(&path).map_err(|e| StoreError::io(&path, e))?;
        Ok(last_seq(&text))
    }

    fn save_card_version(&mut self, tech: &TechId, version: &CardVersion) -> Result<(), StoreError> {
        let existing = self.stored_versions(tech)?;
        let expected = existing.last().map_or(1, |n| n + 1);
        if version.version_no != expected {
            return Err(StoreError::VersionGap {
                tech: tech.clone(),
                expected,
                got: version.version_no,
            });
        }
        let dir = self.card_dir(tech);
        fs::create_dir_all(&dir).map_err(|e| StoreError::io(&dir, e))?;
        let path = self.card_path(tech, version.version_no);
        let json = serde_json::to_string_pretty(&CardDocument::new(tech.clone(), version))
            .map_err(|e| StoreError::Serialization(e.to_string()))?;
        let mut file = OpenOptions::new()
            .write(true)
            .create_new(true)
            .open(&path)
            .map_err(|e| StoreError::io(&path, e))?;
        file.write_all(json.as_bytes())
            .and_then(|_| file.write_all(b"\n"))
            .map_err(|e| StoreError::io(&path, e))?;
        Ok(())
    }

    fn load_card(&self, tech: &TechId) -> Result<TrlCard, StoreError> {
        let versions = self.stored_versions(tech)?;
        if versions.is_empty() {
            return Err(StoreError::CardNotFound(tech.clone()));
        }
        let mut card = TrlCard {
            tech_id: tech.clone(),
            versions: Vec::with_capacity(versions.len()),
        };
        for (i, n) in versions.into_iter().enumerate() {
            if n as usize != i + 1 {
                return Err(StoreError::VersionGap {
                    tech: tech.clone(),
                    expected: i as u32 + 1,
                    got: n,
                });
            }
            let path = self.card_path(tech, n);
            let text = fs::read_to_string(&path).map_err(|e| StoreError::io(&path, e))?;
            let doc: CardDocument = serde_json::from_str(&text)
                .map_err(|e| StoreError::Serialization(format!("{}: {e}", path.display())))?;
            card.versions.push(doc.into_version());
        }
        Ok(card)
    }
}
