//! Event-sourced persistence.
//!
//! The event log is the single source of truth. Card documents are written
//! alongside it as immutable per-version files; they can always be rebuilt by
//! replaying the log.

mod file;
mod memory;
mod record;

use std::path::Path;

use crate::card::{CardVersion, TrlCard};
use crate::error::StoreError;
use crate::gates::GateRegistry;
use crate::ids::TechId;
use crate::lifecycle::{DomainEvent, Portfolio};
use crate::policy::{LevelPolicy, PolicyOverlay};

pub use file::FileStore;
pub use memory::MemoryStore;
pub use record::{CardDocument, EventRecord};

pub const EVENTS_FILE: &str = "events.log";
pub const CARDS_DIR: &str = "cards";
pub const POLICY_FILE: &str = "trl-policy.json";

/// Append-only event log plus versioned card documents.
pub trait EventStore: Send {
    /// Appends `event` as record `expected_seq`. Fails with
    /// [`StoreError::SequenceConflict`] when another writer got there first.
    fn append(
        &mut self,
        expected_seq: u64,
        ts: chrono::DateTime<chrono::Utc>,
        event: &DomainEvent,
    ) -> Result<EventRecord, StoreError>;

    /// All records in seq order. Fails with [`StoreError::CorruptLog`] at the
    /// first record that cannot be read.
    fn records(&self) -> Result<Vec<EventRecord>, StoreError>;

    /// Seq of the last record, without parsing the whole log.
    fn head_seq(&self) -> Result<u64, StoreError> {
        Ok(self.records()?.last().map_or(0, |r| r.seq))
    }

    fn save_card_version(&mut self, tech: &TechId, version: &CardVersion) -> Result<(), StoreError>;

    fn load_card(&self, tech: &TechId) -> Result<TrlCard, StoreError>;
}

impl<T: EventStore + ?Sized> EventStore for Box<T> {
    fn append(
        &mut self,
        expected_seq: u64,
        ts: chrono::DateTime<chrono::Utc>,
        event: &DomainEvent,
    ) -> Result<EventRecord, StoreError> {
        (**self).append(expected_seq, ts, event)
    }

    fn records(&self) -> Result<Vec<EventRecord>, StoreError> {
        (**self).records()
    }

    fn head_seq(&self) -> Result<u64, StoreError> {
        (**self).head_seq()
    }

    fn save_card_version(&mut self, tech: &TechId, version: &CardVersion) -> Result<(), StoreError> {
        (**self).save_card_version(tech, version)
    }

    fn load_card(&self, tech: &TechId) -> Result<TrlCard, StoreError> {
        (**self).load_card(tech)
    }
}

/// Rebuilds the portfolio by running every record through the same
/// validation live commands use.
pub fn replay(
    records: &[EventRecord],
    policy: LevelPolicy,
    gates: &GateRegistry,
) -> Result<Portfolio, StoreError> {
    let mut state = Portfolio::new(policy);
    for record in records {
        state
            .apply_checked(record.seq, record.ts, &record.event, gates)
            .map_err(|e| StoreError::CorruptLog {
                seq: record.seq,
                detail: e.to_string(),
            })?;
    }
    Ok(state)
}

/// Reads `trl-policy.json` from a workspace root. A missing file yields the
/// built-in policy.
pub fn load_policy(root: &Path) -> Result<LevelPolicy, StoreError> {
    let path = root.join(POLICY_FILE);
    let text = match std::fs::read_to_string(&path) {
        Ok(text) => text,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(LevelPolicy::default()),
        Err(e) => return Err(StoreError::io(path, e)),
    };
    let overlay: PolicyOverlay =
        serde_json::from_str(&text).map_err(|e| StoreError::MalformedPolicy(e.to_string()))?;
    LevelPolicy::default().overlay(overlay)
}

/// Parses log text. Every record must be newline-terminated and numbered
/// 1, 2, 3, ...; the first violation is reported as [`StoreError::CorruptLog`].
pub(crate) fn parse_log(text: &str) -> Result<Vec<EventRecord>, StoreError> {
    let mut records = Vec::new();
    let mut rest = text;
    while !rest.is_empty() {
        let expected = records.len() as u64 + 1;
        let Some((line, tail)) = rest.split_once('\n') else {
            return Err(StoreError::CorruptLog {
                seq: expected,
                detail: "truncated record".into(),
            });
        };
        rest = tail;
        let record: EventRecord =
            serde_json::from_str(line).map_err(|e| StoreError::CorruptLog {
                seq: expected,
                detail: e.to_string(),
            })?;
        if record.seq != expected {
            return Err(StoreError::CorruptLog {
                seq: expected,
                detail: format!("found seq {}", record.seq),
            });
        }
        records.push(record);
    }
    Ok(records)
}
