use std::collections::BTreeMap;
use std::sync::{Arc, Mutex};

use chrono::{DateTime, Utc};

use super::{parse_log, EventRecord, EventStore};
use crate::card::{CardVersion, TrlCard};
use crate::error::StoreError;
use crate::ids::TechId;
use crate::lifecycle::DomainEvent;

#[derive(Debug, Default)]
struct Inner {
    log: String,
    last_seq: u64,
    cards: BTreeMap<TechId, Vec<CardVersion>>,
}

/// In-memory store holding the same newline-delimited JSON the file store
/// writes. Clones share the same log, which lets tests stage competing
/// writers.
#[derive(Debug, Clone, Default)]
pub struct MemoryStore {
    inner: Arc<Mutex<Inner>>,
}

impl MemoryStore {
    pub fn new() -> Self {
        Self::default()
    }

    /// Starts from existing log text, e.g. a copy with injected damage.
    pub fn from_log(text: impl Into<String>) -> Self {
        let store = MemoryStore::new();
        {
            let mut inner = store.inner.lock().expect("poisoned");
            inner.log = text.into();
            inner.last_seq = inner.log.lines().count() as u64;
        }
        store
    }

    pub fn log_text(&self) -> String {
        self.inner.lock().expect("poisoned").log.clone()
    }
}

impl EventStore for MemoryStore {
    fn append(
        &mut self,
        expected_seq: u64,
        ts: DateTime<Utc>,
        event: &DomainEvent,
    ) -> Result<EventRecord, StoreError> {
        let mut inner = self.inner.lock().expect("poisoned");
        if expected_seq != inner.last_seq + 1 {
            return Err(StoreError::SequenceConflict {
                expected: expected_seq,
                actual: inner.last_seq,
            });
        }
        let record = EventRecord {
            seq: expected_seq,
            ts,
            event: event.clone(),
        };
        let line = record
            .to_line()
            .map_err(|e| StoreError::Serialization(e.to_string()))?;
        inner.log.push_str(&line);
        inner.log.push('\n');
        inner.last_seq = expected_seq;
        Ok(record)
    }

    fn records(&self) -> Result<Vec<EventRecord>, StoreError> {
        parse_log(&self.inner.lock().expect("poisoned").log)
    }

    fn head_seq(&self) -> Result<u64, StoreError> {
        Ok(self.inner.lock().expect("poisoned").last_seq)
    }

    fn save_card_version(&mut self, tech: &TechId, version: &CardVersion) -> Result<(), StoreError> {
        let mut inner = self.inner.lock().expect("poisoned");
        let versions = inner.cards.entry(tech.clone()).or_default();
        let expected = versions.len() as u32 + 1;
        if version.version_no != expected {
            return Err(StoreError::VersionGap {
                tech: tech.clone(),
                expected,
                got: version.version_no,
            });
        }
        versions.push(version.clone());
        Ok(())
    }

    fn load_card(&self, tech: &TechId) -> Result<TrlCard, StoreError> {
        let inner = self.inner.lock().expect("poisoned");
        match inner.cards.get(tech) {
            Some(versions) if !versions.is_empty() => Ok(TrlCard {
                tech_id: tech.clone(),
                versions: versions.clone(),
            }),
            _ => Err(StoreError::CardNotFound(tech.clone())),
        }
    }
}
