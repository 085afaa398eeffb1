//! On-disk workspaces: `events.log`, `cards/` and `trl-policy.json` under one
//! directory.

use std::fs;
use std::path::Path;

use crate::engine::Engine;
use crate::error::{Result, StoreError};
use crate::policy::LevelPolicy;
use crate::store::{load_policy, EventStore, FileStore, POLICY_FILE};

/// Creates a workspace and writes the full default policy next to the log,
/// so later edits to built-in defaults do not change how this log replays.
pub fn init(root: &Path, demo: bool) -> Result<Engine<FileStore>> {
    let store = FileStore::create(root)?;
    let policy = LevelPolicy::default();
    let path = root.join(POLICY_FILE);
    let json = serde_json::to_string_pretty(&policy.to_overlay())
        .map_err(|e| StoreError::Serialization(e.to_string()))?;
    fs::write(&path, json + "\n").map_err(|e| StoreError::io(&path, e))?;
    let mut engine = Engine::open(store, policy)?;
    if demo {
        crate::demo::seed(&mut engine)?;
    }
    Ok(engine)
}

/// Opens an existing workspace, replays its log and rewrites any card
/// documents that are missing because a previous process stopped between
/// appending an event and writing the document.
pub fn open(root: &Path) -> Result<Engine<FileStore>> {
    let policy = load_policy(root)?;
    let store = FileStore::open(root)?;
    let mut engine = Engine::open(store, policy)?;
    repair_cards(&mut engine)?;
    Ok(engine)
}

fn repair_cards<S: EventStore>(engine: &mut Engine<S>) -> Result<()> {
    let cards: Vec<_> = engine.state().cards.values().cloned().collect();
    for card in cards {
        let stored = match engine.store().load_card(&card.tech_id) {
            Ok(existing) => existing.versions.len(),
            Err(StoreError::CardNotFound(_)) => 0,
            Err(e) => return Err(e.into()),
        };
        for version in card.versions.iter().skip(stored) {
            engine.store_mut().save_card_version(&card.tech_id, version)?;
        }
    }
    Ok(())
}
