use std::collections::BTreeMap;

use chrono::{DateTime, SecondsFormat, Utc};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::card::{CardChange, CardVersion, DeliverableRecord, ImplicitKnowledge, ProjectInfo};
use crate::ids::TechId;
use crate::level::TrlLevel;
use crate::lifecycle::DomainEvent;

/// One line of `events.log`:
/// `{"seq":1,"ts":"2024-01-01T00:00:00Z","kind":"...","payload":{...}}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventRecord {
    pub seq: u64,
    #[serde(serialize_with = "ser_ts", deserialize_with = "de_ts")]
    pub ts: DateTime<Utc>,
    #[serde(flatten)]
    pub event: DomainEvent,
}

impl EventRecord {
    pub fn to_line(&self) -> Result<String, serde_json::Error> {
        serde_json::to_string(self)
    }
}

/// Timestamps are stored as RFC 3339 UTC with whole seconds.
pub fn format_ts(ts: &DateTime<Utc>) -> String {
    ts.to_rfc3339_opts(SecondsFormat::Secs, true)
}

fn ser_ts<S: Serializer>(ts: &DateTime<Utc>, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(&format_ts(ts))
}

fn de_ts<'de, D: Deserializer<'de>>(d: D) -> Result<DateTime<Utc>, D::Error> {
    let text = String::deserialize(d)?;
    DateTime::parse_from_rfc3339(&text)
        .map(|t| t.with_timezone(&Utc))
        .map_err(serde::de::Error::custom)
}

/// On-disk form of one card version: `cards/<tech_id>/card-v<N>.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CardDocument {
    pub tech_id: TechId,
    pub version_no: u32,
    pub created_at: DateTime<Utc>,
    pub change: CardChange,
    pub project_info: ProjectInfo,
    pub implicit_knowledge: ImplicitKnowledge,
    pub deliverables: BTreeMap<TrlLevel, Vec<DeliverableRecord>>,
}

impl CardDocument {
    pub fn new(tech_id: TechId, version: &CardVersion) -> Self {
        CardDocument {
            tech_id,
            version_no: version.version_no,
            created_at: version.created_at,
            change: version.change.clone(),
            project_info: version.project_info.clone(),
            implicit_knowledge: version.implicit_knowledge.clone(),
            deliverables: version.deliverables.clone(),
        }
    }

    pub fn into_version(self) -> CardVersion {
        CardVersion {
            version_no: self.version_no,
            created_at: self.created_at,
            change: self.change,
            project_info: self.project_info,
            implicit_knowledge: self.implicit_knowledge,
            deliverables: self.deliverables,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::TimeZone;

    #[test]
    fn wire_format_field_order() {
        let record = EventRecord {
            seq: 1,
            ts: Utc.with_ymd_and_hms(2020, 3, 1, 12, 0, 0).unwrap(),
            event: DomainEvent::TechnologyArchived {
                tech_id: "x".into(),
                rationale: "done".into(),
            },
        };
        let line = record.to_line().unwrap();
        assert_eq!(
            line,
            r#"{"seq":1,"ts":"2020-03-01T12:00:00Z","kind":"technology-archived","payload":{"tech_id":"x","rationale":"done"}}"#
        );
        let back: EventRecord = serde_json::from_str(&line).unwrap();
        assert_eq!(back, record);
    }

    #[test]
    fn card_document_level_keys_round_trip() {
        let at = Utc.with_ymd_and_hms(2020, 3, 1, 12, 0, 0).unwrap();
        let mut version = CardVersion::initial(at);
        version.deliverables.insert(
            TrlLevel::new(2).unwrap(),
            vec![DeliverableRecord {
                section_id: "requirements-doc".into(),
                title: "Requirements".into(),
                content: "https://example.org/req".into(),
                attached_at: at,
            }],
        );
        let doc = CardDocument::new("bo".into(), &version);
        let json = serde_json::to_string_pretty(&doc).unwrap();
        assert!(json.contains("\"2\": ["));
        let back: CardDocument = serde_json::from_str(&json).unwrap();
        assert_eq!(back.into_version(), version);
    }
}
