//! TRL cards: the append-only, versioned report card kept for every
//! technology.
//!
//! A card version is a full document. Every amendment produces a new version
//! that contains the previous one plus the change, so the set of section ids
//! never shrinks from one version to the next.

use std::collections::{BTreeMap, BTreeSet};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::error::LifecycleError;
use crate::ids::{ReviewId, TechId};
use crate::level::TrlLevel;
use crate::policy::LevelPolicy;
use crate::semver::{parse_semver, SemVerTriple};

pub mod section {
    pub const OWNERS: &str = "owners";
    pub const REVIEWERS: &str = "reviewers";
    pub const STATUS: &str = "status";
    pub const CODE_VERSION: &str = "code-version";
    pub const MODEL_VERSION: &str = "model-version";
    pub const DATA_VERSION: &str = "data-version";
    pub const WORKING_GROUP: &str = "working-group";
    pub const MODELING_ASSUMPTIONS: &str = "modeling-assumptions";
    pub const DATASET_BIASES: &str = "dataset-biases";
    pub const CORNER_CASES: &str = "corner-cases";

    /// Sections stored in dedicated card fields rather than as deliverables.
    pub const BUILT_IN: [&str; 10] = [
        OWNERS,
        REVIEWERS,
        STATUS,
        CODE_VERSION,
        MODEL_VERSION,
        DATA_VERSION,
        WORKING_GROUP,
        MODELING_ASSUMPTIONS,
        DATASET_BIASES,
        CORNER_CASES,
    ];
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct PanelMember {
    pub person: String,
    pub role: String,
}

impl PanelMember {
    pub fn new(role: impl Into<String>, person: impl Into<String>) -> Self {
        PanelMember {
            person: person.into(),
            role: role.into(),
        }
    }

    /// Parses `role=person`.
    pub fn parse(text: &str) -> Option<Self> {
        let (role, person) = text.split_once('=')?;
        let (role, person) = (role.trim(), person.trim());
        (!role.is_empty() && !person.is_empty()).then(|| PanelMember::new(role, person))
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ProjectInfo {
    pub owners: Vec<String>,
    pub reviewers: Vec<String>,
    pub status: String,
    pub code_version: Option<SemVerTriple>,
    pub model_version: Option<SemVerTriple>,
    pub data_version: Option<SemVerTriple>,
    #[serde(default)]
    pub working_group: Vec<PanelMember>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ImplicitKnowledge {
    pub modeling_assumptions: Vec<String>,
    pub dataset_biases: Vec<String>,
    pub corner_cases: Vec<String>,
}

impl ImplicitKnowledge {
    pub fn is_empty(&self) -> bool {
        self.modeling_assumptions.is_empty()
            && self.dataset_biases.is_empty()
            && self.corner_cases.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeliverableRecord {
    pub section_id: String,
    pub title: String,
    /// A URI or inline text.
    pub content: String,
    pub attached_at: DateTime<Utc>,
}

/// What produced a card version.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum CardChange {
    Created,
    Forked {
        parent: TechId,
    },
    Amended {
        section_id: String,
    },
    Graduated {
        from_level: TrlLevel,
        to_level: TrlLevel,
        review_id: ReviewId,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CardVersion {
    pub version_no: u32,
    pub created_at: DateTime<Utc>,
    pub change: CardChange,
    pub project_info: ProjectInfo,
    pub implicit_knowledge: ImplicitKnowledge,
    pub deliverables: BTreeMap<TrlLevel, Vec<DeliverableRecord>>,
}

impl CardVersion {
    pub fn initial(created_at: DateTime<Utc>) -> Self {
        CardVersion {
            version_no: 1,
            created_at,
            change: CardChange::Created,
            project_info: ProjectInfo::default(),
            implicit_knowledge: ImplicitKnowledge::default(),
            deliverables: BTreeMap::new(),
        }
    }

    /// Section ids carrying content in this version.
    pub fn section_ids(&self) -> BTreeSet<String> {
        let info = &self.project_info;
        let knowledge = &self.implicit_knowledge;
        let built_in = [
            (section::OWNERS, !info.owners.is_empty()),
            (section::REVIEWERS, !info.reviewers.is_empty()),
            (section::STATUS, !info.status.is_empty()),
            (section::CODE_VERSION, info.code_version.is_some()),
            (section::MODEL_VERSION, info.model_version.is_some()),
            (section::DATA_VERSION, info.data_version.is_some()),
            (section::WORKING_GROUP, !info.working_group.is_empty()),
            (section::MODELING_ASSUMPTIONS, !knowledge.modeling_assumptions.is_empty()),
            (section::DATASET_BIASES, !knowledge.dataset_biases.is_empty()),
            (section::CORNER_CASES, !knowledge.corner_cases.is_empty()),
        ];
        built_in
            .into_iter()
            .filter(|(_, present)| *present)
            .map(|(id, _)| id.to_string())
            .chain(
                self.deliverables
                    .values()
                    .flatten()
                    .map(|d| d.section_id.clone()),
            )
            .collect()
    }

    pub fn has_deliverable(&self, section_id: &str) -> bool {
        self.deliverables
            .values()
            .flatten()
            .any(|d| d.section_id == section_id)
    }

    pub fn deliverables_at(&self, level: TrlLevel) -> &[DeliverableRecord] {
        self.deliverables.get(&level).map_or(&[], Vec::as_slice)
    }

    /// Distinct working-group roles.
    pub fn working_group_roles(&self) -> BTreeSet<&str> {
        self.project_info
            .working_group
            .iter()
            .map(|m| m.role.as_str())
            .collect()
    }
}

/// A single edit to a card, as recorded in the event log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CardAmendment {
    pub section_id: String,
    pub text: String,
    /// Deliverable level; defaults to the technology's current level.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub level: Option<TrlLevel>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub title: Option<String>,
}

impl CardAmendment {
    pub fn new(section_id: impl Into<String>, text: impl Into<String>) -> Self {
        CardAmendment {
            section_id: section_id.into(),
            text: text.into(),
            level: None,
            title: None,
        }
    }

    pub fn at_level(mut self, level: TrlLevel) -> Self {
        self.level = Some(level);
        self
    }

    pub fn titled(mut self, title: impl Into<String>) -> Self {
        self.title = Some(title.into());
        self
    }

    /// Checks the amendment against a technology currently at `current`.
    pub fn validate(&self, current: TrlLevel) -> Result<(), LifecycleError> {
        let invalid = |msg: &str| Err(LifecycleError::InvalidAmendment(msg.to_string()));
        if !is_section_id(&self.section_id) {
            return invalid("section id must be lowercase letters, digits and '-'");
        }
        let text = self.text.trim();
        if text.is_empty() {
            return invalid("amendment text is empty");
        }
        match self.section_id.as_str() {
            section::CODE_VERSION | section::MODEL_VERSION | section::DATA_VERSION => {
                parse_semver(text)?;
            }
            section::OWNERS | section::REVIEWERS => {
                if split_list(text).next().is_none() {
                    return invalid("no names given");
                }
            }
            section::WORKING_GROUP => {
                let members: Option<Vec<_>> = split_list(text).map(PanelMember::parse).collect();
                match members {
                    Some(m) if !m.is_empty() => {}
                    _ => return invalid("working group entries must be role=person"),
                }
            }
            _ => {}
        }
        if let Some(level) = self.level {
            if section::BUILT_IN.contains(&self.section_id.as_str()) {
                return invalid("only deliverables carry a level");
            }
            if level > current {
                return invalid("deliverables cannot be attached above the current level");
            }
        }
        Ok(())
    }

    /// Produces the next version. Assumes [`CardAmendment::validate`] passed.
    pub fn apply(
        &self,
        previous: &CardVersion,
        current: TrlLevel,
        at: DateTime<Utc>,
    ) -> CardVersion {
        let mut next = previous.clone();
        next.version_no = previous.version_no + 1;
        next.created_at = at;
        next.change = CardChange::Amended {
            section_id: self.section_id.clone(),
        };
        let text = self.text.trim();
        let info = &mut next.project_info;
        let knowledge = &mut next.implicit_knowledge;
        match self.section_id.as_str() {
            section::OWNERS => extend_unique(&mut info.owners, split_list(text)),
            section::REVIEWERS => extend_unique(&mut info.reviewers, split_list(text)),
            section::STATUS => info.status = text.to_string(),
            section::CODE_VERSION => info.code_version = parse_semver(text).ok(),
            section::MODEL_VERSION => info.model_version = parse_semver(text).ok(),
            section::DATA_VERSION => info.data_version = parse_semver(text).ok(),
            section::WORKING_GROUP => {
                for member in split_list(text).filter_map(PanelMember::parse) {
                    if !info.working_group.contains(&member) {
                        info.working_group.push(member);
                    }
                }
            }
            section::MODELING_ASSUMPTIONS => knowledge.modeling_assumptions.push(text.to_string()),
            section::DATASET_BIASES => knowledge.dataset_biases.push(text.to_string()),
            section::CORNER_CASES => knowledge.corner_cases.push(text.to_string()),
            other => {
                let level = self.level.unwrap_or(current);
                next.deliverables
                    .entry(level)
                    .or_default()
                    .push(DeliverableRecord {
                        section_id: other.to_string(),
                        title: self.title.clone().unwrap_or_else(|| other.to_string()),
                        content: text.to_string(),
                        attached_at: at,
                    });
            }
        }
        next
    }
}

fn is_section_id(id: &str) -> bool {
    !id.is_empty()
        && id
            .chars()
            .all(|c| c.is_ascii_lowercase() || c.is_ascii_digit() || c == '-')
}

fn split_list(text: &str) -> impl Iterator<Item = &str> {
    text.split(',').map(str::trim).filter(|s| !s.is_empty())
}

fn extend_unique<'a>(list: &mut Vec<String>, items: impl Iterator<Item = &'a str>) {
    for item in items {
        if !list.iter().any(|existing| existing == item) {
            list.push(item.to_string());
        }
    }
}

/// The growing report card of one technology.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrlCard {
    pub tech_id: TechId,
    pub versions: Vec<CardVersion>,
}

impl TrlCard {
    pub fn new(tech_id: TechId, first: CardVersion) -> Self {
        TrlCard {
            tech_id,
            versions: vec![first],
        }
    }

    pub fn latest(&self) -> &CardVersion {
        self.versions.last().expect("a card always has a first version")
    }

    pub fn version(&self, version_no: u32) -> Option<&CardVersion> {
        self.versions.iter().find(|v| v.version_no == version_no)
    }

    pub fn push(&mut self, version: CardVersion) {
        debug_assert_eq!(version.version_no, self.latest().version_no + 1);
        self.versions.push(version);
    }

    /// Version numbers run 1, 2, 3, ... and section sets never shrink.
    pub fn is_well_formed(&self) -> bool {
        let numbered = self
            .versions
            .iter()
            .enumerate()
            .all(|(i, v)| v.version_no as usize == i + 1);
        let monotone = self
            .versions
            .windows(2)
            .all(|w| w[0].section_ids().is_subset(&w[1].section_ids()));
        !self.versions.is_empty() && numbered && monotone
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SectionCheck {
    pub level: TrlLevel,
    pub section_id: String,
    pub present: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CardReport {
    pub level: TrlLevel,
    pub checks: Vec<SectionCheck>,
    pub missing: Vec<String>,
    pub graduation_ready: bool,
}

/// Checks the latest card version against every section the policy requires
/// at levels `0..=level`.
pub fn validate_card(card: &TrlCard, level: TrlLevel, policy: &LevelPolicy) -> CardReport {
    validate_card_since(card, TrlLevel::MIN, level, policy)
}

/// As [`validate_card`], but only for levels `floor..=level`. Technologies
/// that entered the process above level 0 are not held to the sections of
/// levels they never occupied.
pub fn validate_card_since(
    card: &TrlCard,
    floor: TrlLevel,
    level: TrlLevel,
    policy: &LevelPolicy,
) -> CardReport {
    let present = card.latest().section_ids();
    let mut checks = Vec::new();
    let mut missing = Vec::new();
    for record in policy.levels().filter(|r| r.level >= floor && r.level <= level) {
        for section_id in &record.required_card_sections {
            let found = present.contains(section_id);
            if !found && !missing.contains(section_id) {
                missing.push(section_id.clone());
            }
            checks.push(SectionCheck {
                level: record.level,
                section_id: section_id.clone(),
                present: found,
            });
        }
    }
    CardReport {
        level,
        graduation_ready: missing.is_empty(),
        checks,
        missing,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::TimeZone;

    fn t(secs: i64) -> DateTime<Utc> {
        Utc.timestamp_opt(secs, 0).unwrap()
    }

    fn lvl(v: i64) -> TrlLevel {
        TrlLevel::new(v).unwrap()
    }

    fn card_with(amendments: &[CardAmendment], level: TrlLevel) -> TrlCard {
        let mut card = TrlCard::new("tech".into(), CardVersion::initial(t(0)));
        for (i, a) in amendments.iter().enumerate() {
            a.validate(level).unwrap();
            let next = a.apply(card.latest(), level, t(i as i64 + 1));
            card.push(next);
        }
        card
    }

    #[test]
    fn level_two_without_requirements_doc() {
        let policy = LevelPolicy::default();
        let card = card_with(&[CardAmendment::new("research-plan", "plan")], lvl(2));
        let report = validate_card_since(&card, lvl(2), lvl(2), &policy);
        assert_eq!(report.missing, vec!["requirements-doc".to_string()]);
        assert!(!report.graduation_ready);
    }

    #[test]
    fn level_four_without_assumptions_or_limitations() {
        let policy = LevelPolicy::default();
        let card = card_with(&[CardAmendment::new(section::OWNERS, "ana")], lvl(4));
        assert!(card.latest().implicit_knowledge.modeling_assumptions.is_empty());
        let report = validate_card_since(&card, lvl(4), lvl(4), &policy);
        assert_eq!(report.missing, vec!["assumptions-and-limitations".to_string()]);
    }

    #[test]
    fn complete_card_is_ready() {
        let policy = LevelPolicy::default();
        let amendments: Vec<_> = policy
            .levels()
            .filter(|r| r.level <= lvl(3))
            .flat_map(|r| r.required_card_sections.clone())
            .map(|s| CardAmendment::new(s, "done"))
            .collect();
        let card = card_with(&amendments, lvl(3));
        let report = validate_card(&card, lvl(3), &policy);
        assert!(report.graduation_ready, "{:?}", report.missing);
        assert!(report.checks.iter().all(|c| c.present));
    }

    #[test]
    fn amendments_only_grow_sections() {
        let card = card_with(
            &[
                CardAmendment::new(section::OWNERS, "ana, bo"),
                CardAmendment::new(section::STATUS, "prototype"),
                CardAmendment::new(section::STATUS, "hardening"),
                CardAmendment::new(section::CODE_VERSION, "0.1.0"),
                CardAmendment::new(section::CODE_VERSION, "0.2.0"),
                CardAmendment::new("requirements-doc", "https://docs/req"),
                CardAmendment::new(section::WORKING_GROUP, "product-manager=kim,applied-ai-engineer=lee"),
            ],
            lvl(2),
        );
        assert!(card.is_well_formed());
        let latest = card.latest();
        assert_eq!(latest.version_no, 8);
        assert_eq!(latest.project_info.status, "hardening");
        assert_eq!(latest.project_info.code_version, Some(SemVerTriple::new(0, 2, 0)));
        assert_eq!(latest.working_group_roles().len(), 2);
        assert_eq!(latest.deliverables_at(lvl(2)).len(), 1);
    }

    #[test]
    fn rejects_bad_amendments() {
        let at = lvl(3);
        assert!(CardAmendment::new(section::CODE_VERSION, "1.2").validate(at).is_err());
        assert!(CardAmendment::new("Bad Id", "x").validate(at).is_err());
        assert!(CardAmendment::new("notes", "   ").validate(at).is_err());
        assert!(CardAmendment::new(section::WORKING_GROUP, "kim").validate(at).is_err());
        assert!(CardAmendment::new("demo", "x").at_level(lvl(4)).validate(at).is_err());
        assert!(CardAmendment::new(section::STATUS, "x").at_level(lvl(1)).validate(at).is_err());
        assert!(CardAmendment::new("demo", "x").at_level(lvl(1)).validate(at).is_ok());
    }
}
