use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::card::{CardAmendment, PanelMember};
use crate::ids::{ProposalId, ReviewId, RiskId, TechId};
use crate::level::TrlLevel;
use crate::risk::{Requirement, RiskEntry, Scorecard};
use crate::technology::TechKind;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaskItem {
    pub description: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub quantitative_remark: Option<String>,
}

impl TaskItem {
    pub fn new(description: impl Into<String>) -> Self {
        TaskItem {
            description: description.into(),
            quantitative_remark: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "decision", rename_all = "kebab-case")]
pub enum ReviewOutcome {
    Graduate,
    Return { tasks: Vec<TaskItem> },
}

impl ReviewOutcome {
    pub fn is_graduate(&self) -> bool {
        matches!(self, ReviewOutcome::Graduate)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProposalStatus {
    Pending,
    Decided,
    Cancelled,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraduationProposal {
    pub id: ProposalId,
    pub tech_id: TechId,
    pub from_level: TrlLevel,
    pub card_version_at_proposal: u32,
    pub created_at: DateTime<Utc>,
    pub status: ProposalStatus,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReviewRecord {
    pub id: ReviewId,
    pub proposal_id: ProposalId,
    pub tech_id: TechId,
    pub level_under_review: TrlLevel,
    pub panel: Vec<PanelMember>,
    pub outcome: ReviewOutcome,
    pub notes: String,
    pub decided_at: DateTime<Utc>,
    pub postmortem: Option<String>,
}

/// Task handed back to a technology by a returning review.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AttachedTask {
    pub review_id: ReviewId,
    pub task: TaskItem,
}

/// Everything the event log can record. One command produces exactly one
/// event, so a log cut at any record boundary is a state that existed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "payload", rename_all = "kebab-case")]
pub enum DomainEvent {
    TechnologyRegistered {
        tech_id: TechId,
        name: String,
        tech_kind: TechKind,
        level: TrlLevel,
        #[serde(default)]
        components: Vec<TechId>,
        justification: String,
    },
    TechnologyForked {
        tech_id: TechId,
        parent_id: TechId,
        name: String,
        parent_level: TrlLevel,
        level: TrlLevel,
        rationale: String,
    },
    TechnologyArchived {
        tech_id: TechId,
        rationale: String,
    },
    CardAmended {
        tech_id: TechId,
        version_no: u32,
        amendment: CardAmendment,
    },
    GraduationProposed {
        proposal_id: ProposalId,
        tech_id: TechId,
        from_level: TrlLevel,
        card_version: u32,
    },
    ReviewRecorded {
        review_id: ReviewId,
        proposal_id: ProposalId,
        tech_id: TechId,
        level_under_review: TrlLevel,
        panel: Vec<PanelMember>,
        outcome: ReviewOutcome,
        notes: String,
    },
    PostmortemRecorded {
        review_id: ReviewId,
        notes: String,
    },
    TechnologyRegressed {
        tech_id: TechId,
        from_level: TrlLevel,
        to_level: TrlLevel,
        rationale: String,
        #[serde(default)]
        review_ref: Option<ReviewId>,
        #[serde(default)]
        cancelled_proposal: Option<ProposalId>,
    },
    RequirementAdded(Requirement),
    RiskAdded(RiskEntry),
    RiskMitigated {
        risk_id: RiskId,
        mitigation: String,
        #[serde(default)]
        test_strategy: Option<String>,
    },
    ScorecardRecorded(Scorecard),
}

impl DomainEvent {
    pub fn kind(&self) -> &'static str {
        match self {
            DomainEvent::TechnologyRegistered { .. } => "technology-registered",
            DomainEvent::TechnologyForked { .. } => "technology-forked",
            DomainEvent::TechnologyArchived { .. } => "technology-archived",
            DomainEvent::CardAmended { .. } => "card-amended",
            DomainEvent::GraduationProposed { .. } => "graduation-proposed",
            DomainEvent::ReviewRecorded { .. } => "review-recorded",
            DomainEvent::PostmortemRecorded { .. } => "postmortem-recorded",
            DomainEvent::TechnologyRegressed { .. } => "technology-regressed",
            DomainEvent::RequirementAdded(_) => "requirement-added",
            DomainEvent::RiskAdded(_) => "risk-added",
            DomainEvent::RiskMitigated { .. } => "risk-mitigated",
            DomainEvent::ScorecardRecorded(_) => "scorecard-recorded",
        }
    }

    /// The technology whose command stream this event belongs to, if any.
    pub fn tech_id(&self) -> Option<&TechId> {
        match self {
            DomainEvent::TechnologyRegistered { tech_id, .. }
            | DomainEvent::TechnologyForked { tech_id, .. }
            | DomainEvent::TechnologyArchived { tech_id, .. }
            | DomainEvent::CardAmended { tech_id, .. }
            | DomainEvent::GraduationProposed { tech_id, .. }
            | DomainEvent::ReviewRecorded { tech_id, .. }
            | DomainEvent::TechnologyRegressed { tech_id, .. } => Some(tech_id),
            DomainEvent::RequirementAdded(req) => Some(&req.tech_id),
            DomainEvent::ScorecardRecorded(card) => Some(&card.tech_id),
            DomainEvent::PostmortemRecorded { .. }
            | DomainEvent::RiskAdded(_)
            | DomainEvent::RiskMitigated { .. } => None,
        }
    }
}
