//! Read models shared by the CLI and the HTTP API.

use serde::{Deserialize, Serialize};

use crate::card::{CardReport, CardVersion};
use crate::error::LifecycleError;
use crate::gates::{GateCheck, GateRegistry};
use crate::ids::TechId;
use crate::level::TrlLevel;
use crate::lifecycle::{GraduationProposal, Portfolio, ReviewRecord};
use crate::risk::RiskEntry;
use crate::technology::{SystemTrl, TechKind, Technology};
use crate::transition::TransitionEvent;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TechnologySummary {
    pub technology: Technology,
    /// The level the board shows: the system level for compositions, the
    /// current level otherwise. `None` when a composition has no active
    /// components left.
    pub level: Option<TrlLevel>,
    pub system_trl: Option<SystemTrl>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TechnologyDetail {
    #[serde(flatten)]
    pub summary: TechnologySummary,
    pub path: Vec<TrlLevel>,
    pub transitions: Vec<TransitionEvent>,
    pub pending_proposal: Option<GraduationProposal>,
    pub card_version: u32,
    pub card_report: CardReport,
    pub gate_checks: Vec<GateCheck>,
    pub reviews: Vec<ReviewRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RiskView {
    pub entry: RiskEntry,
    pub flagged: bool,
}

pub fn summary(portfolio: &Portfolio, tech: &Technology) -> TechnologySummary {
    let system_trl = portfolio.system_trl(&tech.id).ok();
    TechnologySummary {
        level: system_trl.as_ref().map(|s| s.level),
        technology: tech.clone(),
        system_trl,
    }
}

/// Technologies filtered by displayed level and kind, in id order.
pub fn list(portfolio: &Portfolio, level: Option<TrlLevel>, kind: Option<TechKind>) -> Vec<TechnologySummary> {
    portfolio
        .technologies
        .values()
        .filter(|t| kind.is_none_or(|k| t.kind == k))
        .map(|t| summary(portfolio, t))
        .filter(|s| level.is_none() || s.level == level)
        .collect()
}

pub fn detail(portfolio: &Portfolio, id: &TechId, gates: &GateRegistry) -> Result<TechnologyDetail, LifecycleError> {
    let tech = portfolio.technology(id)?;
    let transitions: Vec<TransitionEvent> = portfolio.transitions_of(id).cloned().collect();
    Ok(TechnologyDetail {
        summary: summary(portfolio, tech),
        path: transitions.iter().map(|t| t.to_level).collect(),
        pending_proposal: portfolio.pending_proposal(id).cloned(),
        card_version: portfolio.card(id)?.latest().version_no,
        card_report: portfolio.card_report(id)?,
        gate_checks: portfolio.gate_checks(id, gates)?,
        reviews: portfolio.reviews.values().filter(|r| &r.tech_id == id).cloned().collect(),
        transitions,
    })
}

/// One card version, or the latest.
pub fn card_version<'a>(portfolio: &'a Portfolio, id: &TechId, version: Option<u32>) -> Result<&'a CardVersion, LifecycleError> {
    let card = portfolio.card(id)?;
    match version {
        None => Ok(card.latest()),
        Some(n) => card.version(n).ok_or_else(|| LifecycleError::CardVersionNotFound {
            tech: id.clone(),
            version: n,
        }),
    }
}

/// Risk entries of a technology; `flagged_only` keeps entries at or above
/// the threshold, highest first.
pub fn risks(portfolio: &Portfolio, id: &TechId, flagged_only: bool, threshold: Option<f64>) -> Result<Vec<RiskView>, LifecycleError> {
    portfolio.technology(id)?;
    let threshold = threshold.unwrap_or(portfolio.policy.flag_threshold);
    let entries: Vec<&RiskEntry> = if flagged_only {
        portfolio.flagged_risks(id, Some(threshold))?
    } else {
        portfolio.register.risks_of(id).collect()
    };
    Ok(entries
        .into_iter()
        .map(|e| RiskView {
            flagged: e.is_flagged(threshold),
            entry: e.clone(),
        })
        .collect())
}
