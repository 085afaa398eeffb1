//! Quantified risk per requirement, flagging and the generic test scorecard.

use std::cmp::Ordering;
use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::RiskError;
use crate::ids::{RequirementId, RiskId, ScorecardId, TechId};

/// `risk = p(failure) × value`, with `value` an integer 1-10.
pub fn risk_score(p_failure: f64, value: i64) -> Result<f64, RiskError> {
    if !(0.0..=1.0).contains(&p_failure) {
        return Err(RiskError::ProbabilityOutOfRange(p_failure));
    }
    if !(1..=10).contains(&value) {
        return Err(RiskError::ValueOutOfRange(value));
    }
    Ok(p_failure * value as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Requirement {
    pub id: RequirementId,
    pub tech_id: TechId,
    pub description: String,
    /// How we check it was built right.
    pub verification: String,
    /// How we check it is the right thing.
    pub validation: String,
    pub linked_risks: Vec<RiskId>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RiskEntry {
    pub id: RiskId,
    pub requirement_id: RequirementId,
    pub p_failure: f64,
    pub value: u8,
    pub risk: f64,
    pub sim_to_real: bool,
    pub mitigation: Option<String>,
    pub test_strategy: Option<String>,
}

impl RiskEntry {
    pub fn is_flagged(&self, threshold: f64) -> bool {
        self.risk >= threshold
    }

    pub fn is_mitigated(&self) -> bool {
        self.mitigation.as_deref().is_some_and(|m| !m.trim().is_empty())
    }
}

/// Input for a new risk entry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NewRisk {
    pub requirement_id: RequirementId,
    pub p_failure: f64,
    pub value: i64,
    #[serde(default)]
    pub sim_to_real: bool,
    #[serde(default)]
    pub mitigation: Option<String>,
    #[serde(default)]
    pub test_strategy: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScoreItem {
    pub item_id: String,
    pub description: String,
    pub score: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Scorecard {
    pub id: ScorecardId,
    pub tech_id: TechId,
    pub items: Vec<ScoreItem>,
    pub total: u32,
}

impl Scorecard {
    /// An empty scorecard is no evidence for the scorecard gate.
    pub fn is_evidence(&self) -> bool {
        !self.items.is_empty()
    }
}

/// Scorecard item as submitted, before bounds checking.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScoreInput {
    pub item_id: String,
    #[serde(default)]
    pub description: String,
    pub score: i64,
}

pub fn build_scorecard(
    id: ScorecardId,
    tech_id: TechId,
    items: &[ScoreInput],
    max: u32,
) -> Result<Scorecard, RiskError> {
    let items = items
        .iter()
        .map(|item| {
            if item.score < 0 || item.score > max as i64 {
                return Err(RiskError::ScoreOutOfBounds {
                    item: item.item_id.clone(),
                    score: item.score,
                    max,
                });
            }
            Ok(ScoreItem {
                item_id: item.item_id.clone(),
                description: item.description.clone(),
                score: item.score as u32,
            })
        })
        .collect::<Result<Vec<_>, _>>()?;
    let total = items.iter().map(|i| i.score).sum();
    Ok(Scorecard {
        id,
        tech_id,
        items,
        total,
    })
}

/// A starter checklist for the scorecard gate. Loosely grouped after common
/// production-readiness rubric categories; not normative.
pub fn default_checklist() -> Vec<(&'static str, &'static str)> {
    vec![
        ("data-invariants", "Input data schema and invariants are tested"),
        ("feature-tests", "Feature code has unit tests"),
        ("model-quality", "Model quality is validated against a baseline before release"),
        ("reproducible-training", "Training is reproducible from versioned code, data and config"),
        ("pipeline-integration", "The full pipeline runs end to end in an integration test"),
        ("rollback", "A model rollback path exists and has been exercised"),
        ("monitoring", "Serving metrics and data drift are monitored with alerts"),
    ]
}

/// All requirements, risk entries and scorecards of a portfolio.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RiskRegister {
    pub requirements: BTreeMap<RequirementId, Requirement>,
    pub risks: BTreeMap<RiskId, RiskEntry>,
    pub scorecards: BTreeMap<ScorecardId, Scorecard>,
}

impl RiskRegister {
    pub fn next_requirement_id(&self) -> RequirementId {
        RequirementId(self.requirements.keys().last().map_or(1, |id| id.0 + 1))
    }

    pub fn next_risk_id(&self) -> RiskId {
        RiskId(self.risks.keys().last().map_or(1, |id| id.0 + 1))
    }

    pub fn next_scorecard_id(&self) -> ScorecardId {
        ScorecardId(self.scorecards.keys().last().map_or(1, |id| id.0 + 1))
    }

    pub fn requirement(&self, id: RequirementId) -> Result<&Requirement, RiskError> {
        self.requirements
            .get(&id)
            .ok_or(RiskError::RequirementNotFound(id))
    }

    pub fn risk(&self, id: RiskId) -> Result<&RiskEntry, RiskError> {
        self.risks.get(&id).ok_or(RiskError::RiskNotFound(id))
    }

    pub fn check_requirement(verification: &str, validation: &str) -> Result<(), RiskError> {
        if verification.trim().is_empty() {
            return Err(RiskError::MissingVerification);
        }
        if validation.trim().is_empty() {
            return Err(RiskError::MissingValidation);
        }
        Ok(())
    }

    /// Validates a new entry and computes its risk, without storing it.
    pub fn prepare_risk(&self, id: RiskId, input: &NewRisk) -> Result<RiskEntry, RiskError> {
        self.requirement(input.requirement_id)?;
        let risk = risk_score(input.p_failure, input.value)?;
        Ok(RiskEntry {
            id,
            requirement_id: input.requirement_id,
            p_failure: input.p_failure,
            value: input.value as u8,
            risk,
            sim_to_real: input.sim_to_real,
            mitigation: non_blank(&input.mitigation),
            test_strategy: non_blank(&input.test_strategy),
        })
    }

    pub fn insert_requirement(&mut self, requirement: Requirement) {
        self.requirements.insert(requirement.id, requirement);
    }

    pub fn insert_risk(&mut self, entry: RiskEntry) {
        if let Some(req) = self.requirements.get_mut(&entry.requirement_id) {
            req.linked_risks.push(entry.id);
        }
        self.risks.insert(entry.id, entry);
    }

    pub fn tech_of(&self, risk: &RiskEntry) -> Option<&TechId> {
        self.requirements
            .get(&risk.requirement_id)
            .map(|r| &r.tech_id)
    }

    pub fn requirements_of(&self, tech: &TechId) -> impl Iterator<Item = &Requirement> + '_ {
        let tech = tech.clone();
        self.requirements.values().filter(move |r| r.tech_id == tech)
    }

    pub fn risks_of(&self, tech: &TechId) -> impl Iterator<Item = &RiskEntry> + '_ {
        let tech = tech.clone();
        self.risks
            .values()
            .filter(move |r| self.tech_of(r) == Some(&tech))
    }

    pub fn scorecards_of(&self, tech: &TechId) -> impl Iterator<Item = &Scorecard> + '_ {
        let tech = tech.clone();
        self.scorecards.values().filter(move |s| s.tech_id == tech)
    }

    /// Entries with `risk >= threshold`, highest risk first, ties by id.
    pub fn flagged_risks(&self, tech: &TechId, threshold: f64) -> Vec<&RiskEntry> {
        sort_flagged(self.risks_of(tech).filter(|r| r.is_flagged(threshold)).collect())
    }
}

pub(crate) fn sort_flagged(mut entries: Vec<&RiskEntry>) -> Vec<&RiskEntry> {
    entries.sort_by(|a, b| match b.risk.total_cmp(&a.risk) {
        Ordering::Equal => a.id.cmp(&b.id),
        other => other,
    });
    entries
}

fn non_blank(text: &Option<String>) -> Option<String> {
    text.as_deref()
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(str::to_string)
}
