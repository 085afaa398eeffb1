//! The command engine: builds events from requests, validates them against
//! the portfolio, appends them to the store, then applies them.

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::card::{CardAmendment, CardVersion, PanelMember};
use crate::clock::{Clock, SystemClock};
use crate::error::{LifecycleError, Result, StoreError};
use crate::gates::GateRegistry;
use crate::ids::{ProposalId, ReviewId, RiskId, TechId};
use crate::level::TrlLevel;
use crate::lifecycle::{DomainEvent, GraduationProposal, Portfolio, ReviewOutcome, ReviewRecord};
use crate::policy::LevelPolicy;
use crate::risk::{build_scorecard, NewRisk, Requirement, RiskEntry, ScoreInput, Scorecard};
use crate::store::{replay, EventRecord, EventStore};
use crate::technology::{system_trl_detailed, TechKind, Technology};
use crate::views::RiskView;
use crate::transition::{validate_transition, TransitionCause, TransitionEvent};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NewTechnology {
    #[serde(default)]
    pub id: Option<TechId>,
    pub name: String,
    pub kind: TechKind,
    /// Required for everything except compositions, whose level is derived.
    #[serde(default)]
    pub level: Option<TrlLevel>,
    #[serde(default)]
    pub justification: String,
    #[serde(default)]
    pub components: Vec<TechId>,
}

impl NewTechnology {
    pub fn new(name: impl Into<String>, kind: TechKind, level: TrlLevel, justification: impl Into<String>) -> Self {
        NewTechnology {
            id: None,
            name: name.into(),
            kind,
            level: Some(level),
            justification: justification.into(),
            components: Vec::new(),
        }
    }

    pub fn with_id(mut self, id: impl Into<TechId>) -> Self {
        self.id = Some(id.into());
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForkRequest {
    pub name: String,
    #[serde(default)]
    pub id: Option<TechId>,
    pub level: TrlLevel,
    pub rationale: String,
}

/// A technology together with the transition that created or moved it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Transitioned {
    pub technology: Technology,
    pub event: TransitionEvent,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReviewResult {
    pub review: ReviewRecord,
    pub technology: Technology,
    pub transition: Option<TransitionEvent>,
}


pub struct Engine<S: EventStore> {
    store: S,
    state: Portfolio,
    gates: GateRegistry,
    clock: Box<dyn Clock>,
}

impl<S: EventStore> Engine<S> {
    /// Replays the store's log into a fresh engine.
    pub fn open(store: S, policy: LevelPolicy) -> Result<Self> {
        Self::with_parts(store, policy, GateRegistry::builtin(), Box::new(SystemClock))
    }

    pub fn with_parts(store: S, policy: LevelPolicy, gates: GateRegistry, clock: Box<dyn Clock>) -> Result<Self> {
        let records = store.records()?;
        let state = replay(&records, policy, &gates)?;
        Ok(Engine {
            store,
            state,
            gates,
            clock,
        })
    }

    /// Erases the store type, for adapters that hold any store.
    pub fn boxed(self) -> Engine<Box<dyn EventStore>>
    where
        S: 'static,
    {
        Engine {
            store: Box::new(self.store),
            state: self.state,
            gates: self.gates,
            clock: self.clock,
        }
    }

    pub fn set_clock(&mut self, clock: Box<dyn Clock>) {
        self.clock = clock;
    }

    pub fn state(&self) -> &Portfolio {
        &self.state
    }

    pub fn policy(&self) -> &LevelPolicy {
        &self.state.policy
    }

    pub fn gates(&self) -> &GateRegistry {
        &self.gates
    }

    pub fn store(&self) -> &S {
        &self.store
    }

    pub fn store_mut(&mut self) -> &mut S {
        &mut self.store
    }

    /// Current clock reading, never earlier than the last recorded event.
    pub fn now(&self) -> DateTime<Utc> {
        let now = self.clock.now();
        match self.state.last_event_at {
            Some(last) if last > now => last,
            _ => now,
        }
    }

    /// Default `now` for analytics: the newest event, so reports depend
    /// only on the log. Falls back to the clock for an empty log.
    pub fn as_of(&self) -> DateTime<Utc> {
        self.state.last_event_at.unwrap_or_else(|| self.clock.now())
    }

    /// Re-reads the log, discarding in-memory state. Used after a
    /// sequence conflict.
    pub fn reload(&mut self) -> Result<()> {
        let records = self.store.records()?;
        self.state = replay(&records, self.state.policy.clone(), &self.gates)?;
        Ok(())
    }

    /// Reloads only when another writer has appended since the last read.
    pub fn refresh(&mut self) -> Result<()> {
        if self.store.head_seq()? != self.state.last_seq {
            self.reload()?;
        }
        Ok(())
    }

    /// Rebuilds state from the log without touching the live copy.
    pub fn replayed(&self) -> Result<Portfolio> {
        let records = self.store.records()?;
        Ok(replay(&records, self.state.policy.clone(), &self.gates)?)
    }

    /// Validate, append, apply. Card-changing events also persist the new
    /// card version document.
    fn commit(&mut self, event: DomainEvent) -> Result<EventRecord> {
        self.state.validate(&event, &self.gates)?;
        let ts = self.now();
        let record = match self.store.append(self.state.last_seq + 1, ts, &event) {
            Ok(record) => record,
            Err(err @ StoreError::SequenceConflict { .. }) => {
                // someone else wrote; pick up their events before reporting
                self.reload()?;
                return Err(err.into());
            }
            Err(err) => return Err(err.into()),
        };
        self.state.apply(record.seq, record.ts, &record.event);
        if let Some(tech) = card_touched(&record.event) {
            let card = self.state.card(&tech)?;
            let latest = card.latest().clone();
            self.store.save_card_version(&tech, &latest)?;
        }
        Ok(record)
    }

    fn last_transition(&self) -> TransitionEvent {
        self.state
            .transitions
            .last()
            .cloned()
            .expect("a transition was just recorded")
    }

    fn fresh_id(&self, explicit: Option<TechId>, name: &str) -> std::result::Result<TechId, LifecycleError> {
        if let Some(id) = explicit {
            return Ok(id);
        }
        let base = TechId::slug(name).ok_or(LifecycleError::MissingName)?;
        if !self.state.technologies.contains_key(&base) {
            return Ok(base);
        }
        Ok((2..)
            .map(|n| TechId::new(format!("{base}-{n}")))
            .find(|id| !self.state.technologies.contains_key(id))
            .expect("unbounded suffixes"))
    }

    // ---- commands ----

    pub fn register_technology(&mut self, request: NewTechnology) -> Result<Transitioned> {
        let tech_id = self.fresh_id(request.id, &request.name)?;
        let level = match (request.kind, request.level) {
            (TechKind::Composition, given) => {
                let derived = self.derived_level(&request.components)?;
                match given {
                    Some(level) if Some(level) != derived => {
                        return Err(LifecycleError::CompositionLevelMismatch {
                            expected: derived.unwrap_or(level),
                        }
                        .into())
                    }
                    Some(level) => level,
                    None => derived.ok_or_else(|| {
                        LifecycleError::InvalidComponents("a composition needs at least one component".into())
                    })?,
                }
            }
            (_, Some(level)) => level,
            (_, None) => return Err(LifecycleError::MissingLevel.into()),
        };
        self.commit(DomainEvent::TechnologyRegistered {
            tech_id: tech_id.clone(),
            name: request.name.trim().to_string(),
            tech_kind: request.kind,
            level,
            components: request.components,
            justification: request.justification.trim().to_string(),
        })?;
        Ok(Transitioned {
            technology: self.state.technology(&tech_id)?.clone(),
            event: self.last_transition(),
        })
    }

    /// Minimum system level over the given components, when they all resolve.
    fn derived_level(&self, components: &[TechId]) -> Result<Option<TrlLevel>> {
        let mut lowest = None;
        for id in components {
            let Some(tech) = self.state.technologies.get(id) else {
                // validation reports the missing id
                return Ok(None);
            };
            let level = system_trl_detailed(tech, &self.state.technologies)
                .map_err(LifecycleError::from)?
                .level;
            lowest = Some(lowest.map_or(level, |l: TrlLevel| l.min(level)));
        }
        Ok(lowest)
    }

    pub fn fork_technology(&mut self, parent: &TechId, request: ForkRequest) -> Result<Transitioned> {
        let parent_tech = self
            .state
            .technologies
            .get(parent)
            .ok_or_else(|| LifecycleError::ParentNotFound(parent.clone()))?;
        let parent_level = parent_tech.current_level;
        let tech_id = self.fresh_id(request.id, &request.name)?;
        self.commit(DomainEvent::TechnologyForked {
            tech_id: tech_id.clone(),
            parent_id: parent.clone(),
            name: request.name.trim().to_string(),
            parent_level,
            level: request.level,
            rationale: request.rationale.trim().to_string(),
        })?;
        Ok(Transitioned {
            technology: self.state.technology(&tech_id)?.clone(),
            event: self.last_transition(),
        })
    }

    pub fn archive(&mut self, tech: &TechId, rationale: &str) -> Result<Technology> {
        self.commit(DomainEvent::TechnologyArchived {
            tech_id: tech.clone(),
            rationale: rationale.trim().to_string(),
        })?;
        Ok(self.state.technology(tech)?.clone())
    }

    pub fn amend_card(&mut self, tech: &TechId, amendment: CardAmendment) -> Result<CardVersion> {
        let version_no = self.state.card(tech)?.latest().version_no + 1;
        self.commit(DomainEvent::CardAmended {
            tech_id: tech.clone(),
            version_no,
            amendment,
        })?;
        Ok(self.state.card(tech)?.latest().clone())
    }

    /// Proposes graduating to the next level. An explicit `target` is
    /// checked against the no-skip rule first.
    pub fn propose_graduation(&mut self, tech: &TechId, target: Option<TrlLevel>) -> Result<GraduationProposal> {
        let current = self.state.technology(tech)?.current_level;
        if let Some(target) = target {
            validate_transition(Some(current), target, TransitionCause::Graduation)
                .into_result()
                .map_err(LifecycleError::IllegalTransition)?;
        }
        let proposal_id = self.state.next_proposal_id();
        let card_version = self.state.card(tech)?.latest().version_no;
        self.commit(DomainEvent::GraduationProposed {
            proposal_id,
            tech_id: tech.clone(),
            from_level: current,
            card_version,
        })?;
        Ok(self.state.proposals[&proposal_id].clone())
    }

    pub fn record_review(
        &mut self,
        proposal: ProposalId,
        panel: Vec<PanelMember>,
        outcome: ReviewOutcome,
        notes: &str,
    ) -> Result<ReviewResult> {
        let found = self
            .state
            .proposals
            .get(&proposal)
            .ok_or(LifecycleError::ProposalNotFound(proposal))?
            .clone();
        let review_id = self.state.next_review_id();
        let graduates = outcome.is_graduate();
        self.commit(DomainEvent::ReviewRecorded {
            review_id,
            proposal_id: proposal,
            tech_id: found.tech_id.clone(),
            level_under_review: found.from_level,
            panel,
            outcome,
            notes: notes.trim().to_string(),
        })?;
        Ok(ReviewResult {
            review: self.state.reviews[&review_id].clone(),
            technology: self.state.technology(&found.tech_id)?.clone(),
            transition: graduates.then(|| self.last_transition()),
        })
    }

    pub fn record_postmortem(&mut self, review: ReviewId, notes: &str) -> Result<ReviewRecord> {
        self.commit(DomainEvent::PostmortemRecorded {
            review_id: review,
            notes: notes.trim().to_string(),
        })?;
        Ok(self.state.reviews[&review].clone())
    }

    pub fn regress(
        &mut self,
        tech: &TechId,
        to_level: TrlLevel,
        rationale: &str,
        review_ref: Option<ReviewId>,
    ) -> Result<TransitionEvent> {
        let from_level = self.state.technology(tech)?.current_level;
        let cancelled_proposal = self.state.pending_proposal(tech).map(|p| p.id);
        self.commit(DomainEvent::TechnologyRegressed {
            tech_id: tech.clone(),
            from_level,
            to_level,
            rationale: rationale.trim().to_string(),
            review_ref,
            cancelled_proposal,
        })?;
        Ok(self.last_transition())
    }

    pub fn add_requirement(
        &mut self,
        tech: &TechId,
        description: &str,
        verification: &str,
        validation: &str,
    ) -> Result<Requirement> {
        let id = self.state.register.next_requirement_id();
        self.commit(DomainEvent::RequirementAdded(Requirement {
            id,
            tech_id: tech.clone(),
            description: description.trim().to_string(),
            verification: verification.trim().to_string(),
            validation: validation.trim().to_string(),
            linked_risks: Vec::new(),
        }))?;
        Ok(self.state.register.requirements[&id].clone())
    }

    pub fn add_risk(&mut self, input: NewRisk) -> Result<RiskView> {
        let id = self.state.register.next_risk_id();
        let entry = self.state.register.prepare_risk(id, &input)?;
        self.commit(DomainEvent::RiskAdded(entry))?;
        let entry = self.state.register.risks[&id].clone();
        Ok(RiskView {
            flagged: entry.is_flagged(self.state.policy.flag_threshold),
            entry,
        })
    }

    pub fn mitigate_risk(&mut self, risk: RiskId, mitigation: &str, test_strategy: Option<&str>) -> Result<RiskEntry> {
        self.commit(DomainEvent::RiskMitigated {
            risk_id: risk,
            mitigation: mitigation.trim().to_string(),
            test_strategy: test_strategy.map(str::to_string),
        })?;
        Ok(self.state.register.risks[&risk].clone())
    }

    pub fn score_card(&mut self, tech: &TechId, items: &[ScoreInput]) -> Result<Scorecard> {
        self.state.technology(tech)?;
        let id = self.state.register.next_scorecard_id();
        let card = build_scorecard(id, tech.clone(), items, self.state.policy.score_max)?;
        self.commit(DomainEvent::ScorecardRecorded(card))?;
        Ok(self.state.register.scorecards[&id].clone())
    }
}

fn card_touched(event: &DomainEvent) -> Option<TechId> {
    match event {
        DomainEvent::TechnologyRegistered { tech_id, .. }
        | DomainEvent::TechnologyForked { tech_id, .. }
        | DomainEvent::CardAmended { tech_id, .. } => Some(tech_id.clone()),
        DomainEvent::ReviewRecorded { tech_id, outcome, .. } if outcome.is_graduate() => Some(tech_id.clone()),
        _ => None,
    }
}
