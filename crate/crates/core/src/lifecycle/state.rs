//! The portfolio state and the single validation path shared by live
//! commands and log replay.

use std::collections::BTreeMap;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::card::{validate_card_since, CardChange, CardReport, CardVersion, TrlCard};
use crate::error::{LifecycleError, ModelError, RiskError};
use crate::gates::{GateCheck, GateContext, GateRegistry};
use crate::ids::{ProposalId, ReviewId, TechId};
use crate::level::TrlLevel;
use crate::lifecycle::events::{
    AttachedTask, DomainEvent, GraduationProposal, ProposalStatus, ReviewOutcome, ReviewRecord,
};
use crate::policy::LevelPolicy;
use crate::risk::{RiskEntry, RiskRegister};
use crate::technology::{system_trl_detailed, Registry, SystemTrl, TechKind, TechStatus, Technology};
use crate::transition::{validate_transition, TransitionCause, TransitionEvent};

type Check = Result<(), LifecycleError>;

/// Everything derived from the event log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Portfolio {
    pub policy: LevelPolicy,
    pub technologies: Registry,
    pub cards: BTreeMap<TechId, TrlCard>,
    pub transitions: Vec<TransitionEvent>,
    pub proposals: BTreeMap<ProposalId, GraduationProposal>,
    pub reviews: BTreeMap<ReviewId, ReviewRecord>,
    pub tasks: BTreeMap<TechId, Vec<AttachedTask>>,
    pub register: RiskRegister,
    pub last_seq: u64,
    /// Timestamp of the newest record; `None` for an empty log.
    pub last_event_at: Option<DateTime<Utc>>,
}

impl Portfolio {
    pub fn new(policy: LevelPolicy) -> Self {
        Portfolio {
            policy,
            technologies: Registry::new(),
            cards: BTreeMap::new(),
            transitions: Vec::new(),
            proposals: BTreeMap::new(),
            reviews: BTreeMap::new(),
            tasks: BTreeMap::new(),
            register: RiskRegister::default(),
            last_seq: 0,
            last_event_at: None,
        }
    }

    // ---- queries ----

    pub fn technology(&self, id: &TechId) -> Result<&Technology, LifecycleError> {
        self.technologies
            .get(id)
            .ok_or_else(|| LifecycleError::TechnologyNotFound(id.clone()))
    }

    /// Looks a technology up by id, falling back to an exact name match.
    pub fn resolve(&self, key: &str) -> Result<&Technology, LifecycleError> {
        self.technologies
            .get(&TechId::from(key))
            .or_else(|| self.technologies.values().find(|t| t.name == key))
            .ok_or_else(|| LifecycleError::TechnologyNotFound(TechId::from(key)))
    }

    pub fn card(&self, id: &TechId) -> Result<&TrlCard, LifecycleError> {
        self.cards
            .get(id)
            .ok_or_else(|| LifecycleError::TechnologyNotFound(id.clone()))
    }

    pub fn transitions_of<'a>(&'a self, id: &'a TechId) -> impl Iterator<Item = &'a TransitionEvent> + 'a {
        self.transitions.iter().filter(move |t| &t.tech_id == id)
    }

    pub fn pending_proposal(&self, id: &TechId) -> Option<&GraduationProposal> {
        self.proposals
            .values()
            .find(|p| &p.tech_id == id && p.status == ProposalStatus::Pending)
    }

    pub fn pending_proposals(&self) -> impl Iterator<Item = &GraduationProposal> {
        self.proposals
            .values()
            .filter(|p| p.status == ProposalStatus::Pending)
    }

    pub fn system_trl(&self, id: &TechId) -> Result<SystemTrl, LifecycleError> {
        let tech = self.technology(id)?;
        Ok(system_trl_detailed(tech, &self.technologies)?)
    }

    /// Lowest level the technology has occupied; card requirements below it
    /// are waived.
    pub fn floor_level(&self, id: &TechId) -> Option<TrlLevel> {
        self.transitions_of(id).map(|t| t.to_level).min()
    }

    pub fn card_report(&self, id: &TechId) -> Result<CardReport, LifecycleError> {
        let tech = self.technology(id)?;
        let card = self.card(id)?;
        let floor = self.floor_level(id).unwrap_or(tech.current_level);
        Ok(validate_card_since(card, floor, tech.current_level, &self.policy))
    }

    pub fn gate_checks(&self, id: &TechId, gates: &GateRegistry) -> Result<Vec<GateCheck>, LifecycleError> {
        let tech = self.technology(id)?;
        let card = self.card(id)?;
        let ctx = GateContext {
            tech,
            card: card.latest(),
            register: &self.register,
        };
        Ok(gates.evaluate(&self.policy.record(tech.current_level).gates, &ctx))
    }

    pub fn flagged_risks(&self, id: &TechId, threshold: Option<f64>) -> Result<Vec<&RiskEntry>, LifecycleError> {
        self.technology(id)?;
        Ok(self
            .register
            .flagged_risks(id, threshold.unwrap_or(self.policy.flag_threshold)))
    }

    pub fn next_proposal_id(&self) -> ProposalId {
        ProposalId(self.proposals.keys().last().map_or(1, |id| id.0 + 1))
    }

    pub fn next_review_id(&self) -> ReviewId {
        ReviewId(self.reviews.keys().last().map_or(1, |id| id.0 + 1))
    }

    // ---- validation ----

    fn active(&self, id: &TechId) -> Result<&Technology, LifecycleError> {
        let tech = self.technology(id)?;
        if !tech.is_active() {
            return Err(LifecycleError::TechnologyArchived(id.clone()));
        }
        Ok(tech)
    }

    fn own_level(&self, id: &TechId) -> Result<&Technology, LifecycleError> {
        let tech = self.active(id)?;
        if tech.is_composition() {
            return Err(LifecycleError::CompositionLevelDerived(id.clone()));
        }
        Ok(tech)
    }

    /// Checks that `event` may be applied to the current state. Never
    /// mutates.
    pub fn validate(&self, event: &DomainEvent, gates: &GateRegistry) -> Check {
        match event {
            DomainEvent::TechnologyRegistered {
                tech_id,
                name,
                tech_kind,
                level,
                components,
                justification,
            } => self.check_register(tech_id, name, *tech_kind, *level, components, justification),
            DomainEvent::TechnologyForked {
                tech_id,
                parent_id,
                name,
                parent_level,
                level,
                rationale,
            } => {
                self.check_new_id(tech_id, name)?;
                let parent = self.technologies.get(parent_id).ok_or_else(|| LifecycleError::ParentNotFound(parent_id.clone()))?;
                if !parent.is_active() {
                    return Err(LifecycleError::TechnologyArchived(parent_id.clone()));
                }
                if parent.is_composition() {
                    return Err(LifecycleError::CompositionLevelDerived(parent_id.clone()));
                }
                if *parent_level != parent.current_level {
                    return Err(inconsistent("fork parent level"));
                }
                if validate_transition(Some(*parent_level), *level, TransitionCause::ForkChildCreated).into_result().is_err() {
                    return Err(LifecycleError::ChildLevelAboveParent {
                        child: *level,
                        parent: *parent_level,
                    });
                }
                require_text(rationale, LifecycleError::MissingRationale)
            }
            DomainEvent::TechnologyArchived { tech_id, rationale } => {
                self.active(tech_id)?;
                require_text(rationale, LifecycleError::MissingRationale)
            }
            DomainEvent::CardAmended {
                tech_id,
                version_no,
                amendment,
            } => {
                let tech = self.active(tech_id)?;
                if *version_no != self.card(tech_id)?.latest().version_no + 1 {
                    return Err(inconsistent("card version"));
                }
                amendment.validate(tech.current_level)
            }
            DomainEvent::GraduationProposed {
                proposal_id,
                tech_id,
                from_level,
                card_version,
            } => {
                let tech = self.own_level(tech_id)?;
                if let Some(pending) = self.pending_proposal(tech_id) {
                    return Err(LifecycleError::PendingProposalExists(pending.id));
                }
                if *from_level != tech.current_level {
                    return Err(inconsistent("proposal level"));
                }
                let target = tech.current_level.next().ok_or(LifecycleError::TopLevelReached)?;
                validate_transition(Some(*from_level), target, TransitionCause::Graduation)
                    .into_result()
                    .map_err(LifecycleError::IllegalTransition)?;
                if *proposal_id != self.next_proposal_id() {
                    return Err(inconsistent("proposal id"));
                }
                if *card_version != self.card(tech_id)?.latest().version_no {
                    return Err(inconsistent("proposal card version"));
                }
                let report = self.card_report(tech_id)?;
                if !report.graduation_ready {
                    return Err(LifecycleError::CardIncomplete(report.missing));
                }
                if let Some(check) = self.gate_checks(tech_id, gates)?.into_iter().find(|c| !c.satisfied) {
                    return Err(LifecycleError::GateUnsatisfied {
                        gate: check.gate_id,
                        detail: check.evidence,
                    });
                }
                let unmitigated: Vec<_> = self
                    .flagged_risks(tech_id, None)?
                    .into_iter()
                    .filter(|r| !r.is_mitigated())
                    .map(|r| r.id)
                    .collect();
                if !unmitigated.is_empty() {
                    return Err(LifecycleError::UnmitigatedFlaggedRisk(unmitigated));
                }
                Ok(())
            }
            DomainEvent::ReviewRecorded {
                review_id,
                proposal_id,
                tech_id,
                level_under_review,
                panel,
                outcome,
                notes: _,
            } => {
                let proposal = self
                    .proposals
                    .get(proposal_id)
                    .ok_or(LifecycleError::ProposalNotFound(*proposal_id))?;
                if proposal.status != ProposalStatus::Pending {
                    return Err(LifecycleError::ProposalNotPending(*proposal_id));
                }
                if &proposal.tech_id != tech_id || proposal.from_level != *level_under_review {
                    return Err(inconsistent("review does not match its proposal"));
                }
                let tech = self.own_level(tech_id)?;
                if tech.current_level != proposal.from_level {
                    return Err(LifecycleError::StaleProposal(*proposal_id));
                }
                if *review_id != self.next_review_id() {
                    return Err(inconsistent("review id"));
                }
                match outcome {
                    ReviewOutcome::Return { tasks } => {
                        if tasks.is_empty() || tasks.iter().any(|t| t.description.trim().is_empty()) {
                            return Err(LifecycleError::EmptyTaskListOnReturn);
                        }
                        Ok(())
                    }
                    ReviewOutcome::Graduate => {
                        let required = &self.policy.record(*level_under_review).required_panel_roles;
                        let missing: Vec<String> = required
                            .iter()
                            .filter(|role| !panel.iter().any(|m| &m.role == *role))
                            .cloned()
                            .collect();
                        if !missing.is_empty() {
                            return Err(LifecycleError::PanelRolesInsufficient(missing));
                        }
                        let target = level_under_review.next().ok_or(LifecycleError::TopLevelReached)?;
                        validate_transition(Some(*level_under_review), target, TransitionCause::Graduation)
                            .into_result()
                            .map_err(LifecycleError::IllegalTransition)
                    }
                }
            }
            DomainEvent::PostmortemRecorded { review_id, notes } => {
                let review = self
                    .reviews
                    .get(review_id)
                    .ok_or(LifecycleError::ReviewNotFound(*review_id))?;
                if !review.outcome.is_graduate() {
                    return Err(LifecycleError::NotAGraduation(*review_id));
                }
                if review.postmortem.is_some() {
                    return Err(LifecycleError::PostmortemAlreadyRecorded(*review_id));
                }
                require_text(notes, LifecycleError::MissingNotes)
            }
            DomainEvent::TechnologyRegressed {
                tech_id,
                from_level,
                to_level,
                rationale,
                review_ref,
                cancelled_proposal,
            } => {
                let tech = self.own_level(tech_id)?;
                if *from_level != tech.current_level {
                    return Err(inconsistent("regression source level"));
                }
                validate_transition(Some(*from_level), *to_level, TransitionCause::Regression)
                    .into_result()
                    .map_err(LifecycleError::IllegalTransition)?;
                require_text(rationale, LifecycleError::MissingRationale)?;
                if let Some(review) = review_ref {
                    let record = self.reviews.get(review).ok_or(LifecycleError::ReviewNotFound(*review))?;
                    if &record.tech_id != tech_id {
                        return Err(inconsistent("review belongs to another technology"));
                    }
                }
                if *cancelled_proposal != self.pending_proposal(tech_id).map(|p| p.id) {
                    return Err(inconsistent("cancelled proposal"));
                }
                Ok(())
            }
            DomainEvent::RequirementAdded(req) => {
                self.active(&req.tech_id)?;
                require_text(&req.description, LifecycleError::InvalidAmendment("requirement description is empty".into()))?;
                RiskRegister::check_requirement(&req.verification, &req.validation)?;
                if req.id != self.register.next_requirement_id() || !req.linked_risks.is_empty() {
                    return Err(inconsistent("requirement id"));
                }
                Ok(())
            }
            DomainEvent::RiskAdded(entry) => {
                let req = self.register.requirement(entry.requirement_id)?;
                self.active(&req.tech_id)?;
                let expected = self.register.prepare_risk(
                    entry.id,
                    &crate::risk::NewRisk {
                        requirement_id: entry.requirement_id,
                        p_failure: entry.p_failure,
                        value: entry.value as i64,
                        sim_to_real: entry.sim_to_real,
                        mitigation: entry.mitigation.clone(),
                        test_strategy: entry.test_strategy.clone(),
                    },
                )?;
                if &expected != entry || entry.id != self.register.next_risk_id() {
                    return Err(inconsistent("risk entry"));
                }
                Ok(())
            }
            DomainEvent::RiskMitigated { risk_id, mitigation, .. } => {
                let entry = self.register.risk(*risk_id)?;
                if let Some(tech) = self.register.tech_of(entry) {
                    self.active(tech)?;
                }
                require_text(mitigation, LifecycleError::MissingRationale)
            }
            DomainEvent::ScorecardRecorded(card) => {
                self.active(&card.tech_id)?;
                let max = self.policy.score_max;
                if let Some(item) = card.items.iter().find(|i| i.score > max) {
                    return Err(RiskError::ScoreOutOfBounds {
                        item: item.item_id.clone(),
                        score: item.score as i64,
                        max,
                    }
                    .into());
                }
                if card.total != card.items.iter().map(|i| i.score).sum::<u32>()
                    || card.id != self.register.next_scorecard_id()
                {
                    return Err(inconsistent("scorecard"));
                }
                Ok(())
            }
        }
    }

    fn check_new_id(&self, tech_id: &TechId, name: &str) -> Check {
        require_text(name, LifecycleError::MissingName)?;
        if !tech_id.is_valid() {
            return Err(LifecycleError::InvalidComponents(format!("'{tech_id}' is not a valid id")));
        }
        if self.technologies.contains_key(tech_id) {
            return Err(LifecycleError::DuplicateTechnology(tech_id.clone()));
        }
        Ok(())
    }

    fn check_register(
        &self,
        tech_id: &TechId,
        name: &str,
        kind: TechKind,
        level: TrlLevel,
        components: &[TechId],
        justification: &str,
    ) -> Check {
        self.check_new_id(tech_id, name)?;
        validate_transition(None, level, TransitionCause::Initiation)
            .into_result()
            .map_err(LifecycleError::IllegalTransition)?;
        if kind != TechKind::Composition {
            if !components.is_empty() {
                return Err(LifecycleError::InvalidComponents(
                    "only compositions have components".into(),
                ));
            }
            if level > TrlLevel::MIN && justification.trim().is_empty() {
                return Err(LifecycleError::MissingJustification);
            }
            return Ok(());
        }
        if components.is_empty() {
            return Err(LifecycleError::InvalidComponents(
                "a composition needs at least one component".into(),
            ));
        }
        let mut seen = std::collections::BTreeSet::new();
        let mut lowest = TrlLevel::MAX;
        for id in components {
            if !seen.insert(id) {
                return Err(LifecycleError::InvalidComponents(format!("{id} listed twice")));
            }
            let component = self
                .technologies
                .get(id)
                .ok_or_else(|| ModelError::UnresolvedComponent(id.clone()))?;
            if !component.is_active() {
                return Err(LifecycleError::TechnologyArchived(id.clone()));
            }
            lowest = lowest.min(system_trl_detailed(component, &self.technologies)?.level);
        }
        if level != lowest {
            return Err(LifecycleError::CompositionLevelMismatch { expected: lowest });
        }
        Ok(())
    }

    // ---- application ----

    /// Applies an event that already passed [`Portfolio::validate`].
    pub fn apply(&mut self, seq: u64, ts: DateTime<Utc>, event: &DomainEvent) {
        self.last_seq = seq;
        self.last_event_at = Some(ts);
        match event {
            DomainEvent::TechnologyRegistered {
                tech_id,
                name,
                tech_kind,
                level,
                components,
                justification,
            } => {
                self.technologies.insert(
                    tech_id.clone(),
                    Technology {
                        id: tech_id.clone(),
                        name: name.clone(),
                        kind: *tech_kind,
                        initiation_level: *level,
                        current_level: *level,
                        components: components.clone(),
                        status: TechStatus::Active,
                        forked_from: None,
                    },
                );
                self.cards
                    .insert(tech_id.clone(), TrlCard::new(tech_id.clone(), CardVersion::initial(ts)));
                self.push_transition(seq, ts, tech_id, None, *level, TransitionCause::Initiation, None, justification);
            }
            DomainEvent::TechnologyForked {
                tech_id,
                parent_id,
                name,
                parent_level,
                level,
                rationale,
            } => {
                let parent = &self.technologies[parent_id];
                let child = Technology {
                    id: tech_id.clone(),
                    name: name.clone(),
                    kind: parent.kind,
                    initiation_level: *level,
                    current_level: *level,
                    components: Vec::new(),
                    status: TechStatus::Active,
                    forked_from: Some(parent_id.clone()),
                };
                let mut first = CardVersion::initial(ts);
                first.change = CardChange::Forked {
                    parent: parent_id.clone(),
                };
                first.implicit_knowledge = self.cards[parent_id].latest().implicit_knowledge.clone();
                self.technologies.insert(tech_id.clone(), child);
                self.cards.insert(tech_id.clone(), TrlCard::new(tech_id.clone(), first));
                self.push_transition(
                    seq,
                    ts,
                    tech_id,
                    Some(*parent_level),
                    *level,
                    TransitionCause::ForkChildCreated,
                    None,
                    rationale,
                );
            }
            DomainEvent::TechnologyArchived { tech_id, .. } => {
                if let Some(tech) = self.technologies.get_mut(tech_id) {
                    tech.status = TechStatus::Archived;
                }
                self.cancel_pending(tech_id);
            }
            DomainEvent::CardAmended { tech_id, amendment, .. } => {
                let level = self.technologies[tech_id].current_level;
                let card = self.cards.get_mut(tech_id).expect("validated");
                let next = amendment.apply(card.latest(), level, ts);
                card.push(next);
            }
            DomainEvent::GraduationProposed {
                proposal_id,
                tech_id,
                from_level,
                card_version,
            } => {
                self.proposals.insert(
                    *proposal_id,
                    GraduationProposal {
                        id: *proposal_id,
                        tech_id: tech_id.clone(),
                        from_level: *from_level,
                        card_version_at_proposal: *card_version,
                        created_at: ts,
                        status: ProposalStatus::Pending,
                    },
                );
            }
            DomainEvent::ReviewRecorded {
                review_id,
                proposal_id,
                tech_id,
                level_under_review,
                panel,
                outcome,
                notes,
            } => {
                if let Some(p) = self.proposals.get_mut(proposal_id) {
                    p.status = ProposalStatus::Decided;
                }
                self.reviews.insert(
                    *review_id,
                    ReviewRecord {
                        id: *review_id,
                        proposal_id: *proposal_id,
                        tech_id: tech_id.clone(),
                        level_under_review: *level_under_review,
                        panel: panel.clone(),
                        outcome: outcome.clone(),
                        notes: notes.clone(),
                        decided_at: ts,
                        postmortem: None,
                    },
                );
                match outcome {
                    ReviewOutcome::Graduate => {
                        let to = level_under_review.next().expect("validated");
                        self.technologies.get_mut(tech_id).expect("validated").current_level = to;
                        let card = self.cards.get_mut(tech_id).expect("validated");
                        let mut next = card.latest().clone();
                        next.version_no += 1;
                        next.created_at = ts;
                        next.change = CardChange::Graduated {
                            from_level: *level_under_review,
                            to_level: to,
                            review_id: *review_id,
                        };
                        card.push(next);
                        self.push_transition(
                            seq,
                            ts,
                            tech_id,
                            Some(*level_under_review),
                            to,
                            TransitionCause::Graduation,
                            Some(*review_id),
                            notes,
                        );
                    }
                    ReviewOutcome::Return { tasks } => {
                        self.tasks
                            .entry(tech_id.clone())
                            .or_default()
                            .extend(tasks.iter().cloned().map(|task| AttachedTask {
                                review_id: *review_id,
                                task,
                            }));
                    }
                }
            }
            DomainEvent::PostmortemRecorded { review_id, notes } => {
                if let Some(review) = self.reviews.get_mut(review_id) {
                    review.postmortem = Some(notes.clone());
                }
            }
            DomainEvent::TechnologyRegressed {
                tech_id,
                from_level,
                to_level,
                rationale,
                review_ref,
                ..
            } => {
                self.cancel_pending(tech_id);
                self.technologies.get_mut(tech_id).expect("validated").current_level = *to_level;
                self.push_transition(
                    seq,
                    ts,
                    tech_id,
                    Some(*from_level),
                    *to_level,
                    TransitionCause::Regression,
                    *review_ref,
                    rationale,
                );
            }
            DomainEvent::RequirementAdded(req) => self.register.insert_requirement(req.clone()),
            DomainEvent::RiskAdded(entry) => self.register.insert_risk(entry.clone()),
            DomainEvent::RiskMitigated {
                risk_id,
                mitigation,
                test_strategy,
            } => {
                if let Some(entry) = self.register.risks.get_mut(risk_id) {
                    entry.mitigation = Some(mitigation.trim().to_string());
                    if let Some(strategy) = test_strategy.as_deref().map(str::trim).filter(|s| !s.is_empty()) {
                        entry.test_strategy = Some(strategy.to_string());
                    }
                }
            }
            DomainEvent::ScorecardRecorded(card) => {
                self.register.scorecards.insert(card.id, card.clone());
            }
        }
    }

    /// Validates, then applies.
    pub fn apply_checked(
        &mut self,
        seq: u64,
        ts: DateTime<Utc>,
        event: &DomainEvent,
        gates: &GateRegistry,
    ) -> Check {
        self.validate(event, gates)?;
        self.apply(seq, ts, event);
        Ok(())
    }

    fn cancel_pending(&mut self, tech_id: &TechId) {
        for p in self.proposals.values_mut() {
            if &p.tech_id == tech_id && p.status == ProposalStatus::Pending {
                p.status = ProposalStatus::Cancelled;
            }
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn push_transition(
        &mut self,
        seq: u64,
        ts: DateTime<Utc>,
        tech_id: &TechId,
        from: Option<TrlLevel>,
        to: TrlLevel,
        cause: TransitionCause,
        review_ref: Option<ReviewId>,
        rationale: &str,
    ) {
        self.transitions.push(TransitionEvent {
            seq,
            tech_id: tech_id.clone(),
            from_level: from,
            to_level: to,
            cause,
            timestamp: ts,
            review_ref,
            rationale: rationale.to_string(),
        });
    }
}

fn require_text(text: &str, err: LifecycleError) -> Check {
    if text.trim().is_empty() {
        Err(err)
    } else {
        Ok(())
    }
}

fn inconsistent(what: &str) -> LifecycleError {
    LifecycleError::InconsistentEvent(what.to_string())
}
