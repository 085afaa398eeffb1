//! Graduation gates.
//!
//! Each gate is a strategy behind the [`Gate`] trait, registered by id in a
//! [`GateRegistry`]. The level policy names the gates to run when a
//! technology proposes to leave a level, so organizations can switch gates
//! on and off without touching code.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::card::CardVersion;
use crate::level::TrlLevel;
use crate::risk::RiskRegister;
use crate::technology::Technology;

pub const REQUIREMENTS_DOC: &str = "requirements-doc";
pub const ASSUMPTIONS_AND_LIMITATIONS: &str = "assumptions-and-limitations";
pub const ETHICS_REVIEW: &str = "ethics-review";
pub const SIM_TO_REAL_RISK: &str = "sim-to-real-risk";
pub const TEST_SCORECARD: &str = "test-scorecard";
pub const WORKING_GROUP: &str = "working-group";

/// Level-2 deliverable declaring a simulated or surrogate-data testbed.
pub const TESTBED_SECTION: &str = "testbed";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GateCheck {
    pub gate_id: String,
    pub satisfied: bool,
    pub evidence: String,
}

impl GateCheck {
    /// A passing check. Empty evidence cannot satisfy a gate, so it yields a
    /// failing check instead.
    pub fn pass(gate_id: &str, evidence: impl Into<String>) -> Self {
        let evidence = evidence.into();
        GateCheck {
            gate_id: gate_id.to_string(),
            satisfied: !evidence.trim().is_empty(),
            evidence,
        }
    }

    pub fn fail(gate_id: &str, reason: impl Into<String>) -> Self {
        GateCheck {
            gate_id: gate_id.to_string(),
            satisfied: false,
            evidence: reason.into(),
        }
    }
}

/// Everything a gate may look at.
pub struct GateContext<'a> {
    pub tech: &'a Technology,
    pub card: &'a CardVersion,
    pub register: &'a RiskRegister,
}

pub trait Gate: Send + Sync {
    fn id(&self) -> &'static str;
    fn describe(&self) -> &'static str;
    fn evaluate(&self, ctx: &GateContext<'_>) -> GateCheck;
}

struct RequirementsDoc;

impl Gate for RequirementsDoc {
    fn id(&self) -> &'static str {
        REQUIREMENTS_DOC
    }

    fn describe(&self) -> &'static str {
        "at least one requirement with verification and validation steps"
    }

    fn evaluate(&self, ctx: &GateContext<'_>) -> GateCheck {
        let ids: Vec<String> = ctx
            .register
            .requirements_of(&ctx.tech.id)
            .map(|r| r.id.to_string())
            .collect();
        if ids.is_empty() {
            GateCheck::fail(self.id(), "no requirements recorded")
        } else {
            GateCheck::pass(self.id(), ids.join(", "))
        }
    }
}

struct AssumptionsAndLimitations;

impl Gate for AssumptionsAndLimitations {
    fn id(&self) -> &'static str {
        ASSUMPTIONS_AND_LIMITATIONS
    }

    fn describe(&self) -> &'static str {
        "modeling assumptions are written down on the card"
    }

    fn evaluate(&self, ctx: &GateContext<'_>) -> GateCheck {
        let n = ctx.card.implicit_knowledge.modeling_assumptions.len();
        if n == 0 {
            GateCheck::fail(self.id(), "card lists no modeling assumptions")
        } else {
            GateCheck::pass(self.id(), format!("{n} modeling assumption(s) on card v{}", ctx.card.version_no))
        }
    }
}

struct EthicsReview;

impl Gate for EthicsReview {
    fn id(&self) -> &'static str {
        ETHICS_REVIEW
    }

    fn describe(&self) -> &'static str {
        "an ethics review deliverable is attached"
    }

    fn evaluate(&self, ctx: &GateContext<'_>) -> GateCheck {
        let found = ctx
            .card
            .deliverables
            .values()
            .flatten()
            .find(|d| d.section_id == ETHICS_REVIEW);
        match found {
            Some(d) => GateCheck::pass(self.id(), format!("{}: {}", d.title, d.content)),
            None => GateCheck::fail(self.id(), "no ethics-review deliverable"),
        }
    }
}

struct SimToRealRisk;

impl Gate for SimToRealRisk {
    fn id(&self) -> &'static str {
        SIM_TO_REAL_RISK
    }

    fn describe(&self) -> &'static str {
        "a declared simulation or surrogate testbed is covered by a sim-to-real risk entry"
    }

    fn evaluate(&self, ctx: &GateContext<'_>) -> GateCheck {
        let level_two = TrlLevel::new(2).expect("static level");
        let declared = ctx
            .card
            .deliverables_at(level_two)
            .iter()
            .any(|d| d.section_id == TESTBED_SECTION);
        if !declared {
            return GateCheck::pass(self.id(), "no simulation or surrogate testbed declared");
        }
        let ids: Vec<String> = ctx
            .register
            .risks_of(&ctx.tech.id)
            .filter(|r| r.sim_to_real)
            .map(|r| r.id.to_string())
            .collect();
        if ids.is_empty() {
            GateCheck::fail(self.id(), "testbed declared but no sim-to-real risk entry")
        } else {
            GateCheck::pass(self.id(), ids.join(", "))
        }
    }
}

struct TestScorecard;

impl Gate for TestScorecard {
    fn id(&self) -> &'static str {
        TEST_SCORECARD
    }

    fn describe(&self) -> &'static str {
        "a non-empty test scorecard is attached"
    }

    fn evaluate(&self, ctx: &GateContext<'_>) -> GateCheck {
        match ctx
            .register
            .scorecards_of(&ctx.tech.id)
            .filter(|s| s.is_evidence())
            .last()
        {
            Some(s) => GateCheck::pass(self.id(), format!("{} total {}/{} items", s.id, s.total, s.items.len())),
            None => GateCheck::fail(self.id(), "no scorecard with items"),
        }
    }
}

struct WorkingGroup;

impl Gate for WorkingGroup {
    fn id(&self) -> &'static str {
        WORKING_GROUP
    }

    fn describe(&self) -> &'static str {
        "an interdisciplinary working group of at least two distinct roles is named"
    }

    fn evaluate(&self, ctx: &GateContext<'_>) -> GateCheck {
        let roles = ctx.card.working_group_roles();
        if roles.len() >= 2 {
            GateCheck::pass(self.id(), roles.into_iter().collect::<Vec<_>>().join(", "))
        } else {
            GateCheck::fail(self.id(), format!("working group has {} distinct role(s)", roles.len()))
        }
    }
}

/// Gates by id.
pub struct GateRegistry {
    gates: BTreeMap<&'static str, Box<dyn Gate>>,
}

impl GateRegistry {
    pub fn empty() -> Self {
        GateRegistry {
            gates: BTreeMap::new(),
        }
    }

    pub fn builtin() -> Self {
        let mut registry = GateRegistry::empty();
        registry.register(Box::new(RequirementsDoc));
        registry.register(Box::new(AssumptionsAndLimitations));
        registry.register(Box::new(EthicsReview));
        registry.register(Box::new(SimToRealRisk));
        registry.register(Box::new(TestScorecard));
        registry.register(Box::new(WorkingGroup));
        registry
    }

    pub fn register(&mut self, gate: Box<dyn Gate>) {
        self.gates.insert(gate.id(), gate);
    }

    pub fn get(&self, id: &str) -> Option<&dyn Gate> {
        self.gates.get(id).map(|g| g.as_ref())
    }

    pub fn contains(&self, id: &str) -> bool {
        self.gates.contains_key(id)
    }

    pub fn ids(&self) -> impl Iterator<Item = &'static str> + '_ {
        self.gates.keys().copied()
    }

    /// Runs the named gates in order. Unknown ids fail closed.
    pub fn evaluate<'s>(
        &self,
        ids: impl IntoIterator<Item = &'s String>,
        ctx: &GateContext<'_>,
    ) -> Vec<GateCheck> {
        ids.into_iter()
            .map(|id| match self.get(id) {
                Some(gate) => gate.evaluate(ctx),
                None => GateCheck::fail(id, "gate is not registered"),
            })
            .collect()
    }
}

impl Default for GateRegistry {
    fn default() -> Self {
        GateRegistry::builtin()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::card::{section, CardAmendment};
    use crate::ids::{RequirementId, ScorecardId};
    use crate::risk::{build_scorecard, NewRisk, Requirement, ScoreInput};
    use crate::technology::{TechKind, TechStatus};
    use chrono::{TimeZone, Utc};

    fn tech(level: i64) -> Technology {
        Technology {
            id: "t".into(),
            name: "t".into(),
            kind: TechKind::Model,
            initiation_level: TrlLevel::new(level).unwrap(),
            current_level: TrlLevel::new(level).unwrap(),
            components: vec![],
            status: TechStatus::Active,
            forked_from: None,
        }
    }

    fn amend(card: CardVersion, amendments: &[CardAmendment], level: i64) -> CardVersion {
        let at = Utc.timestamp_opt(1, 0).unwrap();
        amendments
            .iter()
            .fold(card, |c, a| a.apply(&c, TrlLevel::new(level).unwrap(), at))
    }

    fn run(id: &str, tech: &Technology, card: &CardVersion, register: &RiskRegister) -> GateCheck {
        let ctx = GateContext { tech, card, register };
        GateRegistry::builtin().get(id).unwrap().evaluate(&ctx)
    }

    fn with_requirement() -> RiskRegister {
        let mut reg = RiskRegister::default();
        reg.insert_requirement(Requirement {
            id: RequirementId(1),
            tech_id: "t".into(),
            description: "d".into(),
            verification: "v".into(),
            validation: "v".into(),
            linked_risks: vec![],
        });
        reg
    }

    #[test]
    fn pass_requires_evidence() {
        assert!(!GateCheck::pass("x", "  ").satisfied);
        assert!(GateCheck::pass("x", "ok").satisfied);
    }

    #[test]
    fn requirements_gate() {
        let t = tech(2);
        let card = CardVersion::initial(Utc.timestamp_opt(0, 0).unwrap());
        assert!(!run(REQUIREMENTS_DOC, &t, &card, &RiskRegister::default()).satisfied);
        assert!(run(REQUIREMENTS_DOC, &t, &card, &with_requirement()).satisfied);
    }

    #[test]
    fn sim_to_real_only_bites_with_a_testbed() {
        let t = tech(4);
        let base = CardVersion::initial(Utc.timestamp_opt(0, 0).unwrap());
        let mut reg = with_requirement();
        assert!(run(SIM_TO_REAL_RISK, &t, &base, &reg).satisfied);

        let card = amend(
            base,
            &[CardAmendment::new(TESTBED_SECTION, "physics simulator").at_level(TrlLevel::new(2).unwrap())],
            4,
        );
        assert!(!run(SIM_TO_REAL_RISK, &t, &card, &reg).satisfied);

        let entry = reg
            .prepare_risk(
                reg.next_risk_id(),
                &NewRisk {
                    requirement_id: RequirementId(1),
                    p_failure: 0.1,
                    value: 3,
                    sim_to_real: true,
                    mitigation: Some("fallback heuristic".into()),
                    test_strategy: Some("shadow test on real data".into()),
                },
            )
            .unwrap();
        reg.insert_risk(entry);
        assert!(run(SIM_TO_REAL_RISK, &t, &card, &reg).satisfied);
    }

    #[test]
    fn ethics_assumptions_group_and_scorecard() {
        let t = tech(5);
        let base = CardVersion::initial(Utc.timestamp_opt(0, 0).unwrap());
        let reg = RiskRegister::default();
        assert!(!run(ETHICS_REVIEW, &t, &base, &reg).satisfied);
        assert!(!run(ASSUMPTIONS_AND_LIMITATIONS, &t, &base, &reg).satisfied);
        assert!(!run(WORKING_GROUP, &t, &base, &reg).satisfied);

        let card = amend(
            base.clone(),
            &[
                CardAmendment::new(ETHICS_REVIEW, "approved by board"),
                CardAmendment::new(section::MODELING_ASSUMPTIONS, "stationary process"),
                CardAmendment::new(section::WORKING_GROUP, "product-manager=kim"),
            ],
            5,
        );
        assert!(run(ETHICS_REVIEW, &t, &card, &reg).satisfied);
        assert!(run(ASSUMPTIONS_AND_LIMITATIONS, &t, &card, &reg).satisfied);
        assert!(!run(WORKING_GROUP, &t, &card, &reg).satisfied);
        let card = amend(card, &[CardAmendment::new(section::WORKING_GROUP, "software-engineer=li")], 5);
        assert!(run(WORKING_GROUP, &t, &card, &reg).satisfied);

        let mut reg = RiskRegister::default();
        reg.scorecards.insert(ScorecardId(1), build_scorecard(ScorecardId(1), "t".into(), &[], 1).unwrap());
        assert!(!run(TEST_SCORECARD, &t, &base, &reg).satisfied);
        let items = [ScoreInput { item_id: "a".into(), description: String::new(), score: 0 }];
        reg.scorecards.insert(ScorecardId(2), build_scorecard(ScorecardId(2), "t".into(), &items, 1).unwrap());
        assert!(run(TEST_SCORECARD, &t, &base, &reg).satisfied);
    }

    #[test]
    fn unknown_gate_fails_closed() {
        let t = tech(1);
        let card = CardVersion::initial(Utc.timestamp_opt(0, 0).unwrap());
        let reg = RiskRegister::default();
        let ctx = GateContext { tech: &t, card: &card, register: &reg };
        let ids = vec!["nope".to_string()];
        let checks = GateRegistry::builtin().evaluate(&ids, &ctx);
        assert!(!checks[0].satisfied);
    }
}
