//! A seeded example portfolio: a Bayesian optimization algorithm that
//! enters at level 1, climbs to 3, is sent back to 2 after its review
//! finds a gap in the surrogate testbed, then climbs to 4.

use chrono::{DateTime, Duration, TimeZone, Utc};

use crate::card::{CardAmendment, PanelMember};
use crate::clock::{ManualClock, SystemClock};
use crate::engine::{Engine, NewTechnology};
use crate::error::Result;
use crate::gates::TESTBED_SECTION;
use crate::ids::TechId;
use crate::level::TrlLevel;
use crate::lifecycle::{ReviewOutcome, TaskItem};
use crate::policy::role;
use crate::risk::NewRisk;
use crate::store::EventStore;
use crate::technology::TechKind;

pub const DEMO_TECH: &str = "bo-algorithm";

/// First event timestamp of the demo.
pub fn demo_start() -> DateTime<Utc> {
    Utc.with_ymd_and_hms(2024, 1, 8, 9, 0, 0).single().expect("valid date")
}

fn lvl(v: i64) -> TrlLevel {
    TrlLevel::new(v).expect("static level")
}

fn panel(members: &[(&str, &str)]) -> Vec<PanelMember> {
    members.iter().map(|(r, p)| PanelMember::new(*r, *p)).collect()
}

/// Seeds the demo into `engine` using a manual clock, then puts a system
/// clock back. Returns the demo technology id.
pub fn seed<S: EventStore>(engine: &mut Engine<S>) -> Result<TechId> {
    let clock = ManualClock::at(demo_start());
    engine.set_clock(Box::new(clock.clone()));
    let result = seed_with(engine, &clock);
    engine.set_clock(Box::new(SystemClock));
    result
}

fn seed_with<S: EventStore>(engine: &mut Engine<S>, clock: &ManualClock) -> Result<TechId> {
    let days = |n| clock.advance(Duration::days(n));
    let research = [(role::RESEARCH_LEAD, "ana"), (role::RESEARCHER, "bo")];
    let engineering = [
        (role::RESEARCH_LEAD, "ana"),
        (role::APPLIED_AI_ENGINEER, "chen"),
        (role::SOFTWARE_ENGINEER, "dee"),
    ];

    let tech = engine
        .register_technology(
            NewTechnology::new(
                "Bayesian Optimization",
                TechKind::Algorithm,
                lvl(1),
                "Proof of principle exists from earlier hyperparameter tuning work",
            )
            .with_id(DEMO_TECH),
        )?
        .technology
        .id;
    let amend = |engine: &mut Engine<S>, section: &str, text: &str| {
        engine.amend_card(&tech, CardAmendment::new(section, text)).map(|_| ())
    };
    amend(engine, "owners", "ana")?;
    amend(engine, "reviewers", "bo, chen")?;
    amend(engine, "status", "exploratory")?;
    amend(engine, "code-version", "0.1.0")?;
    amend(engine, "model-version", "0.1.0")?;
    amend(engine, "data-version", "1.0.0")?;
    amend(engine, "modeling-assumptions", "Objective is smooth enough for a Matern-5/2 kernel")?;
    amend(engine, "dataset-biases", "Benchmarks favour low-dimensional search spaces")?;
    amend(engine, "corner-cases", "Categorical parameters with many levels")?;
    amend(engine, "working-group", "research-lead=ana, applied-ai-engineer=chen")?;

    days(6);
    amend(engine, "experiment-report", "Beats random search on 9 of 12 benchmark functions")?;
    let p = engine.propose_graduation(&tech, None)?;
    days(2);
    engine.record_review(p.id, panel(&research), ReviewOutcome::Graduate, "Results hold up")?;

    days(10);
    engine.amend_card(
        &tech,
        CardAmendment::new(TESTBED_SECTION, "Surrogate objectives built from logged training runs").titled("Surrogate testbed"),
    )?;
    let req = engine.add_requirement(
        &tech,
        "Find a configuration within 2% of the best known in 50 evaluations",
        "Run on the surrogate testbed with 20 seeds",
        "Compare against tuned configurations from production runs",
    )?;
    engine.add_risk(NewRisk {
        requirement_id: req.id,
        p_failure: 0.4,
        value: 6,
        sim_to_real: true,
        mitigation: Some("Spot-check surrogate optima on real training jobs".into()),
        test_strategy: Some("Weekly comparison job".into()),
    })?;
    amend(engine, "requirements-doc", "Requirements REQ-1 with verification and validation")?;
    let p = engine.propose_graduation(&tech, None)?;
    days(3);
    engine.record_review(p.id, panel(&research), ReviewOutcome::Graduate, "Requirements are testable")?;

    days(14);
    amend(engine, "engineering-checkpoints", "Weekly checkpoint: acquisition function swap")?;
    let p = engine.propose_graduation(&tech, None)?;
    days(2);
    let review = engine.record_review(
        p.id,
        panel(&engineering),
        ReviewOutcome::Return {
            tasks: vec![TaskItem {
                description: "Add real-job noise to the surrogate testbed".into(),
                quantitative_remark: Some("regret gap under 5% on 10 real jobs".into()),
            }],
        },
        "Surrogate optima do not transfer to real jobs",
    )?;
    engine.regress(
        &tech,
        lvl(2),
        "Surrogate testbed misses the noise of real training runs",
        Some(review.review.id),
    )?;

    days(9);
    amend(engine, "modeling-assumptions", "Observation noise is heteroscedastic across seeds")?;
    let p = engine.propose_graduation(&tech, None)?;
    days(2);
    engine.record_review(p.id, panel(&research), ReviewOutcome::Graduate, "Testbed fixed")?;

    days(12);
    amend(engine, "engineering-checkpoints", "Noise model validated on 30 real jobs")?;
    amend(engine, "status", "in development")?;
    amend(engine, "code-version", "0.3.0")?;
    let p = engine.propose_graduation(&tech, None)?;
    days(3);
    let graduated = engine.record_review(p.id, panel(&engineering), ReviewOutcome::Graduate, "Ready for development")?;
    engine.record_postmortem(
        graduated.review.id,
        "The earlier regression cost three weeks; real-job spot checks now run from level 2",
    )?;
    Ok(tech)
}
