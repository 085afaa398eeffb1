use chrono::{Duration, TimeZone, Utc};
use trl_core::card::{CardAmendment, PanelMember};
use trl_core::clock::ManualClock;
use trl_core::error::{Error, ErrorCode, LifecycleError};
use trl_core::gates::GateRegistry;
use trl_core::lifecycle::{ReviewOutcome, TaskItem};
use trl_core::policy::role;
use trl_core::risk::NewRisk;
use trl_core::store::MemoryStore;
use trl_core::transition::IllegalReason;
use trl_core::{Engine, ForkRequest, LevelPolicy, NewTechnology, TechId, TechKind, TransitionCause, TrlLevel};

fn lvl(v: i64) -> TrlLevel {
    TrlLevel::new(v).unwrap()
}

fn engine() -> (Engine<MemoryStore>, ManualClock) {
    let clock = ManualClock::at(Utc.with_ymd_and_hms(2025, 3, 1, 12, 0, 0).unwrap());
    let engine = Engine::with_parts(
        MemoryStore::new(),
        LevelPolicy::default(),
        GateRegistry::builtin(),
        Box::new(clock.clone()),
    )
    .unwrap();
    (engine, clock)
}

fn code(err: Error) -> &'static str {
    err.code()
}

fn lifecycle(err: Error) -> LifecycleError {
    match err {
        Error::Lifecycle(e) => e,
        other => panic!("expected a lifecycle error, got {other:?}"),
    }
}

fn register(engine: &mut Engine<MemoryStore>, name: &str, level: i64) -> TechId {
    engine
        .register_technology(NewTechnology::new(name, TechKind::Model, lvl(level), "prior work"))
        .unwrap()
        .technology
        .id
}

fn panel(roles: &[&str]) -> Vec<PanelMember> {
    roles.iter().enumerate().map(|(i, r)| PanelMember::new(*r, format!("p{i}"))).collect()
}

#[test]
fn register_creates_card_and_initiation() {
    let (mut engine, _) = engine();
    let out = engine
        .register_technology(NewTechnology::new("Ranker v2", TechKind::Model, lvl(4), "offline wins"))
        .unwrap();
    assert_eq!(out.technology.id.as_str(), "ranker-v2");
    assert_eq!(out.event.cause, TransitionCause::Initiation);
    assert_eq!(out.event.from_level, None);
    assert_eq!(engine.state().card(&out.technology.id).unwrap().versions.len(), 1);

    let dup = engine
        .register_technology(NewTechnology::new("Ranker v2", TechKind::Model, lvl(1), "x"))
        .unwrap();
    assert_eq!(dup.technology.id.as_str(), "ranker-v2-2");

    let err = engine
        .register_technology(NewTechnology::new("No reason", TechKind::Model, lvl(3), " "))
        .unwrap_err();
    assert_eq!(code(err), "MissingJustification");
}

#[test]
fn graduate_with_review_then_postmortem() {
    let (mut engine, clock) = engine();
    let id = register(&mut engine, "Tagger", 0);
    let err = engine.propose_graduation(&id, None).unwrap_err();
    assert_eq!(lifecycle(err), LifecycleError::CardIncomplete(vec!["research-plan".into()]));

    engine.amend_card(&id, CardAmendment::new("research-plan", "try a CRF")).unwrap();
    let proposal = engine.propose_graduation(&id, None).unwrap();
    assert_eq!(code(engine.propose_graduation(&id, None).unwrap_err()), "PendingProposalExists");

    clock.advance(Duration::days(3));
    let result = engine
        .record_review(proposal.id, panel(&[role::RESEARCH_LEAD]), ReviewOutcome::Graduate, "fine")
        .unwrap();
    assert_eq!(result.technology.current_level, lvl(1));
    let transition = result.transition.unwrap();
    assert_eq!((transition.from_level, transition.to_level), (Some(lvl(0)), lvl(1)));
    assert_eq!(transition.review_ref, Some(result.review.id));
    // registration, amendment, graduation
    assert_eq!(engine.state().card(&id).unwrap().versions.len(), 3);

    let review = engine.record_postmortem(result.review.id, "went smoothly").unwrap();
    assert_eq!(review.postmortem.as_deref(), Some("went smoothly"));
    assert_eq!(code(engine.record_postmortem(result.review.id, "again").unwrap_err()), "PostmortemAlreadyRecorded");
}

#[test]
fn returned_review_attaches_tasks() {
    let (mut engine, _) = engine();
    let id = register(&mut engine, "Tagger", 0);
    engine.amend_card(&id, CardAmendment::new("research-plan", "plan")).unwrap();
    let p = engine.propose_graduation(&id, None).unwrap();
    let empty = engine.record_review(p.id, panel(&[role::RESEARCH_LEAD]), ReviewOutcome::Return { tasks: vec![] }, "");
    assert_eq!(code(empty.unwrap_err()), "EmptyTaskListOnReturn");

    let tasks = vec![TaskItem {
        description: "rerun with 5 seeds".into(),
        quantitative_remark: Some("std below 0.5".into()),
    }];
    let result = engine
        .record_review(p.id, panel(&[role::RESEARCH_LEAD]), ReviewOutcome::Return { tasks }, "noisy")
        .unwrap();
    assert!(result.transition.is_none());
    assert_eq!(result.technology.current_level, lvl(0));
    assert_eq!(engine.state().tasks.len(), 1);
    assert_eq!(code(engine.record_postmortem(result.review.id, "x").unwrap_err()), "NotAGraduation");
    // decided proposals cannot be reviewed twice
    let again = engine.record_review(p.id, panel(&[role::RESEARCH_LEAD]), ReviewOutcome::Graduate, "");
    assert_eq!(code(again.unwrap_err()), "ProposalNotPending");
}

#[test]
fn panel_must_cover_policy_roles() {
    let (mut engine, _) = engine();
    let id = register(&mut engine, "Tagger", 1);
    engine.amend_card(&id, CardAmendment::new("experiment-report", "ok")).unwrap();
    let p = engine.propose_graduation(&id, None).unwrap();
    let err = engine
        .record_review(p.id, panel(&[role::RESEARCH_LEAD]), ReviewOutcome::Graduate, "")
        .unwrap_err();
    assert_eq!(lifecycle(err), LifecycleError::PanelRolesInsufficient(vec![role::RESEARCHER.into()]));
}

#[test]
fn skip_target_rejected() {
    let (mut engine, _) = engine();
    let id = register(&mut engine, "Tagger", 4);
    let err = engine.propose_graduation(&id, Some(lvl(6))).unwrap_err();
    assert_eq!(lifecycle(err), LifecycleError::IllegalTransition(IllegalReason::SkipNotAllowed));
    assert_eq!(code(engine.propose_graduation(&id, Some(lvl(6))).unwrap_err()), "SkipNotAllowed");
}

#[test]
fn level_two_gate_needs_requirement() {
    let (mut engine, _) = engine();
    let id = register(&mut engine, "Tagger", 2);
    engine.amend_card(&id, CardAmendment::new("requirements-doc", "see register")).unwrap();
    let err = engine.propose_graduation(&id, None).unwrap_err();
    assert_eq!(code(err), "GateUnsatisfied");

    let req = engine.add_requirement(&id, "latency < 20ms", "load test", "shadow traffic").unwrap();
    let view = engine
        .add_risk(NewRisk {
            requirement_id: req.id,
            p_failure: 0.9,
            value: 8,
            sim_to_real: false,
            mitigation: None,
            test_strategy: None,
        })
        .unwrap();
    assert!(view.flagged);
    let err = engine.propose_graduation(&id, None).unwrap_err();
    assert_eq!(lifecycle(err), LifecycleError::UnmitigatedFlaggedRisk(vec![view.entry.id]));

    engine.mitigate_risk(view.entry.id, "cache hot paths", Some("p99 alert")).unwrap();
    engine.propose_graduation(&id, None).unwrap();
}

#[test]
fn regression_cancels_pending_proposal() {
    let (mut engine, _) = engine();
    let id = register(&mut engine, "Tagger", 3);
    engine.amend_card(&id, CardAmendment::new("engineering-checkpoints", "weekly")).unwrap();
    let p = engine.propose_graduation(&id, None).unwrap();

    let err = engine.regress(&id, lvl(3), "same level", None).unwrap_err();
    assert_eq!(code(err), "NotLower");
    let err = engine.regress(&id, lvl(2), " ", None).unwrap_err();
    assert_eq!(code(err), "MissingRationale");

    let event = engine.regress(&id, lvl(1), "data leak found", None).unwrap();
    assert_eq!(event.cause, TransitionCause::Regression);
    assert_eq!(engine.state().technology(&id).unwrap().current_level, lvl(1));
    assert!(engine.state().pending_proposal(&id).is_none());
    let review = engine.record_review(p.id, panel(&[role::RESEARCH_LEAD]), ReviewOutcome::Graduate, "");
    assert_eq!(code(review.unwrap_err()), "ProposalNotPending");
}

#[test]
fn fork_copies_implicit_knowledge() {
    let (mut engine, _) = engine();
    let parent = register(&mut engine, "Base", 5);
    engine
        .amend_card(&parent, CardAmendment::new("modeling-assumptions", "iid users"))
        .unwrap();
    let err = engine
        .fork_technology(&parent, ForkRequest { name: "Child".into(), id: None, level: lvl(6), rationale: "x".into() })
        .unwrap_err();
    assert_eq!(code(err), "ChildLevelAboveParent");

    let child = engine
        .fork_technology(&parent, ForkRequest { name: "Child".into(), id: None, level: lvl(5), rationale: "new market".into() })
        .unwrap();
    assert_eq!(child.event.cause, TransitionCause::ForkChildCreated);
    assert_eq!(child.technology.forked_from.as_ref(), Some(&parent));
    let card = engine.state().card(&child.technology.id).unwrap().latest();
    assert_eq!(card.implicit_knowledge.modeling_assumptions, vec!["iid users".to_string()]);
}

#[test]
fn composition_level_is_derived() {
    let (mut engine, _) = engine();
    let a = register(&mut engine, "A", 3);
    let b = register(&mut engine, "B", 7);
    let mut request = NewTechnology::new("System", TechKind::Composition, lvl(0), "");
    request.level = None;
    request.components = vec![a.clone(), b.clone()];
    let sys = engine.register_technology(request.clone()).unwrap().technology;
    assert_eq!(sys.current_level, lvl(3));
    assert_eq!(engine.state().system_trl(&sys.id).unwrap().level, lvl(3));
    assert_eq!(code(engine.propose_graduation(&sys.id, None).unwrap_err()), "CompositionLevelDerived");

    request.name = "Other".into();
    request.level = Some(lvl(5));
    assert_eq!(code(engine.register_technology(request).unwrap_err()), "CompositionLevelMismatch");

    engine.archive(&a, "retired").unwrap();
    let detailed = engine.state().system_trl(&sys.id).unwrap();
    assert_eq!(detailed.level, lvl(7));
    assert_eq!(detailed.excluded_archived, vec![a]);
}

#[test]
fn archived_technology_rejects_commands() {
    let (mut engine, _) = engine();
    let id = register(&mut engine, "Old", 2);
    engine.archive(&id, "superseded").unwrap();
    let err = engine.amend_card(&id, CardAmendment::new("status", "x")).unwrap_err();
    assert_eq!(code(err), "TechnologyArchived");
}

#[test]
fn replay_matches_live_state() {
    let (mut engine, _) = engine();
    trl_core::demo::seed(&mut engine).unwrap();
    assert_eq!(&engine.replayed().unwrap(), engine.state());
}

#[test]
fn risk_scores_survive_reopen() {
    let (mut engine, _) = engine();
    let id = register(&mut engine, "Ranker", 2);
    let req = engine.add_requirement(&id, "recall", "offline eval", "a/b test").unwrap();
    // some products only survive a JSON round trip with exact float parsing
    for (p, v) in (0..=100).flat_map(|i| (1..=10).map(move |v| (i as f64 / 100.0, v))) {
        engine
            .add_risk(NewRisk {
                requirement_id: req.id,
                p_failure: p,
                value: v,
                sim_to_real: false,
                mitigation: None,
                test_strategy: None,
            })
            .unwrap();
    }
    let reopened = Engine::open(MemoryStore::from_log(engine.store().log_text()), LevelPolicy::default()).unwrap();
    assert_eq!(reopened.state(), engine.state());
}
