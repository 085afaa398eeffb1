mod args;
mod render;

use std::net::SocketAddr;
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context};
use chrono::{DateTime, NaiveDate, Utc};
use clap::Parser;
use serde::Serialize;
use trl_core::analytics::{ReportParams, ReportRegistry};
use trl_core::card::{CardAmendment, PanelMember};
use trl_core::error::ErrorCode;
use trl_core::lifecycle::{ReviewOutcome, TaskItem};
use trl_core::risk::{default_checklist, NewRisk, ScoreInput};
use trl_core::store::FileStore;
use trl_core::views;
use trl_core::{workspace, Engine, ForkRequest, NewTechnology, TechId, TechKind, TrlLevel};

use args::{CardCommand, Cli, Command, ReportCommand, ReqCommand, RiskCommand, TechCommand};

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            let code = err
                .downcast_ref::<trl_core::Error>()
                .map_or("InvalidArgument", |e| e.code());
            eprintln!("error: {code}: {err:#}");
            ExitCode::FAILURE
        }
    }
}

/// Prints `value` as JSON, or the human rendering.
fn emit<T: Serialize>(json: bool, value: &T, human: impl FnOnce(&T) -> String) -> anyhow::Result<()> {
    if json {
        println!("{}", serde_json::to_string_pretty(value)?);
    } else {
        print!("{}", human(value));
    }
    Ok(())
}

fn level(v: i64) -> anyhow::Result<TrlLevel> {
    Ok(TrlLevel::new(v).map_err(trl_core::Error::from)?)
}

fn time(text: &str) -> anyhow::Result<DateTime<Utc>> {
    if let Ok(t) = DateTime::parse_from_rfc3339(text) {
        return Ok(t.with_timezone(&Utc));
    }
    let date = NaiveDate::parse_from_str(text, "%Y-%m-%d")
        .with_context(|| format!("'{text}' is neither RFC 3339 nor YYYY-MM-DD"))?;
    Ok(date.and_hms_opt(0, 0, 0).expect("midnight").and_utc())
}

fn id<T: std::str::FromStr>(text: &str, what: &str) -> anyhow::Result<T> {
    text.parse().map_err(|_| anyhow!("'{text}' is not a {what} id"))
}

fn resolve(engine: &Engine<FileStore>, key: &str) -> anyhow::Result<TechId> {
    Ok(engine
        .state()
        .resolve(key)
        .map_err(trl_core::Error::from)?
        .id
        .clone())
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let json = cli.json;
    if let Command::Init { dir, demo } = &cli.command {
        let engine = workspace::init(dir, *demo)?;
        let count = engine.state().technologies.len();
        return emit(json, &serde_json::json!({ "workspace": dir, "technologies": count }), |_| {
            format!("initialized {} ({count} technologies)\n", dir.display())
        });
    }
    let mut engine = workspace::open(&cli.workspace)?;

    match cli.command {
        Command::Init { .. } => unreachable!("handled above"),
        Command::Tech(cmd) => tech(&mut engine, cmd, json),
        Command::Card(cmd) => card(&mut engine, cmd, json),
        Command::Propose { tech, to } => {
            let tech = resolve(&engine, &tech)?;
            let to = to.map(level).transpose()?;
            let proposal = engine.propose_graduation(&tech, to)?;
            emit(json, &proposal, |p| {
                format!("{} proposes {} -> {}\n", p.id, p.tech_id, render::level(p.from_level.next()))
            })
        }
        Command::Proposals => {
            let pending: Vec<_> = engine.state().pending_proposals().cloned().collect();
            emit(json, &pending, |p| render::proposals(p))
        }
        Command::Review(args) => {
            let proposal = id(&args.proposal, "proposal")?;
            let panel = args
                .panel
                .iter()
                .map(|m| PanelMember::parse(m).ok_or_else(|| anyhow!("panel member '{m}' is not role=person")))
                .collect::<anyhow::Result<Vec<_>>>()?;
            let outcome = if args.graduate {
                ReviewOutcome::Graduate
            } else {
                let tasks = args
                    .tasks
                    .iter()
                    .map(|t| match t.split_once("::") {
                        Some((d, r)) => TaskItem {
                            description: d.trim().into(),
                            quantitative_remark: Some(r.trim().into()),
                        },
                        None => TaskItem {
                            description: t.trim().into(),
                            quantitative_remark: None,
                        },
                    })
                    .collect();
                ReviewOutcome::Return { tasks }
            };
            let result = engine.record_review(proposal, panel, outcome, &args.notes)?;
            emit(json, &result, |r| match &r.transition {
                Some(t) => format!("{}: {} graduated to level {}\n", r.review.id, r.technology.id, t.to_level),
                None => format!("{}: returned to {} with tasks\n", r.review.id, r.technology.id),
            })
        }
        Command::Postmortem { review, notes } => {
            let review = engine.record_postmortem(id(&review, "review")?, &notes)?;
            emit(json, &review, |r| format!("post-mortem recorded on {}\n", r.id))
        }
        Command::Regress { tech, to, why, review } => {
            let tech = resolve(&engine, &tech)?;
            let review = review.map(|r| id(&r, "review")).transpose()?;
            let event = engine.regress(&tech, level(to)?, &why, review)?;
            emit(json, &event, |e| format!("{} regressed to level {}\n", e.tech_id, e.to_level))
        }
        Command::Req(cmd) => requirements(&mut engine, cmd, json),
        Command::Risk(cmd) => risks(&mut engine, cmd, json),
        Command::Scorecard { tech, items } => {
            let tech = resolve(&engine, &tech)?;
            if items.is_empty() {
                for (item, description) in default_checklist() {
                    println!("{item}: {description}");
                }
                return Ok(());
            }
            let inputs = items
                .iter()
                .map(|i| {
                    let (item, score) = i.split_once('=').ok_or_else(|| anyhow!("item '{i}' is not item=score"))?;
                    let description = default_checklist()
                        .into_iter()
                        .find(|(id, _)| *id == item.trim())
                        .map_or(String::new(), |(_, d)| d.to_string());
                    Ok(ScoreInput {
                        item_id: item.trim().into(),
                        description,
                        score: score.trim().parse().with_context(|| format!("score in '{i}'"))?,
                    })
                })
                .collect::<anyhow::Result<Vec<_>>>()?;
            let card = engine.score_card(&tech, &inputs)?;
            emit(json, &card, |c| format!("{} total {} over {} items\n", c.id, c.total, c.items.len()))
        }
        Command::Report(cmd) => report(&engine, cmd, json),
        Command::Serve { addr } => {
            let addr: SocketAddr = addr.parse().with_context(|| format!("bad listen address '{addr}'"))?;
            tracing_subscriber::fmt()
                .with_env_filter(
                    tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| "info".into()),
                )
                .init();
            let runtime = tokio::runtime::Runtime::new()?;
            runtime.block_on(trl_api::serve(engine, trl_api::Config::from_env(), addr))?;
            Ok(())
        }
    }
}

fn tech(engine: &mut Engine<FileStore>, cmd: TechCommand, json: bool) -> anyhow::Result<()> {
    match cmd {
        TechCommand::Add { name, kind, level: lvl, why, id, components } => {
            let kind: TechKind = kind.parse().map_err(trl_core::Error::from)?;
            let request = NewTechnology {
                id: id.map(TechId::new),
                name,
                kind,
                level: lvl.map(level).transpose()?,
                justification: why,
                components: components.into_iter().map(TechId::new).collect(),
            };
            let out = engine.register_technology(request)?;
            emit(json, &out, |o| format!("{}\n", o.technology.id))
        }
        TechCommand::List { level: lvl, kind } => {
            let lvl = lvl.map(level).transpose()?;
            let kind = kind
                .map(|k| k.parse::<TechKind>().map_err(trl_core::Error::from))
                .transpose()?;
            emit(json, &views::list(engine.state(), lvl, kind), |items| render::technologies(items))
        }
        TechCommand::Show { tech } => {
            let tech = resolve(engine, &tech)?;
            let detail = views::detail(engine.state(), &tech, engine.gates()).map_err(trl_core::Error::from)?;
            emit(json, &detail, render::detail)
        }
        TechCommand::Fork { parent, name, level: lvl, why, id } => {
            let parent = resolve(engine, &parent)?;
            let request = ForkRequest {
                name,
                id: id.map(TechId::new),
                level: level(lvl)?,
                rationale: why,
            };
            let out = engine.fork_technology(&parent, request)?;
            emit(json, &out, |o| format!("{}\n", o.technology.id))
        }
        TechCommand::Archive { tech, why } => {
            let tech = resolve(engine, &tech)?;
            let out = engine.archive(&tech, &why)?;
            emit(json, &out, |t| format!("{} archived\n", t.id))
        }
    }
}

fn card(engine: &mut Engine<FileStore>, cmd: CardCommand, json: bool) -> anyhow::Result<()> {
    match cmd {
        CardCommand::Show { tech, version } => {
            let tech = resolve(engine, &tech)?;
            let state = engine.state();
            let v = views::card_version(state, &tech, version).map_err(trl_core::Error::from)?;
            let technology = state.technology(&tech).map_err(trl_core::Error::from)?;
            let total = state.card(&tech).map_err(trl_core::Error::from)?.versions.len();
            emit(json, v, |v| render::card(technology, v, total))
        }
        CardCommand::Set { tech, section, text, level: lvl, title } => {
            let tech = resolve(engine, &tech)?;
            let mut amendment = CardAmendment::new(section, text);
            amendment.level = lvl.map(level).transpose()?;
            amendment.title = title;
            let v = engine.amend_card(&tech, amendment)?;
            emit(json, &v, |v| format!("{tech} card v{}\n", v.version_no))
        }
    }
}

fn requirements(engine: &mut Engine<FileStore>, cmd: ReqCommand, json: bool) -> anyhow::Result<()> {
    match cmd {
        ReqCommand::Add { tech, description, verification, validation } => {
            let tech = resolve(engine, &tech)?;
            let req = engine.add_requirement(&tech, &description, &verification, &validation)?;
            emit(json, &req, |r| format!("{}\n", r.id))
        }
        ReqCommand::List { tech } => {
            let tech = resolve(engine, &tech)?;
            let reqs: Vec<_> = engine.state().register.requirements_of(&tech).cloned().collect();
            emit(json, &reqs, |reqs| {
                let mut table = trl_core::analytics::Table::new(&["req", "description", "verification", "validation", "risks"]);
                for r in reqs {
                    let risks: Vec<String> = r.linked_risks.iter().map(|x| x.to_string()).collect();
                    table.row(vec![
                        r.id.to_string(),
                        r.description.clone(),
                        r.verification.clone(),
                        r.validation.clone(),
                        risks.join(","),
                    ]);
                }
                table.render()
            })
        }
    }
}

fn risks(engine: &mut Engine<FileStore>, cmd: RiskCommand, json: bool) -> anyhow::Result<()> {
    match cmd {
        RiskCommand::Add { tech, req, p, value, sim_to_real, mitigation, test_strategy } => {
            let tech = resolve(engine, &tech)?;
            let requirement_id = id(&req, "requirement")?;
            let owner = engine
                .state()
                .register
                .requirement(requirement_id)
                .map_err(trl_core::Error::from)?;
            if owner.tech_id != tech {
                bail!("{requirement_id} belongs to {}, not {tech}", owner.tech_id);
            }
            let view = engine.add_risk(NewRisk {
                requirement_id,
                p_failure: p,
                value,
                sim_to_real,
                mitigation,
                test_strategy,
            })?;
            emit(json, &view, |v| {
                format!("{} risk {:.2}{}\n", v.entry.id, v.entry.risk, if v.flagged { " FLAGGED" } else { "" })
            })
        }
        RiskCommand::List { tech, flagged, threshold } => {
            let tech = resolve(engine, &tech)?;
            let items = views::risks(engine.state(), &tech, flagged, threshold).map_err(trl_core::Error::from)?;
            emit(json, &items, |items| render::risks(items))
        }
        RiskCommand::Mitigate { risk, mitigation, test_strategy } => {
            let entry = engine.mitigate_risk(id(&risk, "risk")?, &mitigation, test_strategy.as_deref())?;
            emit(json, &entry, |e| format!("{} mitigated\n", e.id))
        }
    }
}

fn report(engine: &Engine<FileStore>, cmd: ReportCommand, json: bool) -> anyhow::Result<()> {
    let mut params = ReportParams::at(engine.as_of());
    let as_of = |at: &args::AsOf| at.now.as_deref().map(time).transpose();
    let name = match cmd {
        ReportCommand::TimePerLevel { tech, at } => {
            params.tech = tech.map(|t| resolve(engine, &t)).transpose()?;
            params.now = as_of(&at)?.unwrap_or(params.now);
            "time-per-level"
        }
        ReportCommand::Paths { n, tech } => {
            params.n = Some(n);
            params.tech = tech.map(|t| resolve(engine, &t)).transpose()?;
            "paths"
        }
        ReportCommand::Bottlenecks { at } => {
            params.now = as_of(&at)?.unwrap_or(params.now);
            "bottlenecks"
        }
        ReportCommand::Okr { tech, target, by, at } => {
            params.tech = Some(resolve(engine, &tech)?);
            params.target = Some(level(target)?);
            params.deadline = Some(time(&by)?);
            params.now = as_of(&at)?.unwrap_or(params.now);
            "okr"
        }
    };
    let output = ReportRegistry::builtin()
        .run(name, engine.state(), &params)
        .map_err(trl_core::Error::from)?;
    emit(json, &output.data, |_| output.table.render())
}
