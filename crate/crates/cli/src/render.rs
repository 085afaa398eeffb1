//! Human-readable output.

use trl_core::analytics::Table;
use trl_core::card::{CardChange, CardReport, CardVersion};
use trl_core::lifecycle::GraduationProposal;
use trl_core::semver::SemVerTriple;
use trl_core::views::{TechnologyDetail, TechnologySummary};
use trl_core::{RiskView, Technology, TrlLevel};

pub fn level(l: Option<TrlLevel>) -> String {
    l.map_or("-".into(), |l| l.to_string())
}

pub fn technologies(items: &[TechnologySummary]) -> String {
    let mut table = Table::new(&["id", "name", "kind", "level", "system", "status"]);
    for s in items {
        let t = &s.technology;
        table.row(vec![
            t.id.to_string(),
            t.name.clone(),
            t.kind.as_str().into(),
            t.current_level.to_string(),
            level(s.level),
            status(t),
        ]);
    }
    table.render()
}

fn status(t: &Technology) -> String {
    if t.is_active() { "active" } else { "archived" }.into()
}

pub fn proposals(items: &[GraduationProposal]) -> String {
    let mut table = Table::new(&["proposal", "technology", "from", "to", "card", "created"]);
    for p in items {
        table.row(vec![
            p.id.to_string(),
            p.tech_id.to_string(),
            p.from_level.to_string(),
            level(p.from_level.next()),
            format!("v{}", p.card_version_at_proposal),
            p.created_at.to_rfc3339(),
        ]);
    }
    table.render()
}

pub fn risks(items: &[RiskView]) -> String {
    let mut table = Table::new(&["risk", "req", "p", "value", "risk_score", "flag", "mitigation"]);
    for v in items {
        let e = &v.entry;
        table.row(vec![
            e.id.to_string(),
            e.requirement_id.to_string(),
            e.p_failure.to_string(),
            e.value.to_string(),
            format!("{:.2}", e.risk),
            if v.flagged { "FLAGGED" } else { "" }.into(),
            e.mitigation.clone().unwrap_or_default(),
        ]);
    }
    table.render()
}

pub fn detail(d: &TechnologyDetail) -> String {
    let t = &d.summary.technology;
    let mut out = format!(
        "{} ({})\nkind: {}\nlevel: {}  system: {}  status: {}\n",
        t.name,
        t.id,
        t.kind.as_str(),
        t.current_level,
        level(d.summary.level),
        status(t)
    );
    if let Some(parent) = &t.forked_from {
        out += &format!("forked from: {parent}\n");
    }
    if !t.components.is_empty() {
        let ids: Vec<String> = t.components.iter().map(|c| c.to_string()).collect();
        out += &format!("components: {}\n", ids.join(", "));
    }
    let path: Vec<String> = d.path.iter().map(|l| l.to_string()).collect();
    out += &format!("path: {}\n", path.join(" -> "));
    out += &format!("card: v{}\n", d.card_version);
    out += &card_report(&d.card_report);
    for g in &d.gate_checks {
        out += &format!("gate {}: {} ({})\n", g.gate_id, if g.satisfied { "ok" } else { "open" }, g.evidence);
    }
    match &d.pending_proposal {
        Some(p) => out += &format!("pending proposal: {} ({} -> {})\n", p.id, p.from_level, level(p.from_level.next())),
        None => out += "pending proposal: none\n",
    }
    out
}

pub fn card_report(r: &CardReport) -> String {
    if r.missing.is_empty() {
        format!("card complete through level {}\n", r.level)
    } else {
        format!("card missing for level {}: {}\n", r.level, r.missing.join(", "))
    }
}

fn version(v: &Option<SemVerTriple>) -> String {
    v.map_or("-".into(), |v| v.to_string())
}

fn list(items: &[String]) -> String {
    if items.is_empty() {
        "-".into()
    } else {
        items.join(", ")
    }
}

fn bullets(out: &mut String, title: &str, items: &[String]) {
    *out += &format!("  {title}:\n");
    if items.is_empty() {
        *out += "    -\n";
    }
    for item in items {
        *out += &format!("    - {item}\n");
    }
}

pub fn card(tech: &Technology, v: &CardVersion, total: usize) -> String {
    let info = &v.project_info;
    let change = match &v.change {
        CardChange::Created => "created".to_string(),
        CardChange::Forked { parent } => format!("forked from {parent}"),
        CardChange::Amended { section_id } => format!("amended {section_id}"),
        CardChange::Graduated { from_level, to_level, review_id } => {
            format!("graduated {from_level} -> {to_level} ({review_id})")
        }
    };
    let mut out = format!(
        "TRL card: {} ({})  level {}\nversion {} of {}  {}  {}\n\n",
        tech.name,
        tech.id,
        tech.current_level,
        v.version_no,
        total,
        v.created_at.to_rfc3339(),
        change
    );
    out += "Project information\n";
    out += &format!("  owners: {}\n", list(&info.owners));
    out += &format!("  reviewers: {}\n", list(&info.reviewers));
    out += &format!("  status: {}\n", if info.status.is_empty() { "-" } else { &info.status });
    out += &format!("  code version: {}\n", version(&info.code_version));
    out += &format!("  model version: {}\n", version(&info.model_version));
    out += &format!("  data version: {}\n", version(&info.data_version));
    let group: Vec<String> = info.working_group.iter().map(|m| format!("{}={}", m.role, m.person)).collect();
    out += &format!("  working group: {}\n", list(&group));
    out += "\nImplicit knowledge\n";
    let k = &v.implicit_knowledge;
    bullets(&mut out, "modeling assumptions", &k.modeling_assumptions);
    bullets(&mut out, "dataset biases", &k.dataset_biases);
    bullets(&mut out, "corner cases", &k.corner_cases);
    out += "\nDeliverables\n";
    if v.deliverables.is_empty() {
        out += "  -\n";
    }
    for (lvl, items) in &v.deliverables {
        for d in items {
            out += &format!("  [L{lvl}] {} ({}): {}\n", d.title, d.section_id, d.content);
        }
    }
    out
}
