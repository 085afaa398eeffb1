//! Named reports, selectable from the CLI and the HTTP API.

use std::collections::BTreeMap;
use std::sync::Arc;

use chrono::{DateTime, Utc};
use serde::Serialize;
use serde_json::Value;

use super::{
    frequent_paths, portfolio_bottlenecks, portfolio_dwell, portfolio_okr, portfolio_paths,
    whole_path_counts, OkrStatus, PathCount,
};
use crate::error::AnalyticsError;
use crate::ids::TechId;
use crate::level::TrlLevel;
use crate::lifecycle::Portfolio;

#[derive(Debug, Clone)]
pub struct ReportParams {
    pub now: DateTime<Utc>,
    pub n: Option<usize>,
    pub tech: Option<TechId>,
    pub target: Option<TrlLevel>,
    pub deadline: Option<DateTime<Utc>>,
}

impl ReportParams {
    pub fn at(now: DateTime<Utc>) -> Self {
        ReportParams {
            now,
            n: None,
            tech: None,
            target: None,
            deadline: None,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Table {
    pub headers: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(headers: &[&str]) -> Self {
        Table {
            headers: headers.iter().map(|h| h.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn row(&mut self, cells: Vec<String>) {
        self.rows.push(cells);
    }

    /// Plain left-aligned columns.
    pub fn render(&self) -> String {
        let mut widths: Vec<usize> = self.headers.iter().map(|h| h.len()).collect();
        for row in &self.rows {
            for (i, cell) in row.iter().enumerate() {
                widths[i] = widths[i].max(cell.len());
            }
        }
        let line = |cells: &[String]| {
            let padded: Vec<String> = cells
                .iter()
                .enumerate()
                .map(|(i, c)| format!("{:width$}", c, width = widths[i]))
                .collect();
            padded.join("  ").trim_end().to_string()
        };
        let mut out = line(&self.headers);
        out.push('\n');
        for row in &self.rows {
            out.push_str(&line(row));
            out.push('\n');
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportOutput {
    pub name: String,
    pub data: Value,
    #[serde(skip)]
    pub table: Table,
}

pub trait Report: Send + Sync {
    fn name(&self) -> &'static str;
    fn describe(&self) -> &'static str;
    fn run(&self, portfolio: &Portfolio, params: &ReportParams) -> Result<ReportOutput, AnalyticsError>;
}

fn output(name: &str, data: impl Serialize, table: Table) -> ReportOutput {
    ReportOutput {
        name: name.to_string(),
        data: serde_json::to_value(data).expect("report data serializes"),
        table,
    }
}

fn path_text(path: &[TrlLevel]) -> String {
    path.iter().map(|l| l.to_string()).collect::<Vec<_>>().join("->")
}

fn counts_table(counts: &[PathCount]) -> Table {
    let mut table = Table::new(&["path", "count"]);
    for c in counts {
        table.row(vec![path_text(&c.path), c.count.to_string()]);
    }
    table
}

struct TimePerLevel;

impl Report for TimePerLevel {
    fn name(&self) -> &'static str {
        "time-per-level"
    }
    fn describe(&self) -> &'static str {
        "seconds spent at each level, per technology and aggregated"
    }
    fn run(&self, portfolio: &Portfolio, params: &ReportParams) -> Result<ReportOutput, AnalyticsError> {
        let mut report = portfolio_dwell(portfolio, params.now)?;
        if let Some(tech) = &params.tech {
            if !portfolio.technologies.contains_key(tech) {
                return Err(AnalyticsError::TechnologyNotFound(tech.clone()));
            }
            report.technologies.retain(|t| &t.tech_id == tech);
            report.aggregates = super::aggregate(&report.technologies);
        }
        let mut table = Table::new(&["technology", "level", "seconds", "intervals"]);
        for tech in &report.technologies {
            for (level, dwell) in &tech.levels {
                table.row(vec![
                    tech.tech_id.to_string(),
                    level.to_string(),
                    dwell.total_seconds.to_string(),
                    dwell.interval_count.to_string(),
                ]);
            }
        }
        for (level, agg) in &report.aggregates {
            table.row(vec![
                "(all)".into(),
                level.to_string(),
                agg.sum_seconds.to_string(),
                format!("median {}", agg.median_seconds),
            ]);
        }
        Ok(output(self.name(), report, table))
    }
}

#[derive(Serialize)]
struct PathsData {
    n: usize,
    ngrams: Vec<PathCount>,
    whole_paths: Vec<PathCount>,
    paths: Vec<super::LevelPath>,
}

struct Paths;

impl Report for Paths {
    fn name(&self) -> &'static str {
        "paths"
    }
    fn describe(&self) -> &'static str {
        "most frequent n-grams of visited levels"
    }
    fn run(&self, portfolio: &Portfolio, params: &ReportParams) -> Result<ReportOutput, AnalyticsError> {
        let n = params.n.unwrap_or(2);
        let mut paths = portfolio_paths(portfolio)?;
        if let Some(tech) = &params.tech {
            if !portfolio.technologies.contains_key(tech) {
                return Err(AnalyticsError::TechnologyNotFound(tech.clone()));
            }
            paths.retain(|p| &p.tech_id == tech);
        }
        let ngrams = frequent_paths(&paths, n)?;
        let table = counts_table(&ngrams);
        let data = PathsData {
            n,
            whole_paths: whole_path_counts(&paths),
            ngrams,
            paths,
        };
        Ok(output(self.name(), data, table))
    }
}

struct Bottlenecks;

impl Report for Bottlenecks {
    fn name(&self) -> &'static str {
        "bottlenecks"
    }
    fn describe(&self) -> &'static str {
        "levels ranked by median dwell time"
    }
    fn run(&self, portfolio: &Portfolio, params: &ReportParams) -> Result<ReportOutput, AnalyticsError> {
        let ranked = portfolio_bottlenecks(portfolio, params.now)?;
        let mut table = Table::new(&["level", "median_seconds", "technologies"]);
        for b in &ranked {
            table.row(vec![b.level.to_string(), b.median_seconds.to_string(), b.technologies.to_string()]);
        }
        Ok(output(self.name(), ranked, table))
    }
}

#[derive(Serialize)]
struct OkrData {
    tech_id: TechId,
    target: TrlLevel,
    deadline: DateTime<Utc>,
    status: OkrStatus,
}

struct Okr;

impl Report for Okr {
    fn name(&self) -> &'static str {
        "okr"
    }
    fn describe(&self) -> &'static str {
        "whether a technology graduated to a target level by a deadline"
    }
    fn run(&self, portfolio: &Portfolio, params: &ReportParams) -> Result<ReportOutput, AnalyticsError> {
        let missing = |what: &str| AnalyticsError::InvalidParameter(format!("okr needs {what}"));
        let tech = params.tech.clone().ok_or_else(|| missing("a technology"))?;
        let target = params.target.ok_or_else(|| missing("a target level"))?;
        let deadline = params.deadline.ok_or_else(|| missing("a deadline"))?;
        let status = portfolio_okr(portfolio, &tech, target, deadline, params.now)?;
        let mut table = Table::new(&["technology", "target", "deadline", "status"]);
        table.row(vec![
            tech.to_string(),
            target.to_string(),
            deadline.to_rfc3339(),
            serde_json::to_value(status).unwrap().as_str().unwrap_or_default().to_string(),
        ]);
        let data = OkrData {
            tech_id: tech,
            target,
            deadline,
            status,
        };
        Ok(output(self.name(), data, table))
    }
}

#[derive(Clone)]
pub struct ReportRegistry {
    reports: BTreeMap<&'static str, Arc<dyn Report>>,
}

impl ReportRegistry {
    pub fn empty() -> Self {
        ReportRegistry {
            reports: BTreeMap::new(),
        }
    }

    pub fn builtin() -> Self {
        let mut registry = Self::empty();
        registry.register(Arc::new(TimePerLevel));
        registry.register(Arc::new(Paths));
        registry.register(Arc::new(Bottlenecks));
        registry.register(Arc::new(Okr));
        registry
    }

    pub fn register(&mut self, report: Arc<dyn Report>) {
        self.reports.insert(report.name(), report);
    }

    pub fn get(&self, name: &str) -> Option<&Arc<dyn Report>> {
        self.reports.get(name)
    }

    pub fn names(&self) -> impl Iterator<Item = &'static str> + '_ {
        self.reports.keys().copied()
    }

    pub fn run(&self, name: &str, portfolio: &Portfolio, params: &ReportParams) -> Result<ReportOutput, AnalyticsError> {
        self.get(name)
            .ok_or_else(|| AnalyticsError::UnknownReport(name.to_string()))?
            .run(portfolio, params)
    }
}

impl Default for ReportRegistry {
    fn default() -> Self {
        Self::builtin()
    }
}
