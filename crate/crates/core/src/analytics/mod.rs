//! Read-side analytics over transition logs: dwell time per level, visited
//! level paths, n-gram path mining, bottlenecks and OKR checks.
//!
//! Everything here is a pure function of the events and an explicit `now`.

mod reports;

use std::collections::BTreeMap;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::error::AnalyticsError;
use crate::ids::TechId;
use crate::level::TrlLevel;
use crate::lifecycle::Portfolio;
use crate::transition::{TransitionCause, TransitionEvent};

pub use reports::{Report, ReportOutput, ReportParams, ReportRegistry, Table};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LevelDwell {
    pub total_seconds: i64,
    pub interval_count: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TechDwell {
    pub tech_id: TechId,
    pub initiated_at: DateTime<Utc>,
    pub levels: BTreeMap<TrlLevel, LevelDwell>,
}

impl TechDwell {
    pub fn total_seconds(&self) -> i64 {
        self.levels.values().map(|d| d.total_seconds).sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelAggregate {
    pub sum_seconds: i64,
    pub median_seconds: f64,
    pub technologies: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DwellReport {
    pub now: DateTime<Utc>,
    pub technologies: Vec<TechDwell>,
    pub aggregates: BTreeMap<TrlLevel, LevelAggregate>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LevelPath {
    pub tech_id: TechId,
    pub sequence: Vec<TrlLevel>,
    pub cycle_count: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PathCount {
    pub path: Vec<TrlLevel>,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bottleneck {
    pub level: TrlLevel,
    pub median_seconds: f64,
    pub technologies: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OkrStatus {
    Met,
    Pending,
    Missed,
}

/// Checks the log of one technology: non-empty, opened by an initiation or
/// fork, strictly increasing seq, non-decreasing timestamps.
fn check_log(events: &[TransitionEvent]) -> Result<(), AnalyticsError> {
    let first = events.first().ok_or(AnalyticsError::MissingInitiation)?;
    if !first.cause.is_origin() {
        return Err(AnalyticsError::MissingInitiation);
    }
    for pair in events.windows(2) {
        let (a, b) = (&pair[0], &pair[1]);
        if b.seq <= a.seq || b.timestamp < a.timestamp || b.cause.is_origin() {
            return Err(AnalyticsError::UnsortedLog(b.seq));
        }
    }
    Ok(())
}

/// Sums, per level, every interval the technology sat there. The last
/// interval is closed at `now`.
pub fn time_per_level(events: &[TransitionEvent], now: DateTime<Utc>) -> Result<TechDwell, AnalyticsError> {
    check_log(events)?;
    let last = events.last().expect("checked non-empty");
    if now < last.timestamp {
        return Err(AnalyticsError::NowBeforeLastEvent(last.seq));
    }
    let mut levels: BTreeMap<TrlLevel, LevelDwell> = BTreeMap::new();
    let closes = events.iter().skip(1).map(|e| e.timestamp).chain(std::iter::once(now));
    for (event, closed_at) in events.iter().zip(closes) {
        let dwell = levels.entry(event.to_level).or_default();
        dwell.total_seconds += (closed_at - event.timestamp).num_seconds();
        dwell.interval_count += 1;
    }
    Ok(TechDwell {
        tech_id: events[0].tech_id.clone(),
        initiated_at: events[0].timestamp,
        levels,
    })
}

/// Levels visited in order, starting with the entry level.
pub fn level_path(events: &[TransitionEvent]) -> Result<LevelPath, AnalyticsError> {
    check_log(events)?;
    Ok(LevelPath {
        tech_id: events[0].tech_id.clone(),
        sequence: events.iter().map(|e| e.to_level).collect(),
        cycle_count: events
            .iter()
            .filter(|e| e.cause == TransitionCause::Regression)
            .count(),
    })
}

/// Counts every consecutive `n`-gram across the given paths. Most frequent
/// first; ties in lexicographic order of the n-gram.
pub fn frequent_paths(paths: &[LevelPath], n: usize) -> Result<Vec<PathCount>, AnalyticsError> {
    if n < 2 {
        return Err(AnalyticsError::InvalidNGramLength(n));
    }
    let mut counts: BTreeMap<&[TrlLevel], usize> = BTreeMap::new();
    for path in paths {
        for window in path.sequence.windows(n) {
            *counts.entry(window).or_default() += 1;
        }
    }
    Ok(sorted_counts(counts))
}

/// Counts identical whole paths.
pub fn whole_path_counts(paths: &[LevelPath]) -> Vec<PathCount> {
    let mut counts: BTreeMap<&[TrlLevel], usize> = BTreeMap::new();
    for path in paths {
        *counts.entry(path.sequence.as_slice()).or_default() += 1;
    }
    sorted_counts(counts)
}

fn sorted_counts(counts: BTreeMap<&[TrlLevel], usize>) -> Vec<PathCount> {
    // BTreeMap iteration is already lexicographic; a stable sort keeps it
    // for equal counts.
    let mut out: Vec<PathCount> = counts
        .into_iter()
        .map(|(path, count)| PathCount {
            path: path.to_vec(),
            count,
        })
        .collect();
    out.sort_by(|a, b| b.count.cmp(&a.count));
    out
}

pub fn median(values: &mut [i64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    values.sort_unstable();
    let mid = values.len() / 2;
    Some(if values.len() % 2 == 1 {
        values[mid] as f64
    } else {
        (values[mid - 1] as f64 + values[mid] as f64) / 2.0
    })
}

fn per_level_dwells(dwells: &[TechDwell]) -> BTreeMap<TrlLevel, Vec<i64>> {
    let mut by_level: BTreeMap<TrlLevel, Vec<i64>> = BTreeMap::new();
    for tech in dwells {
        for (level, dwell) in &tech.levels {
            by_level.entry(*level).or_default().push(dwell.total_seconds);
        }
    }
    by_level
}

pub fn aggregate(dwells: &[TechDwell]) -> BTreeMap<TrlLevel, LevelAggregate> {
    per_level_dwells(dwells)
        .into_iter()
        .map(|(level, mut values)| {
            let sum_seconds = values.iter().sum();
            let technologies = values.len();
            let median_seconds = median(&mut values).expect("non-empty");
            (
                level,
                LevelAggregate {
                    sum_seconds,
                    median_seconds,
                    technologies,
                },
            )
        })
        .collect()
}

/// Levels ranked by median per-technology dwell, longest first; ties by
/// level. Levels nobody visited are left out.
pub fn bottleneck_report(dwells: &[TechDwell]) -> Result<Vec<Bottleneck>, AnalyticsError> {
    if dwells.is_empty() {
        return Err(AnalyticsError::EmptyPortfolio);
    }
    let mut ranked: Vec<Bottleneck> = per_level_dwells(dwells)
        .into_iter()
        .map(|(level, mut values)| Bottleneck {
            level,
            technologies: values.len(),
            median_seconds: median(&mut values).expect("non-empty"),
        })
        .collect();
    ranked.sort_by(|a, b| b.median_seconds.total_cmp(&a.median_seconds));
    Ok(ranked)
}

/// Met once a graduation reached `target` or higher by `deadline`.
pub fn okr_check(
    events: &[TransitionEvent],
    target: TrlLevel,
    deadline: DateTime<Utc>,
    now: DateTime<Utc>,
) -> OkrStatus {
    let met = events.iter().any(|e| {
        e.cause == TransitionCause::Graduation && e.to_level >= target && e.timestamp <= deadline
    });
    if met {
        OkrStatus::Met
    } else if now > deadline {
        OkrStatus::Missed
    } else {
        OkrStatus::Pending
    }
}

// ---- portfolio-level helpers ----

/// Technologies whose own level history is meaningful: not archived, not
/// compositions (their level is derived).
fn tracked(portfolio: &Portfolio) -> impl Iterator<Item = &TechId> {
    portfolio
        .technologies
        .values()
        .filter(|t| t.is_active() && !t.is_composition())
        .map(|t| &t.id)
}

pub fn tech_events(portfolio: &Portfolio, tech: &TechId) -> Result<Vec<TransitionEvent>, AnalyticsError> {
    if !portfolio.technologies.contains_key(tech) {
        return Err(AnalyticsError::TechnologyNotFound(tech.clone()));
    }
    Ok(portfolio.transitions_of(tech).cloned().collect())
}

pub fn portfolio_dwell(portfolio: &Portfolio, now: DateTime<Utc>) -> Result<DwellReport, AnalyticsError> {
    let technologies = tracked(portfolio)
        .map(|id| time_per_level(&tech_events(portfolio, id)?, now))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(DwellReport {
        now,
        aggregates: aggregate(&technologies),
        technologies,
    })
}

pub fn portfolio_paths(portfolio: &Portfolio) -> Result<Vec<LevelPath>, AnalyticsError> {
    tracked(portfolio)
        .map(|id| level_path(&tech_events(portfolio, id)?))
        .collect()
}

pub fn portfolio_bottlenecks(portfolio: &Portfolio, now: DateTime<Utc>) -> Result<Vec<Bottleneck>, AnalyticsError> {
    bottleneck_report(&portfolio_dwell(portfolio, now)?.technologies)
}

pub fn portfolio_okr(
    portfolio: &Portfolio,
    tech: &TechId,
    target: TrlLevel,
    deadline: DateTime<Utc>,
    now: DateTime<Utc>,
) -> Result<OkrStatus, AnalyticsError> {
    Ok(okr_check(&tech_events(portfolio, tech)?, target, deadline, now))
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::TimeZone;

    fn t(secs: i64) -> DateTime<Utc> {
        Utc.timestamp_opt(secs, 0).unwrap()
    }

    fn lvl(v: i64) -> TrlLevel {
        TrlLevel::new(v).unwrap()
    }

    /// Builds a log from `(time, level)` steps; the cause follows from the
    /// level change.
    fn log(steps: &[(i64, i64)]) -> Vec<TransitionEvent> {
        let mut out: Vec<TransitionEvent> = Vec::new();
        for (i, &(at, level)) in steps.iter().enumerate() {
            let from = out.last().map(|e| e.to_level);
            let cause = match from {
                None => TransitionCause::Initiation,
                Some(f) if lvl(level) > f => TransitionCause::Graduation,
                Some(_) => TransitionCause::Regression,
            };
            out.push(TransitionEvent {
                seq: i as u64 + 1,
                tech_id: "t".into(),
                from_level: from,
                to_level: lvl(level),
                cause,
                timestamp: t(at),
                review_ref: None,
                rationale: String::new(),
            });
        }
        out
    }

    #[test]
    fn dwell_with_revisits() {
        // L2 [0,10) + [15,25) = 20; L3 [10,15) + [25,30) = 10
        let report = time_per_level(&log(&[(0, 2), (10, 3), (15, 2), (25, 3)]), t(30)).unwrap();
        assert_eq!(report.levels[&lvl(2)], LevelDwell { total_seconds: 20, interval_count: 2 });
        assert_eq!(report.levels[&lvl(3)], LevelDwell { total_seconds: 10, interval_count: 2 });
        assert_eq!(report.total_seconds(), 30);
    }

    #[test]
    fn dwell_single_open_interval() {
        let report = time_per_level(&log(&[(0, 4)]), t(7)).unwrap();
        assert_eq!(report.levels[&lvl(4)].total_seconds, 7);
    }

    #[test]
    fn dwell_errors() {
        assert_eq!(time_per_level(&[], t(0)), Err(AnalyticsError::MissingInitiation));
        let mut events = log(&[(0, 2), (10, 3)]);
        events.swap(0, 1);
        assert_eq!(time_per_level(&events, t(30)), Err(AnalyticsError::MissingInitiation));
        let mut events = log(&[(0, 2), (10, 3), (20, 4)]);
        events[2].seq = 1;
        assert_eq!(time_per_level(&events, t(30)), Err(AnalyticsError::UnsortedLog(1)));
        assert_eq!(
            time_per_level(&log(&[(0, 2), (10, 3)]), t(5)),
            Err(AnalyticsError::NowBeforeLastEvent(2))
        );
    }

    #[test]
    fn path_and_cycles() {
        let path = level_path(&log(&[(0, 2), (1, 3), (2, 2), (3, 3), (4, 4)])).unwrap();
        assert_eq!(path.sequence, vec![lvl(2), lvl(3), lvl(2), lvl(3), lvl(4)]);
        assert_eq!(path.cycle_count, 1);
        let path = level_path(&log(&[(0, 4)])).unwrap();
        assert_eq!((path.sequence, path.cycle_count), (vec![lvl(4)], 0));
    }

    fn path(levels: &[i64]) -> LevelPath {
        LevelPath {
            tech_id: "t".into(),
            sequence: levels.iter().map(|&l| lvl(l)).collect(),
            cycle_count: 0,
        }
    }

    #[test]
    fn bigrams_by_hand() {
        let counts = frequent_paths(&[path(&[2, 3, 4]), path(&[2, 3, 2])], 2).unwrap();
        let flat: Vec<(Vec<u8>, usize)> = counts
            .iter()
            .map(|c| (c.path.iter().map(|l| l.value()).collect(), c.count))
            .collect();
        assert_eq!(flat, vec![(vec![2, 3], 2), (vec![3, 2], 1), (vec![3, 4], 1)]);

        let single = frequent_paths(&[path(&[4, 5])], 2).unwrap();
        assert_eq!(single, vec![PathCount { path: vec![lvl(4), lvl(5)], count: 1 }]);
        assert_eq!(frequent_paths(&[], 1), Err(AnalyticsError::InvalidNGramLength(1)));
    }

    #[test]
    fn whole_paths() {
        let counts = whole_path_counts(&[path(&[2, 3]), path(&[4]), path(&[2, 3])]);
        assert_eq!(counts[0], PathCount { path: vec![lvl(2), lvl(3)], count: 2 });
    }

    fn dwell(levels: &[(i64, i64)]) -> TechDwell {
        TechDwell {
            tech_id: "t".into(),
            initiated_at: t(0),
            levels: levels
                .iter()
                .map(|&(l, s)| (lvl(l), LevelDwell { total_seconds: s, interval_count: 1 }))
                .collect(),
        }
    }

    #[test]
    fn bottlenecks() {
        let ranked = bottleneck_report(&[dwell(&[(3, 10), (4, 1)]), dwell(&[(3, 30)])]).unwrap();
        assert_eq!(ranked[0].level, lvl(3));
        assert_eq!(ranked[0].median_seconds, 20.0);
        assert_eq!(ranked[1].median_seconds, 1.0);

        let one = bottleneck_report(&[dwell(&[(2, 5), (5, 9)])]).unwrap();
        assert_eq!(one.iter().map(|b| b.median_seconds).collect::<Vec<_>>(), vec![9.0, 5.0]);
        assert_eq!(bottleneck_report(&[]), Err(AnalyticsError::EmptyPortfolio));
    }

    #[test]
    fn okr() {
        let events = log(&[(0, 4), (8, 5)]);
        assert_eq!(okr_check(&events, lvl(5), t(10), t(11)), OkrStatus::Met);
        let events = log(&[(0, 4)]);
        assert_eq!(okr_check(&events, lvl(5), t(10), t(11)), OkrStatus::Missed);
        assert_eq!(okr_check(&events, lvl(5), t(10), t(9)), OkrStatus::Pending);
        // reaching the target after the deadline does not count
        let late = log(&[(0, 4), (12, 5)]);
        assert_eq!(okr_check(&late, lvl(5), t(10), t(13)), OkrStatus::Missed);
    }

    #[test]
    fn median_even_and_odd() {
        assert_eq!(median(&mut [30, 10]), Some(20.0));
        assert_eq!(median(&mut [5, 1, 3]), Some(3.0));
        assert_eq!(median(&mut []), None);
    }
}
