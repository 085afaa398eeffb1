//! The level policy table: what each level is called, which card sections
//! must exist before leaving it, who must sit on the review panel, and which
//! gates guard graduation out of it.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::StoreError;
use crate::gates::GateRegistry;
use crate::level::TrlLevel;

pub const DEFAULT_FLAG_THRESHOLD: f64 = 5.0;
pub const DEFAULT_SCORE_MAX: u32 = 1;

pub mod role {
    pub const RESEARCH_LEAD: &str = "research-lead";
    pub const RESEARCHER: &str = "researcher";
    pub const APPLIED_AI_ENGINEER: &str = "applied-ai-engineer";
    pub const SOFTWARE_ENGINEER: &str = "software-engineer";
    pub const INFRASTRUCTURE_ENGINEER: &str = "infrastructure-engineer";
    pub const PRODUCT_MANAGER: &str = "product-manager";
    pub const BUSINESS_STAKEHOLDER: &str = "business-stakeholder";
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LevelRecord {
    pub level: TrlLevel,
    pub name: String,
    pub motto: String,
    pub required_card_sections: Vec<String>,
    pub required_panel_roles: Vec<String>,
    /// Gates checked when proposing graduation out of this level.
    pub gates: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LevelPolicy {
    pub flag_threshold: f64,
    /// Upper bound of a single scorecard item score.
    pub score_max: u32,
    levels: Vec<LevelRecord>,
}

impl LevelPolicy {
    pub fn record(&self, level: TrlLevel) -> &LevelRecord {
        &self.levels[level.value() as usize]
    }

    pub fn levels(&self) -> impl Iterator<Item = &LevelRecord> {
        self.levels.iter()
    }

    /// Applies an overlay on top of this policy.
    pub fn overlay(mut self, overlay: PolicyOverlay) -> Result<Self, StoreError> {
        let malformed = |msg: String| Err(StoreError::MalformedPolicy(msg));
        if let Some(threshold) = overlay.flag_threshold {
            if !threshold.is_finite() || !(0.0..=10.0).contains(&threshold) {
                return malformed(format!("flag_threshold {threshold} is outside [0, 10]"));
            }
            self.flag_threshold = threshold;
        }
        if let Some(max) = overlay.score_max {
            if max == 0 {
                return malformed("score_max must be at least 1".into());
            }
            self.score_max = max;
        }
        let entries = overlay.levels.unwrap_or_default();
        if entries.len() > 10 {
            return malformed(format!("{} level entries; levels run 0-9", entries.len()));
        }
        let registry = GateRegistry::builtin();
        let mut seen = BTreeSet::new();
        for entry in entries {
            let level = TrlLevel::new(entry.level)
                .map_err(|_| StoreError::MalformedPolicy(format!("level {} is outside 0-9", entry.level)))?;
            if !seen.insert(level) {
                return malformed(format!("level {level} listed twice"));
            }
            let record = &mut self.levels[level.value() as usize];
            if let Some(name) = entry.name {
                record.name = name;
            }
            if let Some(motto) = entry.motto {
                record.motto = motto;
            }
            if let Some(sections) = entry.required_card_sections {
                if let Some(bad) = sections.iter().find(|s| !is_identifier(s)) {
                    return malformed(format!("bad section id '{bad}' at level {level}"));
                }
                record.required_card_sections = sections;
            }
            if let Some(roles) = entry.required_panel_roles {
                if let Some(bad) = roles.iter().find(|s| !is_identifier(s)) {
                    return malformed(format!("bad role id '{bad}' at level {level}"));
                }
                record.required_panel_roles = roles;
            }
            if let Some(gates) = entry.gates {
                if let Some(bad) = gates.iter().find(|g| !registry.contains(g)) {
                    return malformed(format!("unknown gate '{bad}' at level {level}"));
                }
                record.gates = gates;
            }
        }
        Ok(self)
    }

    /// The full policy expressed as an overlay, suitable for writing out.
    pub fn to_overlay(&self) -> PolicyOverlay {
        PolicyOverlay {
            flag_threshold: Some(self.flag_threshold),
            score_max: Some(self.score_max),
            levels: Some(
                self.levels
                    .iter()
                    .map(|r| LevelOverlay {
                        level: r.level.value() as i64,
                        name: Some(r.name.clone()),
                        motto: Some(r.motto.clone()),
                        required_card_sections: Some(r.required_card_sections.clone()),
                        required_panel_roles: Some(r.required_panel_roles.clone()),
                        gates: Some(r.gates.clone()),
                    })
                    .collect(),
            ),
        }
    }
}

fn is_identifier(s: &str) -> bool {
    !s.is_empty()
        && s.chars()
            .all(|c| c.is_ascii_lowercase() || c.is_ascii_digit() || c == '-')
}

/// Partial policy read from `trl-policy.json`. Absent fields keep defaults.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolicyOverlay {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub flag_threshold: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub score_max: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub levels: Option<Vec<LevelOverlay>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LevelOverlay {
    pub level: i64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub motto: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub required_card_sections: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub required_panel_roles: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gates: Option<Vec<String>>,
}

impl Default for LevelPolicy {
    fn default() -> Self {
        use role::*;
        let row = |level: u8,
                   name: &str,
                   motto: &str,
                   sections: &[&str],
                   roles: &[&str],
                   gates: &[&str]| LevelRecord {
            level: TrlLevel::new(level as i64).expect("static level"),
            name: name.to_string(),
            motto: motto.to_string(),
            required_card_sections: sections.iter().map(|s| s.to_string()).collect(),
            required_panel_roles: roles.iter().map(|s| s.to_string()).collect(),
            gates: gates.iter().map(|s| s.to_string()).collect(),
        };
        let levels = vec![
            row(0, "Brainstorming", "Greenfield research", &["research-plan"], &[RESEARCH_LEAD], &[]),
            row(
                1,
                "Goal-Oriented Research",
                "From principles toward practical use",
                &["experiment-report"],
                &[RESEARCH_LEAD, RESEARCHER],
                &[],
            ),
            row(
                2,
                "Proof of Principle Development",
                "Active R&D in testbeds",
                &["requirements-doc"],
                &[RESEARCH_LEAD, RESEARCHER],
                &["requirements-doc"],
            ),
            row(
                3,
                "System Development",
                "Engineering-grade code",
                &["engineering-checkpoints"],
                &[RESEARCH_LEAD, APPLIED_AI_ENGINEER, SOFTWARE_ENGINEER],
                &[],
            ),
            row(
                4,
                "Proof of Concept Development",
                "Demonstrated in a real scenario",
                &["assumptions-and-limitations"],
                &[RESEARCH_LEAD, APPLIED_AI_ENGINEER, PRODUCT_MANAGER],
                &["assumptions-and-limitations", "ethics-review", "sim-to-real-risk"],
            ),
            row(
                5,
                "Machine Learning Capability",
                "Research to product handoff",
                &["integration-plan"],
                &[RESEARCH_LEAD, APPLIED_AI_ENGINEER, SOFTWARE_ENGINEER, PRODUCT_MANAGER],
                &["working-group"],
            ),
            row(
                6,
                "Application Development",
                "Product-caliber modules for concrete use-cases",
                &["product-requirements", "data-pipeline-spec"],
                &[APPLIED_AI_ENGINEER, SOFTWARE_ENGINEER, PRODUCT_MANAGER],
                &[],
            ),
            row(
                7,
                "Integrations",
                "Infrastructure, platform, data pipes, security",
                &["test-suite-report"],
                &[INFRASTRUCTURE_ENGINEER, APPLIED_AI_ENGINEER],
                &["test-scorecard"],
            ),
            row(
                8,
                "Flight-ready",
                "Final form under expected conditions",
                &["deployment-tests"],
                &[
                    RESEARCH_LEAD,
                    APPLIED_AI_ENGINEER,
                    SOFTWARE_ENGINEER,
                    INFRASTRUCTURE_ENGINEER,
                    PRODUCT_MANAGER,
                    BUSINESS_STAKEHOLDER,
                ],
                &[],
            ),
            row(
                9,
                "Deployment",
                "Monitor this version, improve the next",
                &["monitoring-plan"],
                &[APPLIED_AI_ENGINEER, INFRASTRUCTURE_ENGINEER],
                &[],
            ),
        ];
        LevelPolicy {
            flag_threshold: DEFAULT_FLAG_THRESHOLD,
            score_max: DEFAULT_SCORE_MAX,
            levels,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_has_one_record_per_level() {
        let policy = LevelPolicy::default();
        let levels: Vec<u8> = policy.levels().map(|r| r.level.value()).collect();
        assert_eq!(levels, (0..=9).collect::<Vec<_>>());
        assert_eq!(policy.record(TrlLevel::MIN).required_panel_roles, vec![role::RESEARCH_LEAD]);
        assert_eq!(policy.flag_threshold, 5.0);
    }

    #[test]
    fn default_gates_are_registered() {
        let registry = GateRegistry::builtin();
        for record in LevelPolicy::default().levels() {
            for gate in &record.gates {
                assert!(registry.contains(gate), "{gate}");
            }
        }
    }

    #[test]
    fn overlay_threshold_and_gates() {
        let overlay: PolicyOverlay = serde_json::from_str(
            r#"{"flag_threshold": 4.0, "levels": [{"level": 4, "gates": ["assumptions-and-limitations"]}]}"#,
        )
        .unwrap();
        let policy = LevelPolicy::default().overlay(overlay).unwrap();
        assert_eq!(policy.flag_threshold, 4.0);
        assert_eq!(policy.record(TrlLevel::new(4).unwrap()).gates, vec!["assumptions-and-limitations"]);
        assert_eq!(policy.record(TrlLevel::new(4).unwrap()).name, "Proof of Concept Development");
    }

    #[test]
    fn overlay_rejections() {
        let eleven: Vec<LevelOverlay> = (0..11)
            .map(|l| LevelOverlay {
                level: l,
                name: None,
                motto: None,
                required_card_sections: None,
                required_panel_roles: None,
                gates: None,
            })
            .collect();
        let overlay = PolicyOverlay {
            levels: Some(eleven),
            ..Default::default()
        };
        assert!(matches!(
            LevelPolicy::default().overlay(overlay),
            Err(StoreError::MalformedPolicy(_))
        ));
        for bad in [
            r#"{"levels": [{"level": 10}]}"#,
            r#"{"levels": [{"level": 1}, {"level": 1}]}"#,
            r#"{"levels": [{"level": 1, "gates": ["moon-phase"]}]}"#,
            r#"{"flag_threshold": 11}"#,
            r#"{"score_max": 0}"#,
        ] {
            let overlay: PolicyOverlay = serde_json::from_str(bad).unwrap();
            assert!(LevelPolicy::default().overlay(overlay).is_err(), "{bad}");
        }
        assert!(serde_json::from_str::<PolicyOverlay>(r#"{"colour": "red"}"#).is_err());
    }

    #[test]
    fn full_overlay_reproduces_default() {
        let policy = LevelPolicy::default();
        let again = LevelPolicy::default().overlay(policy.to_overlay()).unwrap();
        assert_eq!(policy, again);
    }
}
