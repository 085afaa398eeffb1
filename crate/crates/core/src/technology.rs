use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::ModelError;
use crate::ids::TechId;
use crate::level::TrlLevel;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TechKind {
    Model,
    Algorithm,
    DataPipeline,
    SoftwareModule,
    Composition,
}

impl TechKind {
    pub const ALL: [TechKind; 5] = [
        TechKind::Model,
        TechKind::Algorithm,
        TechKind::DataPipeline,
        TechKind::SoftwareModule,
        TechKind::Composition,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            TechKind::Model => "model",
            TechKind::Algorithm => "algorithm",
            TechKind::DataPipeline => "data-pipeline",
            TechKind::SoftwareModule => "software-module",
            TechKind::Composition => "composition",
        }
    }
}

impl fmt::Display for TechKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for TechKind {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        TechKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| ModelError::UnknownKind(s.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TechStatus {
    Active,
    Archived,
}

/// A tracked unit of work. `current_level` is only ever written by applying
/// transition events.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Technology {
    pub id: TechId,
    pub name: String,
    pub kind: TechKind,
    pub initiation_level: TrlLevel,
    pub current_level: TrlLevel,
    pub components: Vec<TechId>,
    pub status: TechStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub forked_from: Option<TechId>,
}

impl Technology {
    pub fn is_composition(&self) -> bool {
        self.kind == TechKind::Composition
    }

    pub fn is_active(&self) -> bool {
        self.status == TechStatus::Active
    }
}

pub type Registry = BTreeMap<TechId, Technology>;

/// A system TRL together with the archived components left out of it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SystemTrl {
    pub level: TrlLevel,
    pub excluded_archived: Vec<TechId>,
}

/// Readiness of a technology: its own level for leaves, the minimum over
/// components (recursively) for compositions.
pub fn system_trl(tech: &Technology, registry: &Registry) -> Result<TrlLevel, ModelError> {
    system_trl_detailed(tech, registry).map(|s| s.level)
}

/// As [`system_trl`], also reporting archived components that were skipped.
pub fn system_trl_detailed(tech: &Technology, registry: &Registry) -> Result<SystemTrl, ModelError> {
    let mut walk = Walk {
        registry,
        memo: HashMap::new(),
        on_stack: BTreeSet::new(),
        excluded: BTreeSet::new(),
    };
    let level = walk.visit(tech)?;
    Ok(SystemTrl {
        level,
        excluded_archived: walk.excluded.into_iter().collect(),
    })
}

struct Walk<'a> {
    registry: &'a Registry,
    memo: HashMap<&'a TechId, TrlLevel>,
    on_stack: BTreeSet<TechId>,
    excluded: BTreeSet<TechId>,
}

impl<'a> Walk<'a> {
    fn visit(&mut self, tech: &Technology) -> Result<TrlLevel, ModelError> {
        if !tech.is_composition() {
            return Ok(tech.current_level);
        }
        if !self.on_stack.insert(tech.id.clone()) {
            return Err(ModelError::CyclicComposition(tech.id.clone()));
        }
        let mut lowest: Option<TrlLevel> = None;
        for id in &tech.components {
            let component = self
                .registry
                .get(id)
                .ok_or_else(|| ModelError::UnresolvedComponent(id.clone()))?;
            if !component.is_active() {
                self.excluded.insert(id.clone());
                continue;
            }
            let level = match self.memo.get(&component.id) {
                Some(level) => *level,
                None => {
                    let level = self.visit(component)?;
                    self.memo.insert(&component.id, level);
                    level
                }
            };
            lowest = Some(lowest.map_or(level, |l| l.min(level)));
        }
        self.on_stack.remove(&tech.id);
        lowest.ok_or_else(|| ModelError::NoActiveComponents(tech.id.clone()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn leaf(id: &str, level: i64) -> Technology {
        Technology {
            id: id.into(),
            name: id.into(),
            kind: TechKind::Model,
            initiation_level: TrlLevel::new(level).unwrap(),
            current_level: TrlLevel::new(level).unwrap(),
            components: vec![],
            status: TechStatus::Active,
            forked_from: None,
        }
    }

    fn composite(id: &str, parts: &[&str]) -> Technology {
        Technology {
            kind: TechKind::Composition,
            components: parts.iter().map(|p| TechId::from(*p)).collect(),
            ..leaf(id, 0)
        }
    }

    fn registry(items: Vec<Technology>) -> Registry {
        items.into_iter().map(|t| (t.id.clone(), t)).collect()
    }

    #[test]
    fn leaf_is_identity() {
        let reg = registry(vec![leaf("a", 5)]);
        assert_eq!(system_trl(&reg[&TechId::from("a")], &reg).unwrap().value(), 5);
    }

    #[test]
    fn flat_composition_takes_minimum() {
        let reg = registry(vec![leaf("a", 3), leaf("b", 5), leaf("c", 7), composite("s", &["a", "b", "c"])]);
        assert_eq!(system_trl(&reg[&TechId::from("s")], &reg).unwrap().value(), 3);
    }

    #[test]
    fn nested_composition() {
        // A = {leaf@6, C = {leaf@4, leaf@8}}; transitive leaves {6, 4, 8} -> 4
        let reg = registry(vec![
            leaf("x", 6),
            leaf("y", 4),
            leaf("z", 8),
            composite("c", &["y", "z"]),
            composite("a", &["x", "c"]),
        ]);
        assert_eq!(system_trl(&reg[&TechId::from("a")], &reg).unwrap().value(), 4);
    }

    #[test]
    fn unresolved_and_cyclic() {
        let reg = registry(vec![composite("s", &["ghost"])]);
        assert_eq!(
            system_trl(&reg[&TechId::from("s")], &reg),
            Err(ModelError::UnresolvedComponent("ghost".into()))
        );
        let reg = registry(vec![composite("p", &["q"]), composite("q", &["p"])]);
        assert!(matches!(
            system_trl(&reg[&TechId::from("p")], &reg),
            Err(ModelError::CyclicComposition(_))
        ));
    }

    #[test]
    fn archived_components_are_excluded() {
        let mut old = leaf("old", 1);
        old.status = TechStatus::Archived;
        let reg = registry(vec![old, leaf("new", 6), composite("s", &["old", "new"])]);
        let report = system_trl_detailed(&reg[&TechId::from("s")], &reg).unwrap();
        assert_eq!(report.level.value(), 6);
        assert_eq!(report.excluded_archived, vec![TechId::from("old")]);

        let mut only = leaf("only", 2);
        only.status = TechStatus::Archived;
        let reg = registry(vec![only, composite("s", &["only"])]);
        assert_eq!(
            system_trl(&reg[&TechId::from("s")], &reg),
            Err(ModelError::NoActiveComponents("s".into()))
        );
    }

    #[test]
    fn kind_round_trips_text() {
        for kind in TechKind::ALL {
            assert_eq!(kind.as_str().parse::<TechKind>().unwrap(), kind);
        }
        assert!("robot".parse::<TechKind>().is_err());
    }
}
