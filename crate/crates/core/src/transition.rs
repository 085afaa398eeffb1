//! Transition legality and the transition event type.

use std::fmt;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::ids::{ReviewId, TechId};
use crate::level::TrlLevel;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TransitionCause {
    Initiation,
    Graduation,
    Regression,
    ForkChildCreated,
}

impl TransitionCause {
    /// Causes that open a technology's history.
    pub fn is_origin(self) -> bool {
        matches!(
            self,
            TransitionCause::Initiation | TransitionCause::ForkChildCreated
        )
    }
}

/// One step in a technology's level history.
///
/// For `ForkChildCreated` the event belongs to the child and `from_level`
/// holds the parent's level at the time of the fork.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransitionEvent {
    pub seq: u64,
    pub tech_id: TechId,
    pub from_level: Option<TrlLevel>,
    pub to_level: TrlLevel,
    pub cause: TransitionCause,
    pub timestamp: DateTime<Utc>,
    pub review_ref: Option<ReviewId>,
    pub rationale: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum IllegalReason {
    SkipNotAllowed,
    NotAStep,
    NotLower,
    InitiationHasNoSource,
    MissingSource,
    ChildAboveParent,
}

impl IllegalReason {
    pub fn code(self) -> &'static str {
        match self {
            IllegalReason::SkipNotAllowed => "SkipNotAllowed",
            IllegalReason::NotAStep => "NotAStep",
            IllegalReason::NotLower => "NotLower",
            IllegalReason::InitiationHasNoSource => "InitiationHasNoSource",
            IllegalReason::MissingSource => "MissingSource",
            IllegalReason::ChildAboveParent => "ChildAboveParent",
        }
    }
}

impl fmt::Display for IllegalReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    Legal,
    Illegal(IllegalReason),
}

impl Verdict {
    pub fn is_legal(self) -> bool {
        self == Verdict::Legal
    }

    pub fn into_result(self) -> Result<(), IllegalReason> {
        match self {
            Verdict::Legal => Ok(()),
            Verdict::Illegal(reason) => Err(reason),
        }
    }
}

/// Judges a single level change.
///
/// Graduations move up exactly one level; regressions may drop any number
/// of levels; initiations have no source; fork children may start at or
/// below the parent. A self-transition is illegal for graduation and
/// regression.
pub fn validate_transition(
    from: Option<TrlLevel>,
    to: TrlLevel,
    cause: TransitionCause,
) -> Verdict {
    use IllegalReason::*;
    let verdict = match (cause, from) {
        (TransitionCause::Initiation, None) => return Verdict::Legal,
        (TransitionCause::Initiation, Some(_)) => Err(InitiationHasNoSource),
        (_, None) => Err(MissingSource),
        (TransitionCause::Graduation, Some(from)) => {
            if Some(to) == from.next() {
                Ok(())
            } else if to > from {
                Err(SkipNotAllowed)
            } else {
                Err(NotAStep)
            }
        }
        (TransitionCause::Regression, Some(from)) => {
            if to < from {
                Ok(())
            } else {
                Err(NotLower)
            }
        }
        (TransitionCause::ForkChildCreated, Some(parent)) => {
            if to <= parent {
                Ok(())
            } else {
                Err(ChildAboveParent)
            }
        }
    };
    match verdict {
        Ok(()) => Verdict::Legal,
        Err(reason) => Verdict::Illegal(reason),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn l(v: i64) -> TrlLevel {
        TrlLevel::new(v).unwrap()
    }

    #[test]
    fn spec_examples() {
        assert_eq!(validate_transition(Some(l(4)), l(5), TransitionCause::Graduation), Verdict::Legal);
        assert_eq!(
            validate_transition(Some(l(4)), l(6), TransitionCause::Graduation),
            Verdict::Illegal(IllegalReason::SkipNotAllowed)
        );
        assert_eq!(validate_transition(Some(l(4)), l(2), TransitionCause::Regression), Verdict::Legal);
        assert_eq!(validate_transition(None, l(4), TransitionCause::Initiation), Verdict::Legal);
    }

    #[test]
    fn self_transitions_rejected() {
        for level in TrlLevel::all() {
            assert_eq!(
                validate_transition(Some(level), level, TransitionCause::Graduation),
                Verdict::Illegal(IllegalReason::NotAStep)
            );
            assert_eq!(
                validate_transition(Some(level), level, TransitionCause::Regression),
                Verdict::Illegal(IllegalReason::NotLower)
            );
        }
    }

    #[test]
    fn missing_source_and_fork_rules() {
        assert_eq!(
            validate_transition(None, l(3), TransitionCause::Graduation),
            Verdict::Illegal(IllegalReason::MissingSource)
        );
        assert_eq!(
            validate_transition(Some(l(2)), l(2), TransitionCause::ForkChildCreated),
            Verdict::Legal
        );
        assert_eq!(
            validate_transition(Some(l(2)), l(3), TransitionCause::ForkChildCreated),
            Verdict::Illegal(IllegalReason::ChildAboveParent)
        );
    }

    #[test]
    fn regression_can_drop_many_levels() {
        assert!(validate_transition(Some(l(7)), l(3), TransitionCause::Regression).is_legal());
        assert!(validate_transition(Some(l(9)), l(0), TransitionCause::Regression).is_legal());
    }
}
