use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::ModelError;

/// A technology readiness level, 0 (brainstorming) through 9 (deployment).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "i64", into = "u8")]
pub struct TrlLevel(u8);

impl TrlLevel {
    pub const MIN: TrlLevel = TrlLevel(0);
    pub const MAX: TrlLevel = TrlLevel(9);

    pub fn new(value: i64) -> Result<Self, ModelError> {
        if (0..=9).contains(&value) {
            Ok(TrlLevel(value as u8))
        } else {
            Err(ModelError::InvalidLevel(value))
        }
    }

    pub fn value(self) -> u8 {
        self.0
    }

    /// The level directly above, or `None` at level 9.
    pub fn next(self) -> Option<TrlLevel> {
        (self.0 < 9).then(|| TrlLevel(self.0 + 1))
    }

    pub fn all() -> impl DoubleEndedIterator<Item = TrlLevel> + Clone {
        (0..=9u8).map(TrlLevel)
    }
}

impl TryFrom<i64> for TrlLevel {
    type Error = ModelError;

    fn try_from(value: i64) -> Result<Self, Self::Error> {
        TrlLevel::new(value)
    }
}

impl From<TrlLevel> for u8 {
    fn from(level: TrlLevel) -> u8 {
        level.0
    }
}

impl fmt::Display for TrlLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl FromStr for TrlLevel {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let value: i64 = s
            .trim()
            .parse()
            .map_err(|_| ModelError::InvalidLevelText(s.to_string()))?;
        TrlLevel::new(value)
    }
}
