use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// Identifier of a tracked technology: a lowercase slug such as `bo-algorithm`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TechId(String);

impl TechId {
    pub fn new(id: impl Into<String>) -> Self {
        TechId(id.into())
    }

    /// Derives a slug from a display name; `None` if nothing usable remains.
    pub fn slug(name: &str) -> Option<Self> {
        let mut out = String::new();
        for c in name.trim().chars() {
            if c.is_ascii_alphanumeric() {
                out.push(c.to_ascii_lowercase());
            } else if !out.is_empty() && !out.ends_with('-') {
                out.push('-');
            }
        }
        while out.ends_with('-') {
            out.pop();
        }
        (!out.is_empty()).then_some(TechId(out))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    pub fn is_valid(&self) -> bool {
        !self.0.is_empty()
            && self
                .0
                .chars()
                .all(|c| c.is_ascii_lowercase() || c.is_ascii_digit() || c == '-')
    }
}

impl fmt::Display for TechId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for TechId {
    fn from(s: &str) -> Self {
        TechId(s.to_string())
    }
}

macro_rules! numeric_id {
    ($(#[$meta:meta])* $name:ident, $prefix:literal) => {
        $(#[$meta])*
        #[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
        #[serde(transparent)]
        pub struct $name(pub u64);

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                write!(f, concat!($prefix, "-{}"), self.0)
            }
        }

        impl FromStr for $name {
            type Err = std::num::ParseIntError;

            /// Accepts either the bare number or the prefixed form.
            fn from_str(s: &str) -> Result<Self, Self::Err> {
                let s = s.trim();
                let digits = s
                    .strip_prefix(concat!($prefix, "-"))
                    .or_else(|| s.strip_prefix(&concat!($prefix, "-").to_ascii_lowercase()))
                    .unwrap_or(s);
                digits.parse().map($name)
            }
        }
    };
}

numeric_id!(
    /// Graduation proposal identifier.
    ProposalId,
    "P"
);
numeric_id!(ReviewId, "R");
numeric_id!(RequirementId, "REQ");
numeric_id!(RiskId, "RISK");
numeric_id!(ScorecardId, "SC");
