use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::ModelError;

/// A `major.minor.patch` triple. Pre-release and build metadata are not
/// part of the card schema and are rejected.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct SemVerTriple {
    pub major: u64,
    pub minor: u64,
    pub patch: u64,
}

impl SemVerTriple {
    pub const fn new(major: u64, minor: u64, patch: u64) -> Self {
        SemVerTriple {
            major,
            minor,
            patch,
        }
    }
}

pub fn parse_semver(text: &str) -> Result<SemVerTriple, ModelError> {
    let malformed = || ModelError::MalformedVersion(text.to_string());
    let mut parts = text.split('.');
    let mut next = || -> Result<u64, ModelError> {
        let part = parts.next().ok_or_else(malformed)?;
        // digits only; a leading zero is only allowed for the number zero itself
        if part.is_empty()
            || !part.bytes().all(|b| b.is_ascii_digit())
            || (part.len() > 1 && part.starts_with('0'))
        {
            return Err(malformed());
        }
        part.parse().map_err(|_| malformed())
    };
    let triple = SemVerTriple::new(next()?, next()?, next()?);
    if parts.next().is_some() {
        return Err(malformed());
    }
    Ok(triple)
}

pub fn format_semver(version: &SemVerTriple) -> String {
    version.to_string()
}

impl fmt::Display for SemVerTriple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{}.{}", self.major, self.minor, self.patch)
    }
}

impl FromStr for SemVerTriple {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_semver(s)
    }
}

impl TryFrom<String> for SemVerTriple {
    type Error = ModelError;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        parse_semver(&s)
    }
}

impl From<SemVerTriple> for String {
    fn from(v: SemVerTriple) -> String {
        v.to_string()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn parses_examples() {
        assert_eq!(parse_semver("0.1.0").unwrap(), SemVerTriple::new(0, 1, 0));
        assert_eq!(parse_semver("0.0.0").unwrap(), SemVerTriple::new(0, 0, 0));
        assert_eq!(parse_semver("12.40.7").unwrap(), SemVerTriple::new(12, 40, 7));
    }

    #[test]
    fn rejects_malformed() {
        for bad in ["1.2", "1.2.3.4", "", "a.b.c", "-1.0.0", "1..0", "01.2.3", " 1.2.3", "1.2.3-rc1", "+1.2.3"] {
            assert_eq!(
                parse_semver(bad),
                Err(ModelError::MalformedVersion(bad.to_string())),
                "{bad:?}"
            );
        }
    }

    #[test]
    fn overflow_is_malformed() {
        assert!(parse_semver("99999999999999999999999.0.0").is_err());
    }

    proptest! {
        #[test]
        fn parse_inverts_format(major: u64, minor: u64, patch: u64) {
            let v = SemVerTriple::new(major, minor, patch);
            prop_assert_eq!(parse_semver(&format_semver(&v)).unwrap(), v);
        }
    }
}
