//! SCTID-style identifiers.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

/// Longest accepted decimal rendering of an identifier.
pub const MAX_ID_DIGITS: usize = 18;

/// A positive decimal identifier of at most 18 digits.
///
/// Used for concepts as well as description and relationship rows. The
/// SCT-TSV reader additionally requires at least 6 digits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SctId(u64);

/// Identifier of a concept (graph node key).
pub type ConceptId = SctId;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum IdError {
    #[error("identifier is empty")]
    Empty,
    #[error("identifier {0:?} is not decimal")]
    NotDecimal(String),
    #[error("identifier {0:?} has a leading zero")]
    LeadingZero(String),
    #[error("identifier {0:?} exceeds {MAX_ID_DIGITS} digits")]
    TooLong(String),
    #[error("identifier must be positive")]
    Zero,
}

impl SctId {
    pub const MAX: u64 = 999_999_999_999_999_999;

    pub fn new(value: u64) -> Result<Self, IdError> {
        match value {
            0 => Err(IdError::Zero),
            v if v > Self::MAX => Err(IdError::TooLong(v.to_string())),
            v => Ok(SctId(v)),
        }
    }

    pub fn get(self) -> u64 {
        self.0
    }

    /// Number of decimal digits in the canonical rendering.
    pub fn digits(self) -> usize {
        self.0.ilog10() as usize + 1
    }
}

impl fmt::Display for SctId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(&self.0, f)
    }
}

impl FromStr for SctId {
    type Err = IdError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s.is_empty() {
            return Err(IdError::Empty);
        }
        if !s.bytes().all(|b| b.is_ascii_digit()) {
            return Err(IdError::NotDecimal(s.to_owned()));
        }
        if s.len() > MAX_ID_DIGITS {
            return Err(IdError::TooLong(s.to_owned()));
        }
        if s.starts_with('0') {
            return Err(if s.bytes().all(|b| b == b'0') {
                IdError::Zero
            } else {
                IdError::LeadingZero(s.to_owned())
            });
        }
        // At most 18 digits always fits in u64.
        Ok(SctId(s.parse().expect("bounded decimal")))
    }
}

impl TryFrom<u64> for SctId {
    type Error = IdError;

    fn try_from(value: u64) -> Result<Self, Self::Error> {
        SctId::new(value)
    }
}

impl From<SctId> for u64 {
    fn from(id: SctId) -> u64 {
        id.0
    }
}
