//! Scenario-clock timestamps.
//!
//! Time is carried as integer nanoseconds so that the wire form (seconds with
//! exactly nine decimals) maps one-to-one onto the in-memory value.

use std::fmt;
use std::ops::{Add, Sub};
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

const NANOS_PER_SEC: i64 = 1_000_000_000;

/// A point on the scenario clock, in nanoseconds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Stamp(i64);

impl Stamp {
    pub const ZERO: Stamp = Stamp(0);

    pub const fn from_nanos(nanos: i64) -> Self {
        Stamp(nanos)
    }

    /// Rounds to the nearest nanosecond.
    pub fn from_secs_f64(secs: f64) -> Self {
        Stamp((secs * NANOS_PER_SEC as f64).round() as i64)
    }

    pub const fn nanos(self) -> i64 {
        self.0
    }

    pub fn secs_f64(self) -> f64 {
        self.0 as f64 / NANOS_PER_SEC as f64
    }
}

impl Add for Stamp {
    type Output = Stamp;
    fn add(self, rhs: Stamp) -> Stamp {
        Stamp(self.0 + rhs.0)
    }
}

impl Sub for Stamp {
    type Output = Stamp;
    fn sub(self, rhs: Stamp) -> Stamp {
        Stamp(self.0 - rhs.0)
    }
}

impl fmt::Display for Stamp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sign = if self.0 < 0 { "-" } else { "" };
        let abs = self.0.unsigned_abs();
        write!(
            f,
            "{sign}{}.{:09}",
            abs / NANOS_PER_SEC as u64,
            abs % NANOS_PER_SEC as u64
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("invalid timestamp `{0}`: expected decimal seconds with at most 9 fractional digits")]
pub struct ParseStampError(pub String);

impl FromStr for Stamp {
    type Err = ParseStampError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let err = || ParseStampError(s.to_string());
        let (neg, body) = match s.strip_prefix('-') {
            Some(rest) => (true, rest),
            None => (false, s),
        };
        let (int, frac) = body.split_once('.').unwrap_or((body, ""));
        if int.is_empty()
            || frac.len() > 9
            || !int.bytes().all(|b| b.is_ascii_digit())
            || !frac.bytes().all(|b| b.is_ascii_digit())
        {
            return Err(err());
        }
        let secs: i64 = int.parse().map_err(|_| err())?;
        let mut nanos: i64 = 0;
        for b in frac.bytes().chain(std::iter::repeat(b'0')).take(9) {
            nanos = nanos * 10 + (b - b'0') as i64;
        }
        let total = secs
            .checked_mul(NANOS_PER_SEC)
            .and_then(|v| v.checked_add(nanos))
            .ok_or_else(err)?;
        Ok(Stamp(if neg { -total } else { total }))
    }
}

impl Serialize for Stamp {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let number = serde_json::Number::from_str(&self.to_string())
            .map_err(serde::ser::Error::custom)?;
        number.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Stamp {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let number = serde_json::Number::deserialize(deserializer)?;
        number.to_string().parse().map_err(serde::de::Error::custom)
    }
}
