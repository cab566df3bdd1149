//! Absolute instants and exact durations at millisecond resolution.
//!
//! No calendars or time zones: every instant is UTC milliseconds since the
//! Unix epoch and every duration is a plain millisecond count.

use std::fmt;
use std::ops::{Add, Sub};

use chrono::{DateTime, SecondsFormat, Utc};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

const MINUTE: i64 = 60_000;
const HOUR: i64 = 60 * MINUTE;
const DAY: i64 = 24 * HOUR;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Timestamp(i64);

impl Timestamp {
    pub const fn from_millis(millis: i64) -> Self {
        Timestamp(millis)
    }

    pub const fn millis(self) -> i64 {
        self.0
    }

    /// Parses an ISO-8601 / RFC 3339 instant. Sub-millisecond digits are
    /// truncated.
    pub fn parse_iso(text: &str) -> Result<Self, String> {
        let parsed = DateTime::parse_from_rfc3339(text)
            .map_err(|e| format!("invalid timestamp '{text}': {e}"))?;
        Ok(Timestamp(parsed.with_timezone(&Utc).timestamp_millis()))
    }

    pub fn to_iso(self) -> String {
        match DateTime::<Utc>::from_timestamp_millis(self.0) {
            Some(dt) => dt.to_rfc3339_opts(SecondsFormat::Millis, true),
            None => format!("@{}ms", self.0),
        }
    }
}

impl fmt::Display for Timestamp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_iso())
    }
}

impl Serialize for Timestamp {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_iso())
    }
}

impl<'de> Deserialize<'de> for Timestamp {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let text = String::deserialize(deserializer)?;
        Timestamp::parse_iso(&text).map_err(serde::de::Error::custom)
    }
}

impl Add<Duration> for Timestamp {
    type Output = Timestamp;

    fn add(self, rhs: Duration) -> Timestamp {
        Timestamp(self.0 + rhs.0)
    }
}

impl Sub for Timestamp {
    type Output = Duration;

    fn sub(self, rhs: Timestamp) -> Duration {
        Duration(self.0 - rhs.0)
    }
}

/// Signed span of time in milliseconds. Durations written in the constraint
/// language are always whole minutes, hours or days.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Duration(i64);

impl Duration {
    pub const fn from_millis(millis: i64) -> Self {
        Duration(millis)
    }

    pub const fn minutes(n: i64) -> Self {
        Duration(n * MINUTE)
    }

    pub const fn hours(n: i64) -> Self {
        Duration(n * HOUR)
    }

    pub const fn days(n: i64) -> Self {
        Duration(n * DAY)
    }

    pub const fn millis(self) -> i64 {
        self.0
    }

    pub fn is_positive(self) -> bool {
        self.0 > 0
    }

    /// Builds a duration from an integer amount and a unit letter (`m`, `h`, `d`).
    pub fn from_unit(amount: i64, unit: char) -> Option<Self> {
        let scale = match unit {
            'm' => MINUTE,
            'h' => HOUR,
            'd' => DAY,
            _ => return None,
        };
        amount.checked_mul(scale).map(Duration)
    }
}

impl fmt::Display for Duration {
    /// Renders with the largest unit that divides the value exactly.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let ms = self.0;
        if ms != 0 && ms % DAY == 0 {
            write!(f, "{}d", ms / DAY)
        } else if ms != 0 && ms % HOUR == 0 {
            write!(f, "{}h", ms / HOUR)
        } else if ms % MINUTE == 0 {
            write!(f, "{}m", ms / MINUTE)
        } else {
            write!(f, "{ms}ms")
        }
    }
}

impl Serialize for Duration {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_string())
    }
}
