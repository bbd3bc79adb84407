//! Simulation clock.
//!
//! Time is kept as an integer count of microseconds so that tick arithmetic,
//! window eviction and hold/timeout comparisons are exact. Seconds appear only
//! at the edges: scenario files, the event log and weighting functions.

use std::fmt;
use std::ops::{Add, AddAssign, Sub};

use serde::{Deserialize, Deserializer, Serialize, Serializer};

const MICROS_PER_SECOND: f64 = 1_000_000.0;

/// A point in simulated time (or a span), in whole microseconds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct SimTime(i64);

impl SimTime {
    pub const ZERO: SimTime = SimTime(0);

    pub const fn from_micros(micros: i64) -> Self {
        SimTime(micros)
    }

    /// Rounds to the nearest microsecond. Non-finite input maps to zero.
    pub fn from_secs(secs: f64) -> Self {
        if !secs.is_finite() {
            return SimTime(0);
        }
        SimTime((secs * MICROS_PER_SECOND).round() as i64)
    }

    pub const fn as_micros(self) -> i64 {
        self.0
    }

    pub fn as_secs(self) -> f64 {
        self.0 as f64 / MICROS_PER_SECOND
    }

    pub fn saturating_sub(self, other: SimTime) -> SimTime {
        SimTime(self.0.saturating_sub(other.0))
    }

    /// `self * n`, used to place tick `n` on the clock.
    pub fn times(self, n: u64) -> SimTime {
        SimTime(self.0 * n as i64)
    }
}

impl Add for SimTime {
    type Output = SimTime;
    fn add(self, rhs: SimTime) -> SimTime {
        SimTime(self.0 + rhs.0)
    }
}

impl AddAssign for SimTime {
    fn add_assign(&mut self, rhs: SimTime) {
        self.0 += rhs.0;
    }
}

impl Sub for SimTime {
    type Output = SimTime;
    fn sub(self, rhs: SimTime) -> SimTime {
        SimTime(self.0 - rhs.0)
    }
}

impl fmt::Display for SimTime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}s", self.as_secs())
    }
}

// On the wire a `SimTime` is plain seconds.
impl Serialize for SimTime {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_f64(self.as_secs())
    }
}

impl<'de> Deserialize<'de> for SimTime {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let secs = f64::deserialize(deserializer)?;
        if !secs.is_finite() {
            return Err(serde::de::Error::custom("time must be finite"));
        }
        Ok(SimTime::from_secs(secs))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tenth_of_a_second_accumulates_exactly() {
        let tick = SimTime::from_secs(0.1);
        let mut t = SimTime::ZERO;
        for _ in 0..600 {
            t += tick;
        }
        assert_eq!(t, SimTime::from_secs(60.0));
        assert_eq!(tick.times(600), t);
    }

    #[test]
    fn serde_uses_seconds() {
        let t = SimTime::from_micros(2_500_000);
        assert_eq!(serde_json::to_string(&t).unwrap(), "2.5");
        let back: SimTime = serde_json::from_str("2.5").unwrap();
        assert_eq!(back, t);
    }
}
