//! From raw samples to what the game consumes: a smoothed RSSI, a coarse
//! proximity zone and a warmer/colder trend.
//!
//! Only detected samples feed the smoothers. Missed samples still count as
//! history (they extend its span) but never pull the estimate toward the
//! detection floor; they matter through `lost_timeout` alone.
//!
//! The smoothed value at an instant `s`, as seen from `now`, uses the detected
//! samples with `now - window <= time <= s`. Trend compares that value at
//! `now` and at `now - trend_gap`.

use std::collections::VecDeque;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::radio::RssiSample;
use crate::scenario::ValidationError;
use crate::time::SimTime;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SensingError {
    #[error("sample for '{beacon_id}' at {requested} is older than the last ingested sample at {previous}")]
    TimeRegression {
        beacon_id: String,
        previous: SimTime,
        requested: SimTime,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SmoothingMethod {
    /// Time-decayed mean; a sample `half_life` seconds older weighs half as much.
    Ewma { half_life: f64 },
    SlidingMedian,
    /// Latest detected value, unsmoothed.
    Raw,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SmoothingConfig {
    pub window: SimTime,
    pub method: SmoothingMethod,
    pub trend_gap: SimTime,
    pub trend_epsilon: f64,
    pub lost_timeout: SimTime,
    pub near_dbm: f64,
    pub mid_dbm: f64,
    pub arrival_dbm: f64,
    pub arrival_hold: SimTime,
}

impl Default for SmoothingConfig {
    fn default() -> Self {
        SmoothingConfig {
            window: SimTime::from_secs(6.0),
            method: SmoothingMethod::Ewma { half_life: 1.5 },
            trend_gap: SimTime::from_secs(2.0),
            trend_epsilon: 2.0,
            lost_timeout: SimTime::from_secs(4.0),
            near_dbm: -65.0,
            mid_dbm: -80.0,
            arrival_dbm: -60.0,
            arrival_hold: SimTime::from_secs(3.0),
        }
    }
}

impl SmoothingConfig {
    pub fn validate(&self, detect_floor: f64) -> Result<(), ValidationError> {
        let check = |ok: bool, field: &str, msg: &str| {
            if ok {
                Ok(())
            } else {
                Err(ValidationError::range(format!("sensing.{field}"), msg))
            }
        };
        check(self.window > SimTime::ZERO, "window", "must be > 0")?;
        check(
            self.trend_gap > SimTime::ZERO && self.trend_gap < self.window,
            "trend_gap",
            "must be > 0 and shorter than window",
        )?;
        check(
            self.trend_epsilon.is_finite() && self.trend_epsilon >= 0.0,
            "trend_epsilon",
            "must be >= 0",
        )?;
        check(
            self.lost_timeout > SimTime::ZERO && self.lost_timeout <= self.window,
            "lost_timeout",
            "must be > 0 and no longer than window",
        )?;
        check(
            self.arrival_hold >= SimTime::ZERO && self.arrival_hold < self.window,
            "arrival_hold",
            "must be >= 0 and shorter than window",
        )?;
        check(
            self.near_dbm.is_finite() && self.mid_dbm.is_finite() && self.near_dbm > self.mid_dbm,
            "near_dbm",
            "must be above mid_dbm",
        )?;
        check(self.mid_dbm > detect_floor, "mid_dbm", "must be above the radio detect_floor")?;
        check(
            self.arrival_dbm.is_finite() && self.arrival_dbm > self.mid_dbm,
            "arrival_dbm",
            "must be above mid_dbm",
        )?;
        if let SmoothingMethod::Ewma { half_life } = self.method {
            check(
                half_life.is_finite() && half_life > 0.0,
                "method.half_life",
                "must be > 0",
            )?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Zone {
    Near,
    Mid,
    Far,
    Lost,
}

impl Zone {
    pub const ALL: [Zone; 4] = [Zone::Near, Zone::Mid, Zone::Far, Zone::Lost];

    pub fn as_str(self) -> &'static str {
        match self {
            Zone::Near => "near",
            Zone::Mid => "mid",
            Zone::Far => "far",
            Zone::Lost => "lost",
        }
    }
}

impl fmt::Display for Zone {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Trend {
    Warmer,
    Colder,
    Steady,
    Unknown,
}

impl Trend {
    pub const ALL: [Trend; 4] = [Trend::Warmer, Trend::Colder, Trend::Steady, Trend::Unknown];

    pub fn as_str(self) -> &'static str {
        match self {
            Trend::Warmer => "warmer",
            Trend::Colder => "colder",
            Trend::Steady => "steady",
            Trend::Unknown => "unknown",
        }
    }
}

impl fmt::Display for Trend {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProximityEstimate {
    pub beacon_id: String,
    pub smoothed_rssi: Option<f64>,
    pub zone: Zone,
    pub trend: Trend,
}

impl ProximityEstimate {
    pub fn is_lost(&self) -> bool {
        self.zone == Zone::Lost
    }
}

/// Zone for a smoothed value (not accounting for the lost timeout).
pub fn classify(smoothed: f64, cfg: &SmoothingConfig) -> Zone {
    if smoothed >= cfg.near_dbm {
        Zone::Near
    } else if smoothed >= cfg.mid_dbm {
        Zone::Mid
    } else {
        Zone::Far
    }
}

/// Recent samples for one beacon, bounded by `window`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct BeaconHistory {
    samples: VecDeque<RssiSample>,
}

impl BeaconHistory {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn samples(&self) -> impl Iterator<Item = &RssiSample> {
        self.samples.iter()
    }

    pub fn ingest(&mut self, sample: RssiSample, cfg: &SmoothingConfig) -> Result<(), SensingError> {
        if let Some(last) = self.samples.back() {
            if sample.time < last.time {
                return Err(SensingError::TimeRegression {
                    beacon_id: sample.beacon_id,
                    previous: last.time,
                    requested: sample.time,
                });
            }
        }
        let horizon = sample.time - cfg.window;
        self.samples.push_back(sample);
        while self.samples.front().is_some_and(|s| s.time < horizon) {
            self.samples.pop_front();
        }
        Ok(())
    }

    /// Smoothed value at `at`, using only samples inside the window ending at `now`.
    pub fn smoothed_at(&self, at: SimTime, now: SimTime, cfg: &SmoothingConfig) -> Option<f64> {
        let horizon = now - cfg.window;
        let points = self
            .samples
            .iter()
            .filter(|s| s.time >= horizon && s.time <= at)
            .filter_map(|s| s.rssi.filter(|_| s.detected).map(|v| (s.time, v)));
        smooth(points, cfg.method)
    }

    fn detected_since(&self, since: SimTime, now: SimTime) -> bool {
        self.samples
            .iter()
            .any(|s| s.detected && s.time >= since && s.time <= now)
    }

    fn oldest(&self) -> Option<SimTime> {
        self.samples.front().map(|s| s.time)
    }
}

/// Apply `method` to time-ordered `(time, value)` points.
fn smooth(points: impl Iterator<Item = (SimTime, f64)>, method: SmoothingMethod) -> Option<f64> {
    match method {
        SmoothingMethod::Raw => points.last().map(|(_, v)| v),
        SmoothingMethod::SlidingMedian => {
            let mut values: Vec<f64> = points.map(|(_, v)| v).collect();
            if values.is_empty() {
                return None;
            }
            values.sort_by(f64::total_cmp);
            let mid = values.len() / 2;
            Some(if values.len() % 2 == 1 {
                values[mid]
            } else {
                (values[mid - 1] + values[mid]) / 2.0
            })
        }
        SmoothingMethod::Ewma { half_life } => {
            let points: Vec<(SimTime, f64)> = points.collect();
            let &(newest, _) = points.last()?;
            let anchor = points[0].1;
            // Weighted mean of offsets from the first value: a constant input
            // comes back bit-for-bit.
            let (mut num, mut den) = (0.0, 0.0);
            for &(t, v) in &points {
                let w = (-(newest - t).as_secs() / half_life).exp2();
                num += w * (v - anchor);
                den += w;
            }
            Some(anchor + num / den)
        }
    }
}

pub fn estimate(beacon_id: &str, history: &BeaconHistory, now: SimTime, cfg: &SmoothingConfig) -> ProximityEstimate {
    let lost = !history.detected_since(now - cfg.lost_timeout, now);
    if lost {
        return ProximityEstimate {
            beacon_id: beacon_id.to_owned(),
            smoothed_rssi: None,
            zone: Zone::Lost,
            trend: Trend::Unknown,
        };
    }
    let current = history.smoothed_at(now, now, cfg);
    let zone = current.map_or(Zone::Lost, |v| classify(v, cfg));
    let earlier = now - cfg.trend_gap;
    let covers_gap = history.oldest().is_some_and(|t| t <= earlier);
    let previous = if covers_gap {
        history.smoothed_at(earlier, now, cfg)
    } else {
        None
    };
    let trend = match (current, previous) {
        (Some(cur), Some(prev)) => {
            let delta = cur - prev;
            if delta > cfg.trend_epsilon {
                Trend::Warmer
            } else if delta < -cfg.trend_epsilon {
                Trend::Colder
            } else {
                Trend::Steady
            }
        }
        _ => Trend::Unknown,
    };
    ProximityEstimate {
        beacon_id: beacon_id.to_owned(),
        smoothed_rssi: current,
        zone,
        trend,
    }
}

/// Has the smoothed value stayed at or above `arrival_dbm` for the whole of
/// the last `arrival_hold`?
///
/// The smoothed value only changes at sample times, so it is checked at the
/// last sample at or before `now - arrival_hold` and at every sample after it.
pub fn arrival_check(history: &BeaconHistory, now: SimTime, cfg: &SmoothingConfig) -> bool {
    if !history.detected_since(now - cfg.lost_timeout, now) {
        return false;
    }
    let start = now - cfg.arrival_hold;
    let Some(first) = history
        .samples()
        .filter(|s| s.time <= start)
        .map(|s| s.time)
        .last()
    else {
        return false;
    };
    history
        .samples()
        .map(|s| s.time)
        .filter(|&t| t >= first && t <= now)
        .all(|t| {
            history
                .smoothed_at(t, now, cfg)
                .is_some_and(|v| v >= cfg.arrival_dbm)
        })
}
