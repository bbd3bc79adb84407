//! Received-signal-strength model for a handset listening to a beacon.
//!
//! The observed RSSI is built from five terms:
//!
//! ```text
//! rssi = p_ref - path_loss(d) - body(facing) - occlusion(walls, shelves, crowd)
//!        + slow_shadowing(t) + fast_fading
//! ```
//!
//! Path loss is log-distance with a 1 m reference. Body shadowing ramps with
//! the cosine of the angle once the beacon is behind the visitor. Static
//! occluders add their configured loss; every crowd agent whose disk touches
//! the line of sight adds `crowd_per_agent`, scaled by `raise_factor` while the
//! phone is held above the crowd. Slow shadowing is a discretely sampled
//! Ornstein-Uhlenbeck process; fast fading is i.i.d. Gaussian.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{segment_hits_disk, Vec2};
use crate::rng::SimRng;
use crate::scenario::ValidationError;
use crate::time::SimTime;
use crate::world::{line_of_sight, Beacon, CrowdDisk, Floorplan, VisitorState, WorldState};

/// Distances below this are clamped to the reference distance.
pub const REFERENCE_DISTANCE_M: f64 = 1.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RadioError {
    #[error("distance must be positive, got {0}")]
    NonPositiveDistance(f64),
    #[error("direction vector has zero length")]
    ZeroVector,
    #[error("sample time {requested} precedes previous sample at {previous} for this stream")]
    TimeRegression { previous: SimTime, requested: SimTime },
}

/// Every coefficient of the RSSI model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RadioParams {
    /// dBm at the 1 m reference distance.
    pub p_ref: f64,
    /// Path-loss exponent.
    pub n_pl: f64,
    /// Std-dev of slow shadowing, dB.
    pub sigma_slow: f64,
    /// Std-dev of per-sample fading, dB.
    pub sigma_fast: f64,
    /// Attenuation with the beacon directly behind the visitor, dB.
    pub body_max: f64,
    /// Attenuation per crowd agent on the line of sight, dB.
    pub crowd_per_agent: f64,
    /// Multiplier on crowd attenuation while the phone is raised.
    pub raise_factor: f64,
    /// Samples below this are reported as not detected, dBm.
    pub detect_floor: f64,
    /// Correlation time of slow shadowing, seconds.
    pub shadow_tau: f64,
}

impl Default for RadioParams {
    fn default() -> Self {
        RadioParams {
            p_ref: -59.0,
            n_pl: 2.2,
            sigma_slow: 3.0,
            sigma_fast: 2.0,
            body_max: 15.0,
            crowd_per_agent: 4.0,
            raise_factor: 0.15,
            detect_floor: -95.0,
            shadow_tau: 5.0,
        }
    }
}

impl RadioParams {
    /// Same coefficients with both noise terms switched off.
    pub fn noiseless(self) -> Self {
        RadioParams {
            sigma_slow: 0.0,
            sigma_fast: 0.0,
            ..self
        }
    }

    pub fn validate(&self) -> Result<(), ValidationError> {
        let all_finite = [
            self.p_ref,
            self.n_pl,
            self.sigma_slow,
            self.sigma_fast,
            self.body_max,
            self.crowd_per_agent,
            self.raise_factor,
            self.detect_floor,
            self.shadow_tau,
        ]
        .iter()
        .all(|v| v.is_finite());
        let check = |ok: bool, field: &str, msg: &str| {
            if ok {
                Ok(())
            } else {
                Err(ValidationError::range(format!("radio.{field}"), msg))
            }
        };
        check(all_finite, "*", "all radio parameters must be finite")?;
        check(self.n_pl > 0.0, "n_pl", "must be > 0")?;
        check(self.sigma_slow >= 0.0, "sigma_slow", "must be >= 0")?;
        check(self.sigma_fast >= 0.0, "sigma_fast", "must be >= 0")?;
        check(self.body_max >= 0.0, "body_max", "must be >= 0")?;
        check(self.crowd_per_agent >= 0.0, "crowd_per_agent", "must be >= 0")?;
        check(
            (0.0..=1.0).contains(&self.raise_factor),
            "raise_factor",
            "must lie in [0, 1]",
        )?;
        check(self.detect_floor < self.p_ref, "detect_floor", "must be below p_ref")?;
        check(self.shadow_tau > 0.0, "shadow_tau", "must be > 0")
    }
}

/// Log-distance path loss relative to the 1 m reference, in dB.
pub fn path_loss(distance: f64, params: &RadioParams) -> Result<f64, RadioError> {
    if distance.is_nan() || distance <= 0.0 {
        return Err(RadioError::NonPositiveDistance(distance));
    }
    let d = distance.max(REFERENCE_DISTANCE_M);
    Ok(10.0 * params.n_pl * (d / REFERENCE_DISTANCE_M).log10())
}

/// Loss from the visitor's own body when the beacon is behind them.
///
/// Zero anywhere in the front half-plane, `body_max` directly behind.
pub fn body_attenuation(facing: Vec2, to_beacon: Vec2, params: &RadioParams) -> Result<f64, RadioError> {
    let facing = facing.normalized().ok_or(RadioError::ZeroVector)?;
    let to_beacon = to_beacon.normalized().ok_or(RadioError::ZeroVector)?;
    let cos = facing.dot(to_beacon).clamp(-1.0, 1.0);
    Ok(params.body_max * (-cos).max(0.0))
}

/// Loss along the segment `from -> to`: static walls and obstacles plus crowd.
pub fn occlusion_attenuation(
    from: Vec2,
    to: Vec2,
    floorplan: &Floorplan,
    crowd: &[CrowdDisk],
    phone_raised: bool,
    params: &RadioParams,
) -> f64 {
    let static_db: f64 = line_of_sight(from, to, floorplan)
        .into_iter()
        .map(|o| o.attenuation_db(floorplan))
        .sum();
    let blockers = crowd
        .iter()
        .filter(|disk| segment_hits_disk(from, to, disk.center, disk.radius))
        .count();
    let mut crowd_db = params.crowd_per_agent * blockers as f64;
    if phone_raised {
        crowd_db *= params.raise_factor;
    }
    static_db + crowd_db
}

/// The noiseless part of the model: `p_ref` minus every attenuation term.
pub fn deterministic_rssi(
    beacon_pos: Vec2,
    visitor: &VisitorState,
    floorplan: &Floorplan,
    crowd: &[CrowdDisk],
    params: &RadioParams,
) -> f64 {
    let offset = beacon_pos - visitor.position;
    let distance = offset.length();
    // A visitor standing on the beacon sees the reference distance and no body loss.
    let loss = if distance > 0.0 {
        path_loss(distance, params).unwrap_or(0.0)
    } else {
        0.0
    };
    let body = body_attenuation(visitor.facing, offset, params).unwrap_or(0.0);
    let occlusion = occlusion_attenuation(
        visitor.position,
        beacon_pos,
        floorplan,
        crowd,
        visitor.phone_raised,
        params,
    );
    params.p_ref - loss - body - occlusion
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RssiSample {
    pub time: SimTime,
    pub beacon_id: String,
    /// Present exactly when `detected`.
    pub rssi: Option<f64>,
    pub detected: bool,
}

impl RssiSample {
    pub fn detected(time: SimTime, beacon_id: impl Into<String>, rssi: f64) -> Self {
        RssiSample {
            time,
            beacon_id: beacon_id.into(),
            rssi: Some(rssi),
            detected: true,
        }
    }

    pub fn missed(time: SimTime, beacon_id: impl Into<String>) -> Self {
        RssiSample {
            time,
            beacon_id: beacon_id.into(),
            rssi: None,
            detected: false,
        }
    }
}

/// Per-beacon random state: the seeded stream plus the slow-shadowing value.
#[derive(Debug, Clone)]
pub struct FadingChannel {
    rng: SimRng,
    slow_db: Option<f64>,
    last_time: Option<SimTime>,
}

impl FadingChannel {
    pub fn new(rng: SimRng) -> Self {
        FadingChannel {
            rng,
            slow_db: None,
            last_time: None,
        }
    }

    /// Draw the fluctuation at `t`: advance the slow process to `t`, then add
    /// a fresh fast-fading draw. Always consumes exactly two normals.
    pub fn fluctuation(&mut self, t: SimTime, params: &RadioParams) -> Result<f64, RadioError> {
        if let Some(previous) = self.last_time {
            if t < previous {
                return Err(RadioError::TimeRegression {
                    previous,
                    requested: t,
                });
            }
        }
        let slow_noise: f64 = self.rng.sample(StandardNormal);
        let fast_noise: f64 = self.rng.sample(StandardNormal);
        let slow = match (self.slow_db, self.last_time) {
            (Some(prev), Some(last)) => {
                let dt = (t - last).as_secs();
                let rho = (-dt / params.shadow_tau).exp();
                rho * prev + (1.0 - rho * rho).sqrt() * params.sigma_slow * slow_noise
            }
            // Start from the stationary distribution.
            _ => params.sigma_slow * slow_noise,
        };
        self.slow_db = Some(slow);
        self.last_time = Some(t);
        Ok(slow + params.sigma_fast * fast_noise)
    }
}

/// One observation of `beacon` by the visitor at time `t`.
pub fn sample_rssi(
    beacon: &Beacon,
    visitor: &VisitorState,
    world: &WorldState,
    t: SimTime,
    channel: &mut FadingChannel,
    params: &RadioParams,
) -> Result<RssiSample, RadioError> {
    let crowd = world.crowd_disks();
    let base = deterministic_rssi(beacon.pos(), visitor, &world.floorplan, &crowd, params);
    let raw = base + channel.fluctuation(t, params)?;
    Ok(if raw >= params.detect_floor {
        RssiSample::detected(t, beacon.id.clone(), raw)
    } else {
        RssiSample::missed(t, beacon.id.clone())
    })
}
