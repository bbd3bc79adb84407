//! Signal coverage maps: predicted RSSI per grid cell and beacon, with the
//! handset facing the beacon and no crowd present.
//!
//! The grid is centred in the floorplan bounds, so a room with a centred
//! beacon produces a symmetric map.

use std::fmt::Write as _;

use rand::Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

use crate::geometry::Vec2;
use crate::radio::{deterministic_rssi, RadioParams};
use crate::rng::{coverage_stream_name, substream};
use crate::world::{Beacon, Floorplan, VisitorState};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CoverageError {
    #[error("resolution must be positive, got {0}")]
    Resolution(f64),
    #[error("mean-of-k needs k >= 1")]
    ZeroSamples,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CoverageMode {
    /// Noise switched off.
    Deterministic,
    /// Average of `k` noisy draws per cell, from named sub-streams of `seed`.
    MeanOf { k: u32, seed: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CellValue {
    Rssi(f64),
    Undetected,
    /// Cell centre lies inside an obstacle.
    Unreachable,
}

impl CellValue {
    pub fn rssi(self) -> Option<f64> {
        match self {
            CellValue::Rssi(v) => Some(v),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoverageMap {
    pub resolution: f64,
    pub nx: usize,
    pub ny: usize,
    /// Centre of cell (0, 0).
    pub origin: Vec2,
    pub beacon_ids: Vec<String>,
    /// Row-major by `iy`, then `ix`, then beacon.
    values: Vec<CellValue>,
    p_ref: f64,
    detect_floor: f64,
}

impl CoverageMap {
    pub fn cell_center(&self, ix: usize, iy: usize) -> Vec2 {
        Vec2::new(
            self.origin.x + ix as f64 * self.resolution,
            self.origin.y + iy as f64 * self.resolution,
        )
    }

    pub fn value(&self, ix: usize, iy: usize, beacon: usize) -> CellValue {
        self.values[(iy * self.nx + ix) * self.beacon_ids.len() + beacon]
    }

    /// `x,y,beacon_id,rssi` with `none` for undetected and `unreachable` for
    /// cells inside obstacles.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("x,y,beacon_id,rssi\n");
        for iy in 0..self.ny {
            for ix in 0..self.nx {
                let c = self.cell_center(ix, iy);
                for (b, id) in self.beacon_ids.iter().enumerate() {
                    let v = match self.value(ix, iy, b) {
                        CellValue::Rssi(v) => v.to_string(),
                        CellValue::Undetected => "none".to_owned(),
                        CellValue::Unreachable => "unreachable".to_owned(),
                    };
                    let _ = writeln!(out, "{},{},{id},{v}", c.x, c.y);
                }
            }
        }
        out
    }

    /// Binary PGM (P5) for one beacon, north up. Unreachable cells are 0,
    /// undetected cells 1, and detected values scale from the floor (2) to
    /// `p_ref` (255).
    pub fn to_pgm(&self, beacon: usize) -> Vec<u8> {
        let mut out = format!("P5\n{} {}\n255\n", self.nx, self.ny).into_bytes();
        let span = self.p_ref - self.detect_floor;
        for iy in (0..self.ny).rev() {
            for ix in 0..self.nx {
                let px = match self.value(ix, iy, beacon) {
                    CellValue::Unreachable => 0,
                    CellValue::Undetected => 1,
                    CellValue::Rssi(v) => {
                        let frac = ((v - self.detect_floor) / span).clamp(0.0, 1.0);
                        2 + (frac * 253.0).round() as u8
                    }
                };
                out.push(px);
            }
        }
        out
    }
}

pub fn coverage_map(
    floorplan: &Floorplan,
    beacons: &[Beacon],
    params: &RadioParams,
    resolution: f64,
    mode: CoverageMode,
) -> Result<CoverageMap, CoverageError> {
    if !(resolution.is_finite() && resolution > 0.0) {
        return Err(CoverageError::Resolution(resolution));
    }
    if let CoverageMode::MeanOf { k: 0, .. } = mode {
        return Err(CoverageError::ZeroSamples);
    }
    let bounds = floorplan.bounds;
    let nx = ((bounds.width() / resolution).floor() as usize).max(1);
    let ny = ((bounds.height() / resolution).floor() as usize).max(1);
    let center = bounds.center();
    let origin = Vec2::new(
        center.x - (nx as f64 - 1.0) / 2.0 * resolution,
        center.y - (ny as f64 - 1.0) / 2.0 * resolution,
    );
    let beacons: Vec<&Beacon> = beacons.iter().filter(|b| b.enabled).collect();
    let mut rngs: Vec<_> = beacons
        .iter()
        .map(|b| match mode {
            CoverageMode::MeanOf { seed, .. } => Some(substream(seed, &coverage_stream_name(&b.id))),
            CoverageMode::Deterministic => None,
        })
        .collect();

    let mut values = Vec::with_capacity(nx * ny * beacons.len());
    for iy in 0..ny {
        for ix in 0..nx {
            let cell = Vec2::new(
                origin.x + ix as f64 * resolution,
                origin.y + iy as f64 * resolution,
            );
            let blocked = floorplan.in_obstacle(cell);
            for (beacon, rng) in beacons.iter().zip(&mut rngs) {
                if blocked {
                    values.push(CellValue::Unreachable);
                    continue;
                }
                let pos = beacon.pos();
                let facing = (pos - cell).normalized().unwrap_or(Vec2::new(1.0, 0.0));
                let visitor = VisitorState {
                    position: cell,
                    facing,
                    phone_raised: false,
                    speed: 0.0,
                };
                let base = deterministic_rssi(pos, &visitor, floorplan, &[], params);
                let value = match (mode, rng) {
                    (CoverageMode::MeanOf { k, .. }, Some(rng)) => {
                        let total: f64 = (0..k)
                            .map(|_| {
                                let slow: f64 = rng.sample(StandardNormal);
                                let fast: f64 = rng.sample(StandardNormal);
                                base + params.sigma_slow * slow + params.sigma_fast * fast
                            })
                            .sum();
                        total / k as f64
                    }
                    _ => base,
                };
                values.push(if value >= params.detect_floor {
                    CellValue::Rssi(value)
                } else {
                    CellValue::Undetected
                });
            }
        }
    }
    Ok(CoverageMap {
        resolution,
        nx,
        ny,
        origin,
        beacon_ids: beacons.iter().map(|b| b.id.clone()).collect(),
        values,
        p_ref: params.p_ref,
        detect_floor: params.detect_floor,
    })
}
