//! Test-side oracles. Nothing here calls into the library's math; each
//! function recomputes its answer from first principles so that a shared bug
//! cannot hide on both sides of an assertion.

#![allow(dead_code)]

use std::path::PathBuf;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use seamquest::geometry::Vec2;
use seamquest::sensing::{SmoothingConfig, SmoothingMethod, Trend, Zone};
use seamquest::{load_scenario_file, Scenario, SimTime};

pub fn scenario_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../scenarios")
        .join(format!("{name}.json"))
}

pub fn bundled(name: &str) -> Scenario {
    load_scenario_file(scenario_path(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

pub const BUNDLED: [&str; 3] = ["smoke", "shelved_gallery", "crowd_blockage"];

/// Free-space RSSI straight from the log-distance formula.
pub fn free_space_rssi(p_ref: f64, n_pl: f64, d: f64) -> f64 {
    p_ref - 10.0 * n_pl * d.max(1.0).log10()
}

/// Does the closed segment `a-b` come within `r` of `c`? Solved as a
/// quadratic in the segment parameter instead of a projection.
pub fn segment_meets_disk(a: Vec2, b: Vec2, c: Vec2, r: f64) -> bool {
    let (dx, dy) = (b.x - a.x, b.y - a.y);
    let (fx, fy) = (a.x - c.x, a.y - c.y);
    let qa = dx * dx + dy * dy;
    let qb = 2.0 * (fx * dx + fy * dy);
    let qc = fx * fx + fy * fy - r * r;
    if qc <= 0.0 {
        return true; // a starts inside
    }
    if qa == 0.0 {
        return false;
    }
    let disc = qb * qb - 4.0 * qa * qc;
    if disc < 0.0 {
        return false;
    }
    let root = disc.sqrt();
    let t0 = (-qb - root) / (2.0 * qa);
    let t1 = (-qb + root) / (2.0 * qa);
    (0.0..=1.0).contains(&t0) || (0.0..=1.0).contains(&t1) || (t0 < 0.0 && t1 > 1.0)
}

/// Cyrus-Beck clip of segment `a-b` against a counter-clockwise convex
/// polygon. Returns the clipped parameter interval, inclusive of the
/// boundary, or `None` if the segment misses.
pub fn cyrus_beck(a: Vec2, b: Vec2, poly: &[Vec2]) -> Option<(f64, f64)> {
    let d = Vec2::new(b.x - a.x, b.y - a.y);
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    for i in 0..poly.len() {
        let p = poly[i];
        let q = poly[(i + 1) % poly.len()];
        // inward normal of a CCW edge
        let n = Vec2::new(-(q.y - p.y), q.x - p.x);
        let num = n.x * (a.x - p.x) + n.y * (a.y - p.y);
        let den = n.x * d.x + n.y * d.y;
        if den == 0.0 {
            if num < 0.0 {
                return None;
            }
        } else {
            let t = -num / den;
            if den > 0.0 {
                lo = lo.max(t);
            } else {
                hi = hi.min(t);
            }
        }
        if lo > hi {
            return None;
        }
    }
    Some((lo, hi))
}

/// Orient any simple convex polygon counter-clockwise.
pub fn ccw(mut poly: Vec<Vec2>) -> Vec<Vec2> {
    let area: f64 = (0..poly.len())
        .map(|i| {
            let p = poly[i];
            let q = poly[(i + 1) % poly.len()];
            p.x * q.y - q.x * p.y
        })
        .sum();
    if area < 0.0 {
        poly.reverse();
    }
    poly
}

/// One recorded sample as the oracle sees it: time and optional value.
#[derive(Debug, Clone, Copy)]
pub struct Obs {
    pub t: SimTime,
    pub rssi: Option<f64>,
}

/// Smoothed value at `at` from the full stream, window ending at `now`.
pub fn oracle_smoothed(stream: &[Obs], at: SimTime, now: SimTime, cfg: &SmoothingConfig) -> Option<f64> {
    let lo = now.as_micros() - cfg.window.as_micros();
    let mut pts = Vec::new();
    for o in stream {
        let us = o.t.as_micros();
        if us >= lo && us <= at.as_micros() && us <= now.as_micros() {
            if let Some(v) = o.rssi {
                pts.push((us, v));
            }
        }
    }
    if pts.is_empty() {
        return None;
    }
    match cfg.method {
        SmoothingMethod::Raw => Some(pts[pts.len() - 1].1),
        SmoothingMethod::SlidingMedian => {
            let mut v: Vec<f64> = pts.iter().map(|p| p.1).collect();
            // insertion sort, nothing clever
            for i in 1..v.len() {
                let mut j = i;
                while j > 0 && v[j - 1] > v[j] {
                    v.swap(j - 1, j);
                    j -= 1;
                }
            }
            let n = v.len();
            Some(if n % 2 == 1 { v[n / 2] } else { (v[n / 2 - 1] + v[n / 2]) / 2.0 })
        }
        SmoothingMethod::Ewma { half_life } => {
            // Weighted mean of offsets from the oldest value in the window,
            // with weights 2^(-age / half_life).
            let newest = pts[pts.len() - 1].0;
            let base = pts[0].1;
            let mut num = 0.0;
            let mut den = 0.0;
            for &(us, v) in &pts {
                let age = (newest - us) as f64 / 1e6;
                let w = 2f64.powf(-age / half_life);
                num += w * (v - base);
                den += w;
            }
            Some(base + num / den)
        }
    }
}

fn detected_within(stream: &[Obs], since: SimTime, now: SimTime) -> bool {
    stream
        .iter()
        .any(|o| o.rssi.is_some() && o.t.as_micros() >= since.as_micros() && o.t.as_micros() <= now.as_micros())
}

/// Samples the library still holds: those within one window of the newest.
pub fn retained(stream: &[Obs], cfg: &SmoothingConfig) -> Vec<Obs> {
    // Eviction happens on ingest, relative to each newly ingested sample; the
    // last ingested sample is the newest, so this is the surviving set.
    let Some(last) = stream.last() else { return Vec::new() };
    let lo = last.t.as_micros() - cfg.window.as_micros();
    stream.iter().copied().filter(|o| o.t.as_micros() >= lo).collect()
}

pub fn oracle_zone(v: f64, cfg: &SmoothingConfig) -> Zone {
    if v >= cfg.near_dbm {
        Zone::Near
    } else if v >= cfg.mid_dbm {
        Zone::Mid
    } else {
        Zone::Far
    }
}

/// (smoothed, zone, trend) computed from scratch. `stream` is every sample
/// ingested so far, oldest first.
pub fn oracle_estimate(stream: &[Obs], now: SimTime, cfg: &SmoothingConfig) -> (Option<f64>, Zone, Trend) {
    let held = retained(stream, cfg);
    if !detected_within(&held, now - cfg.lost_timeout, now) {
        return (None, Zone::Lost, Trend::Unknown);
    }
    let cur = oracle_smoothed(&held, now, now, cfg);
    let zone = cur.map_or(Zone::Lost, |v| oracle_zone(v, cfg));
    let earlier = now - cfg.trend_gap;
    let history_reaches_back = held.first().is_some_and(|o| o.t <= earlier);
    let prev = if history_reaches_back {
        oracle_smoothed(&held, earlier, now, cfg)
    } else {
        None
    };
    let trend = match (cur, prev) {
        (Some(c), Some(p)) if c - p > cfg.trend_epsilon => Trend::Warmer,
        (Some(c), Some(p)) if c - p < -cfg.trend_epsilon => Trend::Colder,
        (Some(_), Some(_)) => Trend::Steady,
        _ => Trend::Unknown,
    };
    (cur, zone, trend)
}

pub fn oracle_arrival(stream: &[Obs], now: SimTime, cfg: &SmoothingConfig) -> bool {
    let held = retained(stream, cfg);
    if !detected_within(&held, now - cfg.lost_timeout, now) {
        return false;
    }
    let start = now - cfg.arrival_hold;
    let Some(first) = held.iter().rev().find(|o| o.t <= start).map(|o| o.t) else {
        return false;
    };
    held.iter()
        .filter(|o| o.t >= first && o.t <= now)
        .all(|o| oracle_smoothed(&held, o.t, now, cfg).is_some_and(|v| v >= cfg.arrival_dbm))
}

/// A valid configuration with randomized knobs.
pub fn random_config(rng: &mut ChaCha8Rng) -> SmoothingConfig {
    let method = match rng.random_range(0..3) {
        0 => SmoothingMethod::Ewma { half_life: rng.random_range(0.2..4.0) },
        1 => SmoothingMethod::SlidingMedian,
        _ => SmoothingMethod::Raw,
    };
    let window_ms = rng.random_range(1_000..10_000);
    let window = SimTime::from_micros(window_ms * 1000);
    let below = |rng: &mut ChaCha8Rng, hi: i64| SimTime::from_micros(rng.random_range(1..hi) * 1000);
    let near: f64 = rng.random_range(-72.0..-55.0);
    let mid = near - rng.random_range(5.0..20.0);
    SmoothingConfig {
        window,
        method,
        trend_gap: below(rng, window_ms),
        trend_epsilon: rng.random_range(0.0..4.0),
        lost_timeout: SimTime::from_micros(rng.random_range(1..=window_ms) * 1000),
        near_dbm: near,
        mid_dbm: mid,
        arrival_dbm: rng.random_range(mid + 1.0..-50.0),
        arrival_hold: SimTime::from_micros(rng.random_range(0..window_ms) * 1000),
    }
}

/// A sample stream: irregular spacing, a drifting level, dropouts.
pub fn random_stream(rng: &mut ChaCha8Rng, n: usize) -> Vec<Obs> {
    let mut t = rng.random_range(0..2_000_000i64);
    let mut level: f64 = rng.random_range(-90.0..-55.0);
    let drop_rate = rng.random_range(0.0..0.6);
    (0..n)
        .map(|_| {
            // a few exact ties in time too
            t += [0, 50_000, 100_000, 100_000, 250_000, 1_300_000][rng.random_range(0..6)];
            level = (level + rng.random_range(-2.0..2.0)).clamp(-100.0, -40.0);
            let v = level + rng.random_range(-4.0..4.0);
            let rssi = (!rng.random_bool(drop_rate)).then_some(v);
            Obs { t: SimTime::from_micros(t), rssi }
        })
        .collect()
}

/// Four quests, short delays, default messages.
pub fn four_quest_script() -> seamquest::game::QuestScript {
    serde_json::from_value(serde_json::json!({
        "quests": [
            {"ghost_id": "anubis", "artifact_id": "jackal", "intro": "I'm {ghost}, where is my {artifact}?"},
            {"ghost_id": "medusa", "artifact_id": "mirror", "intro": "Don't look at me! Find my {artifact}."},
            {"ghost_id": "odin", "artifact_id": "raven", "intro": "My {artifact} flew off."},
            {"ghost_id": "ra", "artifact_id": "disc", "intro": "The sun {artifact} is missing."}
        ],
        "final_ghost": {"ghost_id": "stranger", "museum_id": "fitzwilliam", "text": "I belong to the {museum}."},
        "encounter_delay": 1.0,
        "encounter_jitter": 2.0,
        "feedback_period": 2.0
    }))
    .expect("valid script")
}

pub struct FuzzOutcome {
    pub events: Vec<seamquest::game::GameEvent>,
    pub phase: seamquest::game::Phase,
    pub error: Option<seamquest::game::GameError>,
}

/// Drive a fresh 4-quest game with `steps` random estimates for whatever
/// beacon it asks for. Arrival flags are random too, with a per-stream bias.
pub fn fuzz_game(seed: u64, steps: usize) -> FuzzOutcome {
    use seamquest::game::Game;
    use seamquest::sensing::ProximityEstimate;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let beacons = (0..4).map(|i| format!("b{i}")).collect();
    let mut game = Game::new(four_quest_script(), beacons, seamquest::rng::substream(seed, "game/jitter"));
    let arrive_p = rng.random_range(0.0..0.2);
    let mut events = Vec::new();
    let tick = SimTime::from_secs(0.1);
    for k in 0..steps {
        let t = tick.times(k as u64);
        let est = game.active_beacon().map(|id| {
            let zone = Zone::ALL[rng.random_range(0..Zone::ALL.len())];
            let trend = if zone == Zone::Lost {
                Trend::Unknown
            } else {
                Trend::ALL[rng.random_range(0..Trend::ALL.len())]
            };
            ProximityEstimate {
                beacon_id: id.to_owned(),
                smoothed_rssi: (zone != Zone::Lost).then(|| rng.random_range(-95.0..-40.0)),
                zone,
                trend,
            }
        });
        // Sometimes the caller forgets to estimate at all.
        let est = est.filter(|_| rng.random_bool(0.95));
        let arrived = rng.random_bool(arrive_p);
        match game.advance(est.as_ref(), arrived, t) {
            Ok(batch) => events.extend(batch),
            Err(error) => {
                return FuzzOutcome { events, phase: game.phase(), error: Some(error) };
            }
        }
    }
    FuzzOutcome { events, phase: game.phase(), error: None }
}

/// The ordering rules every completed game must satisfy. Returns the first
/// violation found.
pub fn check_game_order(events: &[seamquest::game::GameEvent], completed: bool) -> Result<(), String> {
    use seamquest::game::GameEventKind as K;
    let completions: Vec<usize> = events
        .iter()
        .filter_map(|e| match e.kind {
            K::QuestCompleted { quest, .. } => Some(quest),
            _ => None,
        })
        .collect();
    if completions.iter().enumerate().any(|(i, &q)| q != i) {
        return Err(format!("completions out of order: {completions:?}"));
    }
    let count = |name: &str| events.iter().filter(|e| e.kind.name() == name).count();
    let pos = |name: &str| events.iter().position(|e| e.kind.name() == name);
    if events.windows(2).any(|w| w[1].t < w[0].t) {
        return Err("event times go backwards".into());
    }
    if completed {
        if completions != [0, 1, 2, 3] {
            return Err(format!("completed with {completions:?}"));
        }
        if count("AchievementUnlocked") != 1 {
            return Err(format!("{} achievements", count("AchievementUnlocked")));
        }
        match (pos("FinalGhostAppeared"), pos("GameCompleted")) {
            (Some(f), Some(g)) if f < g => {}
            other => return Err(format!("final ghost / game completed positions {other:?}")),
        }
        if count("GameCompleted") != 1 || count("FinalGhostAppeared") != 1 {
            return Err("finale repeated".into());
        }
    } else if count("AchievementUnlocked") + count("GameCompleted") + count("FinalGhostAppeared") > 0 {
        return Err("finale without completing".into());
    }
    // every quest's ghost appears before it can be completed, once
    for q in 0..4 {
        let appeared = events.iter().position(|e| matches!(e.kind, K::GhostAppeared { quest, .. } if quest == q));
        let done = events.iter().position(|e| matches!(e.kind, K::QuestCompleted { quest, .. } if quest == q));
        match (appeared, done) {
            (Some(a), Some(d)) if a < d => {}
            (None, Some(_)) => return Err(format!("quest {q} completed without appearing")),
            (Some(a), Some(d)) if a >= d => return Err(format!("quest {q} completed before appearing")),
            _ => {}
        }
        let appearances = events
            .iter()
            .filter(|e| matches!(e.kind, K::GhostAppeared { quest, .. } if quest == q))
            .count();
        if appearances > 1 {
            return Err(format!("quest {q} appeared {appearances} times"));
        }
    }
    Ok(())
}

/// Tick-by-tick hand replay of the smoke walkthrough: straight walk along
/// +x at constant speed, beacon dead ahead, no noise, no occluders. Returns
/// the first tick at which the quest may complete.
pub fn smoke_completion_tick(s: &Scenario) -> u64 {
    let tick_s = s.tick.as_secs();
    let start = s.visitor_script.start.position;
    let beacon = s.beacons[0].pos();
    let speed = s.visitor_script.start.speed;
    // the script is: walk east from t=0, idle from t=stop
    let stop = s.visitor_script.commands[1].t.as_secs();
    let walking_ticks = (stop / tick_s).round() as u64;
    let encounter = s.quests.encounter_delay.as_secs();
    assert_eq!(s.quests.encounter_jitter, SimTime::ZERO, "oracle assumes no jitter");
    let encounter_tick = (encounter / tick_s).round() as u64;

    let mut stream = Vec::new();
    for k in 0..s.tick_count() {
        let x = start.x + speed * tick_s * k.min(walking_ticks) as f64;
        let d = ((beacon.x - x).powi(2) + (beacon.y - start.y).powi(2)).sqrt();
        let rssi = free_space_rssi(s.radio.p_ref, s.radio.n_pl, d);
        let t = s.tick.times(k);
        stream.push(Obs {
            t,
            rssi: (rssi >= s.radio.detect_floor).then_some(rssi),
        });
        // Arrival counts from the tick after the ghost appears.
        if k > encounter_tick && oracle_arrival(&stream, t, &s.sensing) {
            return k;
        }
    }
    panic!("smoke walkthrough never arrives");
}
