//! Headless execution: the per-tick pipeline shared by batch runs and live
//! sessions, plus coverage maps and run metrics.

pub mod coverage;
pub mod eventlog;
pub mod metrics;

use thiserror::Error;

use crate::game::{Game, GameError, GameEvent};
use crate::radio::{sample_rssi, FadingChannel, RadioError, RadioParams, RssiSample};
use crate::rng::{radio_stream_name, substream};
use crate::scenario::{Scenario, ValidationError};
use crate::sensing::{arrival_check, estimate, BeaconHistory, ProximityEstimate, SensingError, SmoothingConfig};
use crate::time::SimTime;
use crate::world::{MoveCommand, WorldState};

pub use coverage::{coverage_map, CellValue, CoverageError, CoverageMap, CoverageMode};
pub use eventlog::{EventLog, LogBody, LogEntry, LogParseError, SimRecord};
pub use metrics::{compute_metrics, Dwell, QuestCompletion, RunMetrics};

#[derive(Debug, Error)]
pub enum SimError {
    #[error(transparent)]
    Invalid(#[from] ValidationError),
    #[error(transparent)]
    Radio(#[from] RadioError),
    #[error(transparent)]
    Sensing(#[from] SensingError),
    #[error(transparent)]
    Game(#[from] GameError),
}

/// Everything one tick produced.
#[derive(Debug, Clone, PartialEq)]
pub struct TickOutput {
    pub index: u64,
    pub t: SimTime,
    pub samples: Vec<RssiSample>,
    pub events: Vec<GameEvent>,
    /// Estimate for the beacon the game was listening to, if any.
    pub estimate: Option<ProximityEstimate>,
    /// Log lines for this tick, in log order.
    pub entries: Vec<LogEntry>,
}

/// World, radio channels, sensing histories and game, advanced together.
///
/// Each tick observes the world at the current time (sample every enabled
/// beacon, estimate, advance the game), logs, then applies the command and
/// steps the world forward by one tick.
#[derive(Debug, Clone)]
pub struct Simulation {
    world: WorldState,
    radio: RadioParams,
    sensing: SmoothingConfig,
    channels: Vec<FadingChannel>,
    histories: Vec<BeaconHistory>,
    game: Game,
    tick: SimTime,
    index: u64,
}

impl Simulation {
    pub fn new(scenario: &Scenario) -> Self {
        let world = scenario.world();
        let channels = world
            .beacons
            .iter()
            .map(|b| FadingChannel::new(substream(scenario.seed, &radio_stream_name(&b.id))))
            .collect();
        let histories = vec![BeaconHistory::new(); world.beacons.len()];
        Simulation {
            world,
            radio: scenario.radio,
            sensing: scenario.sensing,
            channels,
            histories,
            game: scenario.game(),
            tick: scenario.tick,
            index: 0,
        }
    }

    pub fn world(&self) -> &WorldState {
        &self.world
    }

    pub fn game(&self) -> &Game {
        &self.game
    }

    /// Ticks completed so far.
    pub fn index(&self) -> u64 {
        self.index
    }

    pub fn time(&self) -> SimTime {
        self.world.time
    }

    /// Current estimates for every enabled beacon.
    pub fn estimates(&self) -> Vec<ProximityEstimate> {
        self.world
            .beacons
            .iter()
            .zip(&self.histories)
            .filter(|(b, _)| b.enabled)
            .map(|(b, h)| estimate(&b.id, h, self.world.time, &self.sensing))
            .collect()
    }

    pub fn step(&mut self, command: MoveCommand) -> Result<TickOutput, SimError> {
        let t = self.world.time;
        let mut entries = Vec::new();
        let mut samples = Vec::new();
        let visitor = self.world.visitor;
        for ((beacon, channel), history) in self
            .world
            .beacons
            .iter()
            .zip(&mut self.channels)
            .zip(&mut self.histories)
        {
            if !beacon.enabled {
                continue;
            }
            let sample = sample_rssi(beacon, &visitor, &self.world, t, channel, &self.radio)?;
            history.ingest(sample.clone(), &self.sensing)?;
            entries.push(LogEntry::sample(&sample));
            samples.push(sample);
        }

        let (active, arrived) = match self.game.active_beacon() {
            Some(id) => {
                let slot = self
                    .world
                    .beacons
                    .iter()
                    .position(|b| b.id == id)
                    .expect("quest beacons are validated");
                let history = &self.histories[slot];
                (
                    Some(estimate(id, history, t, &self.sensing)),
                    arrival_check(history, t, &self.sensing),
                )
            }
            None => (None, false),
        };
        let events = self.game.advance(active.as_ref(), arrived, t)?;
        entries.extend(events.iter().map(LogEntry::game));

        entries.push(LogEntry {
            t,
            body: LogBody::Sim(SimRecord::Tick {
                index: self.index,
                command,
                position: visitor.position,
                facing: visitor.facing.angle(),
                raised: visitor.phone_raised,
                phase: self.game.phase(),
                zone: active.as_ref().map(|e| e.zone),
            }),
        });

        self.world.step(command, self.tick);
        let out = TickOutput {
            index: self.index,
            t,
            samples,
            events,
            estimate: active,
            entries,
        };
        self.index += 1;
        Ok(out)
    }
}

/// Run a validated scenario for its full duration.
pub fn run(scenario: &Scenario) -> Result<(EventLog, RunMetrics), SimError> {
    let mut sim = Simulation::new(scenario);
    let mut log = EventLog::default();
    for _ in 0..scenario.tick_count() {
        let command = scenario.visitor_script.command_at(sim.time());
        log.entries.extend(sim.step(command)?.entries);
    }
    let metrics = compute_metrics(&log, scenario);
    Ok((log, metrics))
}
