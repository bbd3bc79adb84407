//! Scenario files: one JSON document describing the museum, the radio and
//! sensing coefficients, the quests, the scripted visitor and crowd, and the
//! clock.
//!
//! [`load_scenario`] parses and validates in one go. Every problem is
//! reported with the JSON path of the offending field.

use std::collections::BTreeSet;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::game::{Game, QuestScript};
use crate::geometry::Vec2;
use crate::radio::RadioParams;
use crate::rng::{self, substream};
use crate::sensing::SmoothingConfig;
use crate::time::SimTime;
use crate::world::{Beacon, CrowdAgent, Floorplan, MoveCommand, VisitorState, WorldState, DEFAULT_WALK_SPEED};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ValidationError {
    #[error("schema error at {path}: {message}")]
    Schema { path: String, message: String },
    #[error("reference error at {path}: {message}")]
    Reference { path: String, message: String },
    #[error("geometry error at {path}: {message}")]
    Geometry { path: String, message: String },
    #[error("invalid value at {path}: {message}")]
    Range { path: String, message: String },
}

impl ValidationError {
    pub fn schema(path: impl Into<String>, message: impl Into<String>) -> Self {
        ValidationError::Schema { path: path.into(), message: message.into() }
    }

    pub fn reference(path: impl Into<String>, message: impl Into<String>) -> Self {
        ValidationError::Reference { path: path.into(), message: message.into() }
    }

    pub fn geometry(path: impl Into<String>, message: impl Into<String>) -> Self {
        ValidationError::Geometry { path: path.into(), message: message.into() }
    }

    pub fn range(path: impl Into<String>, message: impl Into<String>) -> Self {
        ValidationError::Range { path: path.into(), message: message.into() }
    }

    pub fn path(&self) -> &str {
        match self {
            ValidationError::Schema { path, .. }
            | ValidationError::Reference { path, .. }
            | ValidationError::Geometry { path, .. }
            | ValidationError::Range { path, .. } => path,
        }
    }
}

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("cannot read scenario {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Invalid(#[from] ValidationError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VisitorStart {
    pub position: Vec2,
    /// Radians from +x.
    #[serde(default)]
    pub facing: f64,
    #[serde(default = "default_speed")]
    pub speed: f64,
    #[serde(default)]
    pub phone_raised: bool,
}

fn default_speed() -> f64 {
    DEFAULT_WALK_SPEED
}

impl VisitorStart {
    pub fn state(&self) -> VisitorState {
        VisitorState {
            position: self.position,
            facing: Vec2::from_angle(self.facing),
            phone_raised: self.phone_raised,
            speed: self.speed,
        }
    }
}

/// A command that takes effect at `t` and stays in effect until the next one.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimedCommand {
    pub t: SimTime,
    #[serde(flatten)]
    pub command: MoveCommand,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VisitorScript {
    pub start: VisitorStart,
    #[serde(default)]
    pub commands: Vec<TimedCommand>,
}

impl VisitorScript {
    /// Command in effect at `t`: the last one with `cmd.t <= t`, else idle.
    pub fn command_at(&self, t: SimTime) -> MoveCommand {
        let idx = self.commands.partition_point(|c| c.t <= t);
        if idx == 0 {
            MoveCommand::Idle
        } else {
            self.commands[idx - 1].command
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    #[serde(default)]
    pub name: String,
    #[serde(default)]
    pub description: String,
    pub floorplan: Floorplan,
    pub beacons: Vec<Beacon>,
    #[serde(default)]
    pub radio: RadioParams,
    #[serde(default)]
    pub sensing: SmoothingConfig,
    pub quests: QuestScript,
    pub visitor_script: VisitorScript,
    #[serde(default)]
    pub crowd: Vec<CrowdAgent>,
    pub seed: u64,
    pub duration: SimTime,
    #[serde(default = "default_tick")]
    pub tick: SimTime,
}

fn default_tick() -> SimTime {
    SimTime::from_secs(0.1)
}

impl Scenario {
    /// Number of ticks in a headless run.
    pub fn tick_count(&self) -> u64 {
        (self.duration.as_micros() / self.tick.as_micros()) as u64
    }

    pub fn world(&self) -> WorldState {
        WorldState::new(
            self.floorplan.clone(),
            self.beacons.clone(),
            self.visitor_script.start.state(),
            self.crowd.clone(),
        )
    }

    /// Beacon mounted on each quest's home artifact, in quest order.
    pub fn quest_beacons(&self) -> Vec<String> {
        self.quests
            .quests
            .iter()
            .map(|q| {
                self.beacons
                    .iter()
                    .find(|b| b.enabled && b.artifact_id == q.artifact_id)
                    .map(|b| b.id.clone())
                    .unwrap_or_default()
            })
            .collect()
    }

    pub fn game(&self) -> Game {
        Game::new(
            self.quests.clone(),
            self.quest_beacons(),
            substream(self.seed, rng::GAME_STREAM),
        )
    }

    /// Check every invariant and fill in beacon positions from their artifacts.
    pub fn validate(&mut self) -> Result<(), ValidationError> {
        self.floorplan.validate()?;
        let bounds = self.floorplan.bounds;

        let mut ids = BTreeSet::new();
        for (i, beacon) in self.beacons.iter_mut().enumerate() {
            let path = format!("beacons[{i}]");
            if !ids.insert(beacon.id.clone()) {
                return Err(ValidationError::reference(
                    format!("{path}.id"),
                    format!("duplicate beacon id '{}'", beacon.id),
                ));
            }
            let Some(artifact) = self.floorplan.artifact(&beacon.artifact_id) else {
                return Err(ValidationError::reference(
                    format!("{path}.artifact_id"),
                    format!(
                        "beacon '{}' references missing artifact '{}'",
                        beacon.id, beacon.artifact_id
                    ),
                ));
            };
            let pos = *beacon.position.get_or_insert(artifact.position);
            if !pos.is_finite() || !bounds.contains(pos) {
                return Err(ValidationError::geometry(
                    format!("{path}.position"),
                    format!("beacon '{}' outside bounds", beacon.id),
                ));
            }
        }

        self.radio.validate()?;
        self.sensing.validate(self.radio.detect_floor)?;
        self.quests.validate()?;
        for (i, quest) in self.quests.quests.iter().enumerate() {
            if self.floorplan.artifact(&quest.artifact_id).is_none() {
                return Err(ValidationError::reference(
                    format!("quests.quests[{i}].artifact_id"),
                    format!("quest for '{}' references missing artifact '{}'", quest.ghost_id, quest.artifact_id),
                ));
            }
            let has_beacon = self
                .beacons
                .iter()
                .any(|b| b.enabled && b.artifact_id == quest.artifact_id);
            if !has_beacon {
                return Err(ValidationError::reference(
                    format!("quests.quests[{i}].artifact_id"),
                    format!("artifact '{}' has no enabled beacon", quest.artifact_id),
                ));
            }
        }

        let start = &self.visitor_script.start;
        if !start.position.is_finite() || !bounds.contains(start.position) {
            return Err(ValidationError::geometry(
                "visitor_script.start.position",
                "visitor starts outside bounds",
            ));
        }
        if self.floorplan.in_obstacle(start.position) {
            return Err(ValidationError::geometry(
                "visitor_script.start.position",
                "visitor starts inside an obstacle",
            ));
        }
        if !start.facing.is_finite() {
            return Err(ValidationError::range("visitor_script.start.facing", "must be finite"));
        }
        if !(start.speed.is_finite() && start.speed > 0.0) {
            return Err(ValidationError::range("visitor_script.start.speed", "must be > 0"));
        }
        let mut last = SimTime::ZERO;
        for (i, cmd) in self.visitor_script.commands.iter().enumerate() {
            let path = format!("visitor_script.commands[{i}]");
            if cmd.t < last {
                return Err(ValidationError::range(
                    format!("{path}.t"),
                    "command times must be non-negative and non-decreasing",
                ));
            }
            last = cmd.t;
            let angle_ok = match cmd.command {
                MoveCommand::Walk { direction } => direction.is_finite(),
                MoveCommand::Turn { facing } => facing.is_finite(),
                _ => true,
            };
            if !angle_ok {
                return Err(ValidationError::range(path, "angles must be finite"));
            }
        }

        let mut agent_ids = BTreeSet::new();
        for (i, agent) in self.crowd.iter().enumerate() {
            if !agent_ids.insert(agent.id.as_str()) {
                return Err(ValidationError::reference(
                    format!("crowd[{i}].id"),
                    format!("duplicate crowd agent id '{}'", agent.id),
                ));
            }
            agent.validate(i, &bounds)?;
        }

        if self.tick <= SimTime::ZERO {
            return Err(ValidationError::range("tick", "must be > 0"));
        }
        if self.duration < self.tick {
            return Err(ValidationError::range("duration", "must be at least one tick"));
        }
        if self.duration.as_micros() % self.tick.as_micros() != 0 {
            return Err(ValidationError::range("duration", "must be a whole number of ticks"));
        }
        Ok(())
    }
}

/// Parse and validate a scenario document.
pub fn load_scenario(document: &str) -> Result<Scenario, ValidationError> {
    let de = &mut serde_json::Deserializer::from_str(document);
    let mut scenario: Scenario = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner();
        let path = if path == "." { "$".to_owned() } else { path };
        ValidationError::schema(path, inner.to_string())
    })?;
    scenario.validate()?;
    Ok(scenario)
}

pub fn load_scenario_file(path: impl AsRef<Path>) -> Result<Scenario, ScenarioError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| ScenarioError::Io {
        path: path.display().to_string(),
        source,
    })?;
    Ok(load_scenario(&text)?)
}
