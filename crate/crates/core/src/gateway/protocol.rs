//! Wire protocol v1: one JSON object per message, each carrying `"v": 1`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::game::{GameEvent, Phase};
use crate::geometry::Vec2;
use crate::sensing::ProximityEstimate;
use crate::time::SimTime;
use crate::world::{Beacon, Floorplan, MoveCommand};

pub const PROTOCOL_VERSION: u32 = 1;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ProtocolError {
    #[error("malformed message: {0}")]
    Malformed(String),
    #[error("unsupported protocol version {0}, expected {PROTOCOL_VERSION}")]
    Version(u32),
    #[error("angle must be finite")]
    NonFiniteAngle,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ClientCommand {
    /// Walk along `direction` radians for one tick.
    Walk { direction: f64 },
    /// Face `facing` radians.
    Turn { facing: f64 },
    Raise { raised: bool },
    /// Keepalive; only its `client_time` is echoed.
    Ping,
}

impl ClientCommand {
    /// Movement this command produces, `None` for ping.
    pub fn to_move(self) -> Option<MoveCommand> {
        match self {
            ClientCommand::Walk { direction } => Some(MoveCommand::Walk { direction }),
            ClientCommand::Turn { facing } => Some(MoveCommand::Turn { facing }),
            ClientCommand::Raise { raised } => Some(MoveCommand::SetRaised { raised }),
            ClientCommand::Ping => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClientMessage {
    pub v: u32,
    #[serde(flatten)]
    pub command: ClientCommand,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub client_time: Option<f64>,
}

impl ClientMessage {
    pub fn new(command: ClientCommand) -> Self {
        ClientMessage {
            v: PROTOCOL_VERSION,
            command,
            client_time: None,
        }
    }

    pub fn parse(text: &str) -> Result<ClientMessage, ProtocolError> {
        let msg: ClientMessage =
            serde_json::from_str(text.trim()).map_err(|e| ProtocolError::Malformed(e.to_string()))?;
        if msg.v != PROTOCOL_VERSION {
            return Err(ProtocolError::Version(msg.v));
        }
        let finite = match msg.command {
            ClientCommand::Walk { direction } => direction.is_finite(),
            ClientCommand::Turn { facing } => facing.is_finite(),
            _ => true,
        };
        if !finite {
            return Err(ProtocolError::NonFiniteAngle);
        }
        Ok(msg)
    }

    pub fn to_text(&self) -> String {
        serde_json::to_string(self).expect("client messages always serialize")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuestInfo {
    pub ghost_id: String,
    pub artifact_id: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VisitorPose {
    pub position: Vec2,
    /// Radians from +x.
    pub facing: f64,
    pub raised: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrowdPose {
    pub id: String,
    pub position: Vec2,
    pub radius: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ServerBody {
    ScenarioInfo {
        name: String,
        floorplan: Floorplan,
        beacons: Vec<Beacon>,
        tick: SimTime,
        quests: Vec<QuestInfo>,
        final_museum: String,
        debug: bool,
    },
    State {
        tick: u64,
        visitor: VisitorPose,
        crowd: Vec<CrowdPose>,
        #[serde(flatten)]
        phase: Phase,
        active_ghost: Option<String>,
        #[serde(skip_serializing_if = "Option::is_none", default)]
        client_time: Option<f64>,
    },
    Feedback {
        event: GameEvent,
    },
    RssiDebug {
        beacons: Vec<ProximityEstimate>,
    },
    Error {
        message: String,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ServerMessage {
    pub v: u32,
    /// Server simulation time.
    pub t: SimTime,
    #[serde(flatten)]
    pub body: ServerBody,
}

impl ServerMessage {
    pub fn new(t: SimTime, body: ServerBody) -> Self {
        ServerMessage {
            v: PROTOCOL_VERSION,
            t,
            body,
        }
    }

    pub fn to_text(&self) -> String {
        serde_json::to_string(self).expect("server messages always serialize")
    }

    pub fn parse(text: &str) -> Result<ServerMessage, ProtocolError> {
        serde_json::from_str(text).map_err(|e| ProtocolError::Malformed(e.to_string()))
    }
}
