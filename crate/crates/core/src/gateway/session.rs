//! Live sessions: the headless pipeline driven by client messages.

use std::collections::VecDeque;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::mpsc::{Receiver, Sender, TryRecvError};
use std::time::{Duration, Instant, SystemTime, UNIX_EPOCH};

use thiserror::Error;

use crate::harness::{EventLog, SimError, Simulation};
use crate::scenario::{Scenario, TimedCommand, VisitorScript};
use crate::time::SimTime;
use crate::world::MoveCommand;

use super::protocol::{ClientMessage, CrowdPose, QuestInfo, ServerBody, ServerMessage, VisitorPose};

/// Environment variable overriding where session logs are written.
pub const RUN_DIR_ENV: &str = "SEAMQUEST_RUN_DIR";

#[derive(Debug, Error)]
pub enum SessionError {
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error("cannot persist session log to {path}: {source}")]
    Persist {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
#[error("transport closed")]
pub struct TransportClosed;

/// Ordered, framed, bidirectional text messages.
pub trait Transport {
    /// Every message received since the last poll, oldest first.
    /// `Err` once the peer has gone and nothing is left to read.
    fn poll(&mut self) -> Result<Vec<String>, TransportClosed>;
    fn send(&mut self, text: String) -> Result<(), TransportClosed>;
}

/// Transport over a pair of channels, for bridging to a socket task.
pub struct ChannelTransport {
    incoming: Receiver<String>,
    outgoing: Sender<String>,
}

impl ChannelTransport {
    pub fn new(incoming: Receiver<String>, outgoing: Sender<String>) -> Self {
        ChannelTransport { incoming, outgoing }
    }
}

impl Transport for ChannelTransport {
    fn poll(&mut self) -> Result<Vec<String>, TransportClosed> {
        let mut out = Vec::new();
        loop {
            match self.incoming.try_recv() {
                Ok(msg) => out.push(msg),
                Err(TryRecvError::Empty) => return Ok(out),
                Err(TryRecvError::Disconnected) if out.is_empty() => return Err(TransportClosed),
                Err(TryRecvError::Disconnected) => return Ok(out),
            }
        }
    }

    fn send(&mut self, text: String) -> Result<(), TransportClosed> {
        self.outgoing.send(text).map_err(|_| TransportClosed)
    }
}

/// Replays recorded client traffic tick by tick and captures the replies.
///
/// Poll number `k` (one per tick) delivers the messages scheduled for tick
/// `k`; after `ticks` polls the transport reports closed.
#[derive(Debug, Default)]
pub struct ScriptedTransport {
    schedule: VecDeque<Vec<String>>,
    pub sent: Vec<String>,
}

impl ScriptedTransport {
    /// `schedule[k]` holds the messages that arrive before tick `k`.
    pub fn new(schedule: Vec<Vec<String>>) -> Self {
        ScriptedTransport {
            schedule: schedule.into(),
            sent: Vec::new(),
        }
    }

    pub fn sent_messages(&self) -> Vec<ServerMessage> {
        self.sent
            .iter()
            .map(|t| ServerMessage::parse(t).expect("server emits valid messages"))
            .collect()
    }
}

impl Transport for ScriptedTransport {
    fn poll(&mut self) -> Result<Vec<String>, TransportClosed> {
        self.schedule.pop_front().ok_or(TransportClosed)
    }

    fn send(&mut self, text: String) -> Result<(), TransportClosed> {
        self.sent.push(text);
        Ok(())
    }
}

/// One player's game: a [`Simulation`] fed by client messages.
pub struct Session {
    sim: Simulation,
    name: String,
    debug: bool,
    pending: Option<MoveCommand>,
    client_time: Option<f64>,
    log: EventLog,
    applied: Vec<MoveCommand>,
    info: ServerMessage,
}

impl Session {
    pub fn new(scenario: &Scenario, debug: bool) -> Self {
        let info = ServerMessage::new(
            SimTime::ZERO,
            ServerBody::ScenarioInfo {
                name: scenario.name.clone(),
                floorplan: scenario.floorplan.clone(),
                beacons: scenario.beacons.clone(),
                tick: scenario.tick,
                quests: scenario
                    .quests
                    .quests
                    .iter()
                    .map(|q| QuestInfo {
                        ghost_id: q.ghost_id.clone(),
                        artifact_id: q.artifact_id.clone(),
                    })
                    .collect(),
                final_museum: scenario.quests.final_ghost.museum_id.clone(),
                debug,
            },
        );
        Session {
            sim: Simulation::new(scenario),
            name: scenario.name.clone(),
            debug,
            pending: None,
            client_time: None,
            log: EventLog::default(),
            applied: Vec::new(),
            info,
        }
    }

    pub fn scenario_info(&self) -> ServerMessage {
        self.info.clone()
    }

    pub fn simulation(&self) -> &Simulation {
        &self.sim
    }

    pub fn log(&self) -> &EventLog {
        &self.log
    }

    /// Queue a client message for the next tick. Returns an error message for
    /// the client when the text is not a valid message; the session goes on.
    pub fn receive(&mut self, text: &str) -> Option<ServerMessage> {
        match ClientMessage::parse(text) {
            Ok(msg) => {
                if msg.client_time.is_some() {
                    self.client_time = msg.client_time;
                }
                if let Some(cmd) = msg.command.to_move() {
                    self.pending = Some(cmd);
                }
                None
            }
            Err(e) => Some(ServerMessage::new(
                self.sim.time(),
                ServerBody::Error { message: e.to_string() },
            )),
        }
    }

    /// Run one tick with the latest queued command (idle if none).
    pub fn tick(&mut self) -> Result<Vec<ServerMessage>, SimError> {
        let command = self.pending.take().unwrap_or_default();
        let out = self.sim.step(command)?;
        self.applied.push(command);
        self.log.entries.extend(out.entries);

        let now = self.sim.time();
        let mut messages: Vec<ServerMessage> = out
            .events
            .into_iter()
            .map(|event| ServerMessage::new(now, ServerBody::Feedback { event }))
            .collect();
        if self.debug {
            messages.push(ServerMessage::new(
                now,
                ServerBody::RssiDebug {
                    beacons: self.sim.estimates(),
                },
            ));
        }
        messages.push(self.state_message());
        Ok(messages)
    }

    pub fn state_message(&self) -> ServerMessage {
        let world = self.sim.world();
        let visitor = world.visitor;
        ServerMessage::new(
            world.time,
            ServerBody::State {
                tick: self.sim.index(),
                visitor: VisitorPose {
                    position: visitor.position,
                    facing: visitor.facing.angle(),
                    raised: visitor.phone_raised,
                },
                crowd: world
                    .crowd
                    .iter()
                    .zip(world.crowd_positions())
                    .map(|(agent, &position)| CrowdPose {
                        id: agent.id.clone(),
                        position,
                        radius: agent.radius,
                    })
                    .collect(),
                phase: self.sim.game().phase(),
                active_ghost: self.sim.game().active_ghost().map(str::to_owned),
                client_time: self.client_time,
            },
        )
    }

    /// The commands applied so far, as a visitor script a headless run can replay.
    pub fn recorded_script(&self, scenario: &Scenario) -> VisitorScript {
        let mut commands = Vec::new();
        let mut previous = None;
        for (k, &cmd) in self.applied.iter().enumerate() {
            if previous != Some(cmd) {
                commands.push(TimedCommand {
                    t: scenario.tick.times(k as u64),
                    command: cmd,
                });
                previous = Some(cmd);
            }
        }
        VisitorScript {
            start: scenario.visitor_script.start,
            commands,
        }
    }

    pub fn ticks(&self) -> u64 {
        self.sim.index()
    }

    pub fn name(&self) -> &str {
        &self.name
    }
}

#[derive(Debug, Clone)]
pub struct SessionOptions {
    /// Pace ticks to the wall clock instead of running flat out.
    pub real_time: bool,
    pub debug_rssi: bool,
    /// Where the final log goes; `None` skips persisting.
    pub run_dir: Option<PathBuf>,
    /// Stop after this many ticks even if the client stays connected.
    pub max_ticks: Option<u64>,
}

impl Default for SessionOptions {
    fn default() -> Self {
        SessionOptions {
            real_time: true,
            debug_rssi: false,
            run_dir: Some(default_run_dir()),
            max_ticks: None,
        }
    }
}

/// `$SEAMQUEST_RUN_DIR`, else `./runs`.
pub fn default_run_dir() -> PathBuf {
    std::env::var_os(RUN_DIR_ENV)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from("runs"))
}

#[derive(Debug)]
pub struct SessionSummary {
    pub ticks: u64,
    pub log: EventLog,
    pub log_path: Option<PathBuf>,
}

static SESSION_COUNTER: AtomicU64 = AtomicU64::new(0);

fn persist(log: &EventLog, dir: &Path, seed: u64) -> Result<PathBuf, SessionError> {
    let err = |source| SessionError::Persist {
        path: dir.display().to_string(),
        source,
    };
    std::fs::create_dir_all(dir).map_err(err)?;
    let millis = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_millis())
        .unwrap_or_default();
    let n = SESSION_COUNTER.fetch_add(1, Ordering::Relaxed);
    let path = dir.join(format!("session-{seed}-{millis}-{n}.jsonl"));
    std::fs::write(&path, log.to_jsonl()).map_err(err)?;
    Ok(path)
}

/// Drive a session over `transport` until the peer disconnects (or
/// `max_ticks`), then persist its event log.
///
/// Each tick: drain incoming messages (the last valid command wins), step,
/// and send feedback events, the optional debug estimates, and the state.
pub fn serve_session<T: Transport>(
    scenario: &Scenario,
    transport: &mut T,
    options: &SessionOptions,
) -> Result<SessionSummary, SessionError> {
    let mut session = Session::new(scenario, options.debug_rssi);
    let tick = Duration::from_micros(scenario.tick.as_micros() as u64);
    let started = Instant::now();
    let mut open = transport.send(session.scenario_info().to_text()).is_ok();

    while open && options.max_ticks.is_none_or(|max| session.ticks() < max) {
        match transport.poll() {
            Ok(messages) => {
                for text in messages {
                    if let Some(reply) = session.receive(&text) {
                        if transport.send(reply.to_text()).is_err() {
                            open = false;
                        }
                    }
                }
            }
            Err(TransportClosed) => break,
        }
        if !open {
            break;
        }
        for msg in session.tick()? {
            if transport.send(msg.to_text()).is_err() {
                open = false;
                break;
            }
        }
        if options.real_time {
            let deadline = started + tick * session.ticks() as u32;
            let now = Instant::now();
            if deadline > now {
                std::thread::sleep(deadline - now);
            }
        }
    }

    let log_path = match &options.run_dir {
        Some(dir) => Some(persist(session.log(), dir, scenario.seed)?),
        None => None,
    };
    Ok(SessionSummary {
        ticks: session.ticks(),
        log: session.log,
        log_path,
    })
}
