//! The ghost quest state machine.
//!
//! Ghosts appear one at a time in script order after a seeded random delay.
//! While a ghost is being walked home it comments every `feedback_period`
//! using the `(trend, zone)` entry of the message table, and switches to the
//! recovery line the moment its beacon comes back after being lost. Arriving
//! completes the quest; the last arrival unlocks the museum achievement,
//! offers a share, and introduces the ghost from another museum.
//!
//! ```text
//! Idle -> Encounter(0) -> Seeking(0) -> Arrived(0) -> Encounter(1) -> ...
//!      ... -> Arrived(n-1) -> FinalGhost -> Completed
//! ```

use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rng::SimRng;
use crate::scenario::ValidationError;
use crate::sensing::{ProximityEstimate, Trend, Zone};
use crate::time::SimTime;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TemplateError {
    #[error("unknown placeholder '{{{0}}}'")]
    UnknownPlaceholder(String),
    #[error("placeholder '{{{0}}}' has no value in this context")]
    Unavailable(String),
    #[error("unterminated placeholder starting at byte {0}")]
    Unterminated(usize),
    #[error("stray '}}' at byte {0}")]
    StrayBrace(usize),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GameError {
    #[error("estimate is for beacon '{got}' but the active quest listens to '{expected}'")]
    WrongBeacon { expected: String, got: String },
    #[error(transparent)]
    Template(#[from] TemplateError),
}

/// Values available to `{placeholder}` substitution.
#[derive(Debug, Clone, Copy, Default)]
pub struct MessageContext<'a> {
    pub ghost: Option<&'a str>,
    pub artifact: Option<&'a str>,
    pub museum: Option<&'a str>,
}

/// Substitute `{ghost}`, `{artifact}` and `{museum}`. `{{` and `}}` escape braces.
pub fn render_message(template: &str, ctx: &MessageContext<'_>) -> Result<String, TemplateError> {
    let mut out = String::with_capacity(template.len());
    let mut chars = template.char_indices().peekable();
    while let Some((i, c)) = chars.next() {
        match c {
            '{' if chars.peek().map(|&(_, n)| n) == Some('{') => {
                chars.next();
                out.push('{');
            }
            '{' => {
                let mut name = String::new();
                loop {
                    match chars.next() {
                        Some((_, '}')) => break,
                        Some((_, ch)) => name.push(ch),
                        None => return Err(TemplateError::Unterminated(i)),
                    }
                }
                let value = match name.as_str() {
                    "ghost" => ctx.ghost,
                    "artifact" => ctx.artifact,
                    "museum" => ctx.museum,
                    _ => return Err(TemplateError::UnknownPlaceholder(name)),
                };
                out.push_str(value.ok_or(TemplateError::Unavailable(name))?);
            }
            '}' if chars.peek().map(|&(_, n)| n) == Some('}') => {
                chars.next();
                out.push('}');
            }
            '}' => return Err(TemplateError::StrayBrace(i)),
            _ => out.push(c),
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ZoneMessages {
    pub near: String,
    pub mid: String,
    pub far: String,
    pub lost: String,
}

impl ZoneMessages {
    pub fn get(&self, zone: Zone) -> &str {
        match zone {
            Zone::Near => &self.near,
            Zone::Mid => &self.mid,
            Zone::Far => &self.far,
            Zone::Lost => &self.lost,
        }
    }
}

/// Feedback templates for every `(trend, zone)` pair, plus the recovery line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MessageTable {
    pub warmer: ZoneMessages,
    pub colder: ZoneMessages,
    pub steady: ZoneMessages,
    pub unknown: ZoneMessages,
    pub recovery: String,
}

impl MessageTable {
    pub fn get(&self, trend: Trend, zone: Zone) -> &str {
        let row = match trend {
            Trend::Warmer => &self.warmer,
            Trend::Colder => &self.colder,
            Trend::Steady => &self.steady,
            Trend::Unknown => &self.unknown,
        };
        row.get(zone)
    }

    fn templates(&self) -> impl Iterator<Item = (String, &str)> {
        Trend::ALL
            .into_iter()
            .flat_map(move |trend| {
                Zone::ALL
                    .into_iter()
                    .map(move |zone| (format!("{trend}.{zone}"), self.get(trend, zone)))
            })
            .chain(std::iter::once(("recovery".to_owned(), self.recovery.as_str())))
    }
}

impl Default for MessageTable {
    fn default() -> Self {
        let row = |near: &str, mid: &str, far: &str, lost: &str| ZoneMessages {
            near: near.into(),
            mid: mid.into(),
            far: far.into(),
            lost: lost.into(),
        };
        MessageTable {
            warmer: row(
                "Yes! I can almost touch the {artifact}!",
                "Yes, I can see we're going into the right direction!",
                "Warmer... I think I remember this way.",
                "Are we getting closer? I can't see a thing.",
            ),
            colder: row(
                "No, no, we were so close to the {artifact}!",
                "Hmm, this doesn't feel right. We're drifting away.",
                "Colder! {ghost} is getting lost!",
                "We're getting lost! Where are you taking me?",
            ),
            steady: row(
                "The {artifact} is right around here somewhere.",
                "Keep looking, the {artifact} can't be far.",
                "Everything looks unfamiliar. Let's try another way.",
                "It's so dark here... {ghost} is getting lost!",
            ),
            unknown: row(
                "I think my home is near!",
                "Let's look around a bit.",
                "Which way should we go?",
                "I can't see anything! We're getting lost!",
            ),
            recovery: "There! I can see where you're going again!".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Quest {
    pub ghost_id: String,
    /// The ghost's home artifact; its beacon drives the feedback.
    pub artifact_id: String,
    pub intro: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FinalGhost {
    pub ghost_id: String,
    pub museum_id: String,
    pub text: String,
}

fn default_delay() -> SimTime {
    SimTime::from_secs(5.0)
}

fn default_feedback_period() -> SimTime {
    SimTime::from_secs(2.0)
}

fn default_share_text() -> String {
    "I brought every lost ghost home! #ghosts".into()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuestScript {
    /// Encounter order.
    pub quests: Vec<Quest>,
    pub final_ghost: FinalGhost,
    #[serde(default = "default_delay")]
    pub encounter_delay: SimTime,
    /// Upper bound of the uniform jitter added to each encounter delay.
    #[serde(default = "default_delay")]
    pub encounter_jitter: SimTime,
    #[serde(default = "default_feedback_period")]
    pub feedback_period: SimTime,
    #[serde(default)]
    pub messages: MessageTable,
    #[serde(default = "default_share_text")]
    pub share_text: String,
}

impl QuestScript {
    /// Structural checks that need nothing outside the script itself.
    pub fn validate(&self) -> Result<(), ValidationError> {
        if self.quests.is_empty() {
            return Err(ValidationError::schema("quests.quests", "at least one quest is required"));
        }
        if self.encounter_delay < SimTime::ZERO || self.encounter_jitter < SimTime::ZERO {
            return Err(ValidationError::range(
                "quests.encounter_delay",
                "delay and jitter must be >= 0",
            ));
        }
        if self.feedback_period <= SimTime::ZERO {
            return Err(ValidationError::range("quests.feedback_period", "must be > 0"));
        }
        for (i, quest) in self.quests.iter().enumerate() {
            let ctx = MessageContext {
                ghost: Some(&quest.ghost_id),
                artifact: Some(&quest.artifact_id),
                museum: None,
            };
            render_message(&quest.intro, &ctx).map_err(|e| {
                ValidationError::schema(format!("quests.quests[{i}].intro"), e.to_string())
            })?;
            for (key, template) in self.messages.templates() {
                render_message(template, &ctx).map_err(|e| {
                    ValidationError::schema(format!("quests.messages.{key}"), e.to_string())
                })?;
            }
        }
        let final_ctx = MessageContext {
            ghost: Some(&self.final_ghost.ghost_id),
            artifact: None,
            museum: Some(&self.final_ghost.museum_id),
        };
        render_message(&self.final_ghost.text, &final_ctx)
            .map_err(|e| ValidationError::schema("quests.final_ghost.text", e.to_string()))?;
        render_message(&self.share_text, &MessageContext::default())
            .map_err(|e| ValidationError::schema("quests.share_text", e.to_string()))?;
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "phase", content = "quest", rename_all = "snake_case")]
pub enum Phase {
    Idle,
    Encounter(usize),
    Seeking(usize),
    Arrived(usize),
    FinalGhost,
    Completed,
}

impl Phase {
    /// Quest whose beacon matters in this phase.
    pub fn quest(self) -> Option<usize> {
        match self {
            Phase::Encounter(i) | Phase::Seeking(i) | Phase::Arrived(i) => Some(i),
            _ => None,
        }
    }
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Phase::Idle => f.write_str("idle"),
            Phase::Encounter(i) => write!(f, "encounter({i})"),
            Phase::Seeking(i) => write!(f, "seeking({i})"),
            Phase::Arrived(i) => write!(f, "arrived({i})"),
            Phase::FinalGhost => f.write_str("final_ghost"),
            Phase::Completed => f.write_str("completed"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "payload")]
pub enum GameEventKind {
    GhostAppeared {
        quest: usize,
        ghost_id: String,
        text: String,
    },
    Feedback {
        quest: usize,
        ghost_id: String,
        trend: Trend,
        zone: Zone,
        text: String,
    },
    Recovery {
        quest: usize,
        ghost_id: String,
        text: String,
    },
    QuestCompleted {
        quest: usize,
        ghost_id: String,
    },
    AchievementUnlocked {
        quests: usize,
    },
    ShareOffered {
        text: String,
    },
    FinalGhostAppeared {
        ghost_id: String,
        museum_id: String,
        text: String,
    },
    GameCompleted {},
}

impl GameEventKind {
    pub fn name(&self) -> &'static str {
        match self {
            GameEventKind::GhostAppeared { .. } => "GhostAppeared",
            GameEventKind::Feedback { .. } => "Feedback",
            GameEventKind::Recovery { .. } => "Recovery",
            GameEventKind::QuestCompleted { .. } => "QuestCompleted",
            GameEventKind::AchievementUnlocked { .. } => "AchievementUnlocked",
            GameEventKind::ShareOffered { .. } => "ShareOffered",
            GameEventKind::FinalGhostAppeared { .. } => "FinalGhostAppeared",
            GameEventKind::GameCompleted {} => "GameCompleted",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GameEvent {
    pub t: SimTime,
    #[serde(flatten)]
    pub kind: GameEventKind,
}

/// Mutable part of a running game.
#[derive(Debug, Clone, PartialEq)]
pub struct GameState {
    pub phase: Phase,
    pub achievement_emitted: bool,
    /// Number of events emitted so far.
    pub cursor: usize,
    due: Option<SimTime>,
    last_feedback: SimTime,
    prev_lost: Option<bool>,
}

impl Default for GameState {
    fn default() -> Self {
        GameState {
            phase: Phase::Idle,
            achievement_emitted: false,
            cursor: 0,
            due: None,
            last_feedback: SimTime::ZERO,
            prev_lost: None,
        }
    }
}

/// A quest script bound to its beacons, with its own jitter stream.
#[derive(Debug, Clone)]
pub struct Game {
    script: QuestScript,
    quest_beacons: Vec<String>,
    state: GameState,
    rng: SimRng,
}

impl Game {
    /// `quest_beacons[i]` is the beacon on quest `i`'s home artifact.
    pub fn new(script: QuestScript, quest_beacons: Vec<String>, rng: SimRng) -> Self {
        assert_eq!(
            script.quests.len(),
            quest_beacons.len(),
            "one beacon per quest"
        );
        Game {
            script,
            quest_beacons,
            state: GameState::default(),
            rng,
        }
    }

    pub fn state(&self) -> &GameState {
        &self.state
    }

    pub fn phase(&self) -> Phase {
        self.state.phase
    }

    pub fn script(&self) -> &QuestScript {
        &self.script
    }

    /// Beacon the caller should estimate for on the next `advance`: the
    /// beacon of the quest being sought (or about to be), if any.
    pub fn active_beacon(&self) -> Option<&str> {
        self.sought_quest().map(|i| self.quest_beacons[i].as_str())
    }

    fn sought_quest(&self) -> Option<usize> {
        match self.state.phase {
            Phase::Encounter(i) | Phase::Seeking(i) => Some(i),
            _ => None,
        }
    }

    pub fn active_ghost(&self) -> Option<&str> {
        match self.state.phase {
            Phase::FinalGhost | Phase::Completed => Some(&self.script.final_ghost.ghost_id),
            p => p.quest().map(|i| self.script.quests[i].ghost_id.as_str()),
        }
    }

    fn schedule(&mut self, t: SimTime) -> SimTime {
        if let Some(due) = self.state.due {
            return due;
        }
        let jitter_max = self.script.encounter_jitter.as_micros();
        let jitter = if jitter_max > 0 {
            self.rng.random_range(0..=jitter_max)
        } else {
            0
        };
        let due = t + self.script.encounter_delay + SimTime::from_micros(jitter);
        self.state.due = Some(due);
        due
    }

    fn quest_ctx(&self, i: usize) -> MessageContext<'_> {
        let q = &self.script.quests[i];
        MessageContext {
            ghost: Some(&q.ghost_id),
            artifact: Some(&q.artifact_id),
            museum: None,
        }
    }

    /// Run every transition that is due at `t`.
    ///
    /// `estimate` must belong to [`Game::active_beacon`] when there is one.
    /// In phases without an active quest it is ignored.
    pub fn advance(
        &mut self,
        estimate: Option<&ProximityEstimate>,
        arrived: bool,
        t: SimTime,
    ) -> Result<Vec<GameEvent>, GameError> {
        if let (Some(expected), Some(est)) = (self.active_beacon(), estimate) {
            if est.beacon_id != expected {
                return Err(GameError::WrongBeacon {
                    expected: expected.to_owned(),
                    got: est.beacon_id.clone(),
                });
            }
        }
        // The inputs describe the quest sought on entry. A quest that starts
        // during this call has not been measured yet.
        let measured = self.sought_quest();
        let mut events = Vec::new();
        let mut emit = |kind| events.push(GameEvent { t, kind });
        loop {
            match self.state.phase {
                Phase::Idle => {
                    if t < self.schedule(t) {
                        break;
                    }
                    self.state.due = None;
                    self.state.phase = Phase::Encounter(0);
                }
                Phase::Encounter(i) => {
                    let quest = &self.script.quests[i];
                    let text = render_message(&quest.intro, &self.quest_ctx(i))?;
                    emit(GameEventKind::GhostAppeared {
                        quest: i,
                        ghost_id: quest.ghost_id.clone(),
                        text,
                    });
                    self.state.phase = Phase::Seeking(i);
                    self.state.last_feedback = t;
                    self.state.prev_lost = None;
                }
                Phase::Seeking(i) => {
                    let ghost_id = self.script.quests[i].ghost_id.clone();
                    let (arrived, estimate) = if measured == Some(i) {
                        (arrived, estimate)
                    } else {
                        (false, None)
                    };
                    if arrived {
                        emit(GameEventKind::QuestCompleted { quest: i, ghost_id });
                        self.state.phase = Phase::Arrived(i);
                        continue;
                    }
                    if let Some(est) = estimate {
                        let lost = est.is_lost();
                        if self.state.prev_lost == Some(true) && !lost {
                            let text = render_message(&self.script.messages.recovery, &self.quest_ctx(i))?;
                            emit(GameEventKind::Recovery { quest: i, ghost_id, text });
                            self.state.last_feedback = t;
                        } else if t - self.state.last_feedback >= self.script.feedback_period {
                            let template = self.script.messages.get(est.trend, est.zone);
                            let text = render_message(template, &self.quest_ctx(i))?;
                            emit(GameEventKind::Feedback {
                                quest: i,
                                ghost_id,
                                trend: est.trend,
                                zone: est.zone,
                                text,
                            });
                            self.state.last_feedback = t;
                        }
                        self.state.prev_lost = Some(lost);
                    }
                    break;
                }
                Phase::Arrived(i) if i + 1 == self.script.quests.len() => {
                    self.state.achievement_emitted = true;
                    emit(GameEventKind::AchievementUnlocked {
                        quests: self.script.quests.len(),
                    });
                    emit(GameEventKind::ShareOffered {
                        text: render_message(&self.script.share_text, &MessageContext::default())?,
                    });
                    let fg = &self.script.final_ghost;
                    let ctx = MessageContext {
                        ghost: Some(&fg.ghost_id),
                        artifact: None,
                        museum: Some(&fg.museum_id),
                    };
                    emit(GameEventKind::FinalGhostAppeared {
                        ghost_id: fg.ghost_id.clone(),
                        museum_id: fg.museum_id.clone(),
                        text: render_message(&fg.text, &ctx)?,
                    });
                    self.state.phase = Phase::FinalGhost;
                }
                Phase::Arrived(i) => {
                    if t < self.schedule(t) {
                        break;
                    }
                    self.state.due = None;
                    self.state.phase = Phase::Encounter(i + 1);
                }
                Phase::FinalGhost => {
                    emit(GameEventKind::GameCompleted {});
                    self.state.phase = Phase::Completed;
                    break;
                }
                Phase::Completed => break,
            }
        }
        self.state.cursor += events.len();
        Ok(events)
    }
}
