//! Line-delimited JSON event log.
//!
//! Every line is one object `{"t": seconds, "kind": ..., "payload": {...}}`,
//! UTF-8, LF-terminated. Per tick the order is: one `Rssi` line per enabled
//! beacon, any game events, then a `Tick` line with the visitor pose and the
//! command applied from that instant on.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::game::{GameEvent, GameEventKind, Phase};
use crate::geometry::Vec2;
use crate::radio::RssiSample;
use crate::sensing::Zone;
use crate::time::SimTime;
use crate::world::MoveCommand;

#[derive(Debug, Error)]
#[error("event log line {line}: {source}")]
pub struct LogParseError {
    pub line: usize,
    #[source]
    pub source: serde_json::Error,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "payload")]
pub enum SimRecord {
    Tick {
        index: u64,
        command: MoveCommand,
        position: Vec2,
        /// Radians from +x.
        facing: f64,
        raised: bool,
        #[serde(flatten)]
        phase: Phase,
        /// Zone of the active quest's beacon, when there is one.
        zone: Option<Zone>,
    },
    Rssi {
        beacon_id: String,
        rssi: Option<f64>,
        detected: bool,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum LogBody {
    Sim(SimRecord),
    Game(GameEventKind),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogEntry {
    pub t: SimTime,
    #[serde(flatten)]
    pub body: LogBody,
}

impl LogEntry {
    pub fn game(event: &GameEvent) -> Self {
        LogEntry {
            t: event.t,
            body: LogBody::Game(event.kind.clone()),
        }
    }

    pub fn sample(sample: &RssiSample) -> Self {
        LogEntry {
            t: sample.time,
            body: LogBody::Sim(SimRecord::Rssi {
                beacon_id: sample.beacon_id.clone(),
                rssi: sample.rssi,
                detected: sample.detected,
            }),
        }
    }

    pub fn as_game_event(&self) -> Option<GameEvent> {
        match &self.body {
            LogBody::Game(kind) => Some(GameEvent {
                t: self.t,
                kind: kind.clone(),
            }),
            LogBody::Sim(_) => None,
        }
    }

    pub fn to_line(&self) -> String {
        serde_json::to_string(self).expect("log entries always serialize")
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct EventLog {
    pub entries: Vec<LogEntry>,
}

impl EventLog {
    pub fn push(&mut self, entry: LogEntry) {
        self.entries.push(entry);
    }

    pub fn game_events(&self) -> Vec<GameEvent> {
        self.entries.iter().filter_map(LogEntry::as_game_event).collect()
    }

    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for entry in &self.entries {
            out.push_str(&entry.to_line());
            out.push('\n');
        }
        out
    }

    /// Parse JSONL; blank lines are skipped, line numbers are 1-based.
    pub fn parse(text: &str) -> Result<EventLog, LogParseError> {
        let mut entries = Vec::new();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let entry = serde_json::from_str(line).map_err(|source| LogParseError { line: i + 1, source })?;
            entries.push(entry);
        }
        Ok(EventLog { entries })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sensing::Trend;

    #[test]
    fn lines_have_t_kind_payload() {
        let e = LogEntry {
            t: SimTime::from_secs(1.5),
            body: LogBody::Game(GameEventKind::QuestCompleted {
                quest: 0,
                ghost_id: "g".into(),
            }),
        };
        assert_eq!(
            e.to_line(),
            r#"{"t":1.5,"kind":"QuestCompleted","payload":{"quest":0,"ghost_id":"g"}}"#
        );
        let s = LogEntry::sample(&RssiSample::missed(SimTime::ZERO, "b"));
        assert_eq!(
            s.to_line(),
            r#"{"t":0.0,"kind":"Rssi","payload":{"beacon_id":"b","rssi":null,"detected":false}}"#
        );
    }

    #[test]
    fn round_trip_through_text() {
        let mut log = EventLog::default();
        log.push(LogEntry {
            t: SimTime::from_secs(0.1),
            body: LogBody::Sim(SimRecord::Tick {
                index: 1,
                command: MoveCommand::Walk { direction: 0.5 },
                position: Vec2::new(1.0, 2.0),
                facing: 0.5,
                raised: false,
                phase: Phase::Seeking(2),
                zone: Some(Zone::Far),
            }),
        });
        log.push(LogEntry {
            t: SimTime::from_secs(0.1),
            body: LogBody::Game(GameEventKind::Feedback {
                quest: 2,
                ghost_id: "g".into(),
                trend: Trend::Colder,
                zone: Zone::Far,
                text: "brr".into(),
            }),
        });
        log.push(LogEntry {
            t: SimTime::from_secs(0.2),
            body: LogBody::Game(GameEventKind::GameCompleted {}),
        });
        let text = log.to_jsonl();
        assert_eq!(EventLog::parse(&text).unwrap(), log);
    }

    #[test]
    fn malformed_line_reports_its_number() {
        let text = "{\"t\":0.0,\"kind\":\"GameCompleted\",\"payload\":{}}\nnot json\n";
        let err = EventLog::parse(text).unwrap_err();
        assert_eq!(err.line, 2);
        assert!(err.to_string().starts_with("event log line 2"));
    }
}
