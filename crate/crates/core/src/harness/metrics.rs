//! Visitor-flow metrics recomputed from an event log.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::game::GameEventKind;
use crate::scenario::Scenario;
use crate::sensing::Zone;
use crate::time::SimTime;

use super::eventlog::{EventLog, LogBody, SimRecord};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Dwell {
    pub ticks: u64,
    pub seconds: SimTime,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuestCompletion {
    pub quest: usize,
    pub ghost_id: String,
    pub t: SimTime,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMetrics {
    pub ticks: u64,
    /// `ticks * tick`.
    pub duration: SimTime,
    /// Keyed by gallery id; every gallery in the floorplan is present.
    pub dwell: BTreeMap<String, Dwell>,
    /// Time spent outside every gallery.
    pub outside_dwell: Dwell,
    /// Galleries in order of first entry.
    pub visit_order: Vec<String>,
    pub quest_completions: Vec<QuestCompletion>,
    /// Keyed `"trend/zone"`.
    pub feedback_counts: BTreeMap<String, u64>,
    /// Share of ticks with an active quest whose beacon was lost.
    pub lost_fraction: f64,
}

impl RunMetrics {
    pub fn total_dwell(&self) -> SimTime {
        self.dwell
            .values()
            .fold(self.outside_dwell.seconds, |acc, d| acc + d.seconds)
    }
}

/// Dwell counts each `Tick` line once, in the gallery containing the logged
/// position (first match in floorplan order).
pub fn compute_metrics(log: &EventLog, scenario: &Scenario) -> RunMetrics {
    let floorplan = &scenario.floorplan;
    let tick = scenario.tick;
    let mut dwell_ticks: BTreeMap<String, u64> = floorplan
        .galleries
        .iter()
        .map(|g| (g.id.clone(), 0))
        .collect();
    let mut outside = 0u64;
    let mut ticks = 0u64;
    let mut visit_order: Vec<String> = Vec::new();
    let mut quest_completions = Vec::new();
    let mut feedback_counts = BTreeMap::new();
    let (mut active_ticks, mut lost_ticks) = (0u64, 0u64);

    for entry in &log.entries {
        match &entry.body {
            LogBody::Sim(SimRecord::Tick { position, zone, .. }) => {
                ticks += 1;
                match floorplan.gallery_at(*position) {
                    Some(g) => {
                        *dwell_ticks.entry(g.id.clone()).or_default() += 1;
                        if !visit_order.contains(&g.id) {
                            visit_order.push(g.id.clone());
                        }
                    }
                    None => outside += 1,
                }
                if let Some(zone) = zone {
                    active_ticks += 1;
                    if *zone == Zone::Lost {
                        lost_ticks += 1;
                    }
                }
            }
            LogBody::Game(GameEventKind::QuestCompleted { quest, ghost_id }) => {
                quest_completions.push(QuestCompletion {
                    quest: *quest,
                    ghost_id: ghost_id.clone(),
                    t: entry.t,
                });
            }
            LogBody::Game(GameEventKind::Feedback { trend, zone, .. }) => {
                *feedback_counts.entry(format!("{trend}/{zone}")).or_insert(0) += 1;
            }
            _ => {}
        }
    }

    let dwell_of = |n: u64| Dwell {
        ticks: n,
        seconds: tick.times(n),
    };
    RunMetrics {
        ticks,
        duration: tick.times(ticks),
        dwell: dwell_ticks.into_iter().map(|(k, n)| (k, dwell_of(n))).collect(),
        outside_dwell: dwell_of(outside),
        visit_order,
        quest_completions,
        feedback_counts,
        lost_fraction: if active_ticks == 0 {
            0.0
        } else {
            lost_ticks as f64 / active_ticks as f64
        },
    }
}
