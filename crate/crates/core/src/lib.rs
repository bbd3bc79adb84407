//! A deterministic simulator for a BLE beacon museum game.
//!
//! A visitor walks a 2-D floorplan carrying a phone that hears beacons mounted
//! on artifacts. The [`radio`] model produces RSSI samples with the rough edges
//! real deployments show: log-distance falloff, body shadowing when the
//! beacon is behind you, shelves and walls, crowds that swallow the signal, and
//! correlated fluctuation over time. [`sensing`] smooths those samples into a
//! proximity zone and a warmer/colder trend, and the [`game`] turns the trend
//! into ghost feedback while walking the player through an ordered set of
//! quests.
//!
//! [`harness`] runs scenarios headlessly and writes JSONL event logs,
//! [`gateway`] exposes the same pipeline to a live client.
//!
//! ```
//! use seamquest::radio::{path_loss, RadioParams};
//!
//! let params = RadioParams { n_pl: 2.0, ..RadioParams::default() };
//! assert_eq!(path_loss(10.0, &params).unwrap(), 20.0);
//! ```

pub mod game;
pub mod gateway;
pub mod geometry;
pub mod harness;
pub mod radio;
pub mod rng;
pub mod scenario;
pub mod sensing;
pub mod time;
pub mod world;

pub use scenario::{load_scenario, load_scenario_file, Scenario, ScenarioError, ValidationError};
pub use time::SimTime;

// Book chapters are compiled as doctests so their snippets stay honest.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/radio.md")]
    mod radio {}
    #[doc = include_str!("../../../book/src/sensing.md")]
    mod sensing {}
    #[doc = include_str!("../../../book/src/game.md")]
    mod game {}
    #[doc = include_str!("../../../book/src/scenarios.md")]
    mod scenarios {}
    #[doc = include_str!("../../../book/src/harness.md")]
    mod harness {}
    #[doc = include_str!("../../../book/src/protocol.md")]
    mod protocol {}
}
