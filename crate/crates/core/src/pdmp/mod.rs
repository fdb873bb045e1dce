//! The piecewise-deterministic particle process on generalized tableaux.

pub mod engine;
pub mod flow;

pub use engine::{replay, run, run_with_rng, Engine, Event, EventKind, EventLog, RunStats, SimConfig, Step, DEFAULT_EVENT_CAP};
pub use flow::{flow, hitting_time, velocity, Mode};
