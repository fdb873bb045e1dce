//! Exact event-driven simulation of the particle process at truncation
//! level `r`.
//!
//! Each active cell receives Poisson points in the strip `0 < x < r` at
//! rate `q` per unit area. Points are generated as one superposed
//! exponential clock of rate `Σ q·r` with a cell picked proportionally to its
//! rate and a uniform ordinate; a point is accepted as a jump only when its
//! ordinate falls inside the cell's current window `(h↓, h)`.
//!
//! Between events the state is kept as an anchor: the heights at the last
//! event time `t₀`. Current heights are `flow(h(t₀), t − t₀)`, so rejected
//! points leave the anchor untouched and a log replay recomputes every
//! height with the same floating-point operations.

use rand::Rng;
use rand_distr::{Distribution, Exp1};
use serde::{Deserialize, Serialize};

use super::flow::{flow, hitting_time, Mode};
use crate::error::{Error, Result};
use crate::params::Parameters;
use crate::partitions::{Cell, YoungDiagram};
use crate::tableau_state::HeightState;

/// Default event cap per replica.
pub const DEFAULT_EVENT_CAP: u64 = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EventKind {
    Jump,
    Absorb,
}

/// One state change.
///
/// For a jump, `from` is the height just before the drop (`r` when the cell
/// enters the support) and `to` the new height. For an absorption, `from` is
/// the cell's height at the previous state change and `to = r`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub t: f64,
    pub i: usize,
    pub j: usize,
    pub kind: EventKind,
    pub from: f64,
    pub to: f64,
}

impl Event {
    pub fn cell(&self) -> Cell {
        Cell { i: self.i, j: self.j }
    }
}

pub type EventLog = Vec<Event>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub params: Parameters,
    pub mode: Mode,
    /// Restricts the dynamics to the cells of this diagram.
    pub subdiagram: Option<YoungDiagram>,
    pub horizon: f64,
    pub seed: u64,
    pub event_cap: u64,
}

impl SimConfig {
    pub fn new(params: Parameters, horizon: f64, seed: u64) -> Self {
        SimConfig { params, mode: Mode::Full, subdiagram: None, horizon, seed, event_cap: DEFAULT_EVENT_CAP }
    }

    pub fn r(&self) -> f64 {
        self.params.r
    }

    fn allows(&self, cell: Cell) -> bool {
        self.subdiagram.as_ref().is_none_or(|d| d.contains(cell))
    }

    /// Poisson intensity per unit area for a cell.
    fn intensity(&self, cell: Cell) -> f64 {
        match self.mode {
            Mode::Full => self.params.q_rate(cell),
            Mode::Plancherel => 1.0,
        }
    }
}

/// Outcome of one call to [`Engine::step`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Step {
    Event(Event),
    /// A Poisson point landed outside the cell's window.
    Rejected,
    /// The horizon was reached; the state is now at time `T`.
    Horizon,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RunStats {
    pub jumps: u64,
    pub absorptions: u64,
    pub rejections: u64,
}

impl RunStats {
    pub fn events(&self) -> u64 {
        self.jumps + self.absorptions
    }
}

/// A single trajectory in progress.
pub struct Engine<'a, R: Rng> {
    cfg: &'a SimConfig,
    rng: R,
    anchor: HeightState,
    anchor_time: f64,
    clock: f64,
    stats: RunStats,
    done: bool,
}

impl<'a, R: Rng> Engine<'a, R> {
    pub fn new(cfg: &'a SimConfig, initial: HeightState, rng: R) -> Result<Self> {
        initial.validate()?;
        if initial.r() != cfg.r() {
            return Err(Error::InvalidState(format!(
                "initial state has level {} but parameters have r = {}",
                initial.r(),
                cfg.r()
            )));
        }
        if let Some(sub) = &cfg.subdiagram {
            if !sub.contains_diagram(&initial.shape()) {
                return Err(Error::InvalidState(format!(
                    "initial support {} is not inside the subdiagram {sub}",
                    initial.shape()
                )));
            }
        }
        if !(cfg.horizon >= 0.0) {
            return Err(Error::InvalidInput(format!("horizon {} must be nonnegative", cfg.horizon)));
        }
        Ok(Engine { cfg, rng, anchor: initial, anchor_time: 0.0, clock: 0.0, stats: RunStats::default(), done: false })
    }

    pub fn clock(&self) -> f64 {
        self.clock
    }

    pub fn stats(&self) -> &RunStats {
        &self.stats
    }

    pub fn is_done(&self) -> bool {
        self.done
    }

    /// State at the last event (or at `T` once finished).
    pub fn anchor(&self) -> &HeightState {
        &self.anchor
    }

    /// Materializes the state at the current clock.
    pub fn state_now(&self) -> HeightState {
        advance(&self.anchor, self.clock - self.anchor_time, self.cfg.mode)
    }

    fn height_now(&self, cell: Cell) -> f64 {
        flow(self.anchor.height(cell), self.clock - self.anchor_time, self.anchor.r(), self.cfg.mode)
    }

    fn h_down_now(&self, cell: Cell) -> f64 {
        let dt = self.clock - self.anchor_time;
        let r = self.anchor.r();
        let g = |c: Cell| flow(self.anchor.height(c), dt, r, self.cfg.mode);
        match (cell.i > 1, cell.j > 1) {
            (true, true) => g(Cell { i: cell.i - 1, j: cell.j }).max(g(Cell { i: cell.i, j: cell.j - 1 })),
            (false, true) => g(Cell { i: 1, j: cell.j - 1 }),
            (true, false) => g(Cell { i: cell.i - 1, j: 1 }),
            (false, false) => 0.0,
        }
    }

    /// Earliest absorption: the supported cell with the largest height.
    fn next_absorption(&self) -> Option<(Cell, f64)> {
        let (cell, h) = self.anchor.cells().max_by(|a, b| a.1.total_cmp(&b.1))?;
        let dt = hitting_time(h, self.anchor.r(), self.cfg.mode).expect("stored heights are positive");
        Some((cell, self.anchor_time + dt))
    }

    fn check_cap(&self) -> Result<()> {
        if self.stats.events() >= self.cfg.event_cap {
            return Err(Error::Explosion { cap: self.cfg.event_cap, time: self.clock });
        }
        Ok(())
    }

    /// Advances to the next Poisson point, absorption, or the horizon.
    pub fn step(&mut self) -> Result<Step> {
        if self.done {
            return Ok(Step::Horizon);
        }
        let r = self.anchor.r();
        let mut active = self.anchor.active_cells();
        active.retain(|&c| self.cfg.allows(c));
        let weights: Vec<f64> = active.iter().map(|&c| self.cfg.intensity(c) * r).collect();
        let total: f64 = weights.iter().sum();
        let t_candidate = if total > 0.0 {
            let e: f64 = Exp1.sample(&mut self.rng);
            self.clock + e / total
        } else {
            f64::INFINITY
        };
        let absorption = self.next_absorption();
        let t_abs = absorption.map_or(f64::INFINITY, |(_, t)| t);
        let horizon = self.cfg.horizon;

        if t_abs <= t_candidate && t_abs <= horizon {
            let (cell, _) = absorption.expect("finite absorption time");
            self.check_cap()?;
            let from = self.anchor.height(cell);
            self.clock = t_abs;
            self.rebase();
            if self.anchor.is_supported(cell) {
                self.anchor.remove_corner(cell);
            }
            self.stats.absorptions += 1;
            debug_assert!(self.anchor.validate().is_ok());
            return Ok(Step::Event(Event { t: t_abs, i: cell.i, j: cell.j, kind: EventKind::Absorb, from, to: r }));
        }
        if t_candidate > horizon {
            self.clock = horizon;
            self.rebase();
            self.done = true;
            return Ok(Step::Horizon);
        }

        self.clock = t_candidate;
        let mut u = self.rng.random::<f64>() * total;
        let mut pick = active.len() - 1;
        for (k, w) in weights.iter().enumerate() {
            if u < *w {
                pick = k;
                break;
            }
            u -= w;
        }
        let cell = active[pick];
        let x = self.rng.random::<f64>() * r;
        let (lo, hi) = (self.h_down_now(cell), self.height_now(cell));
        if !(lo < x && x < hi) || self.collides(cell, x) {
            self.stats.rejections += 1;
            return Ok(Step::Rejected);
        }
        self.check_cap()?;
        self.rebase();
        self.anchor.set_height(cell, x);
        self.stats.jumps += 1;
        debug_assert!(self.anchor.validate().is_ok());
        Ok(Step::Event(Event { t: t_candidate, i: cell.i, j: cell.j, kind: EventKind::Jump, from: hi, to: x }))
    }

    /// A jump onto a value already carried by another particle is forbidden.
    fn collides(&self, cell: Cell, x: f64) -> bool {
        let dt = self.clock - self.anchor_time;
        self.anchor
            .cells()
            .any(|(c, h)| c != cell && flow(h, dt, self.anchor.r(), self.cfg.mode) == x)
    }

    /// Moves the anchor to the current clock.
    fn rebase(&mut self) {
        self.anchor = advance(&self.anchor, self.clock - self.anchor_time, self.cfg.mode);
        self.anchor_time = self.clock;
    }

    /// Runs to the horizon, passing every event and the post-event state to
    /// `observe`.
    pub fn run_with(&mut self, mut observe: impl FnMut(&Event, &HeightState)) -> Result<()> {
        loop {
            match self.step()? {
                Step::Event(ev) => observe(&ev, &self.anchor),
                Step::Rejected => {}
                Step::Horizon => return Ok(()),
            }
        }
    }

    pub fn into_state(self) -> HeightState {
        self.state_now()
    }
}

/// Flows every height for `dt`. A height that reaches `r` leaves the
/// support; with exact arithmetic only the absorbing cell can do so.
fn advance(state: &HeightState, dt: f64, mode: Mode) -> HeightState {
    let r = state.r();
    let mut out = state.clone();
    if dt > 0.0 {
        out.map_heights(|h| flow(h, dt, r, mode));
    }
    out.drop_at_level();
    out
}

/// Runs one trajectory and returns the final state, the event log, and the
/// event counts. The result is a deterministic function of `rng`'s seed,
/// `cfg`, and `initial`.
pub fn run_with_rng<R: Rng>(cfg: &SimConfig, initial: HeightState, rng: R) -> Result<(HeightState, EventLog, RunStats)> {
    let mut engine = Engine::new(cfg, initial, rng)?;
    let mut log = Vec::new();
    engine.run_with(|ev, _| log.push(*ev))?;
    let stats = engine.stats().clone();
    Ok((engine.into_state(), log, stats))
}

/// Runs one trajectory seeded from `cfg.seed`.
pub fn run(cfg: &SimConfig, initial: HeightState) -> Result<(HeightState, EventLog)> {
    let (st, log, _) = run_with_rng(cfg, initial, crate::ensemble::replica_rng(cfg.seed, 0))?;
    Ok((st, log))
}

/// Rebuilds the final state from the initial state and an event log.
pub fn replay(initial: &HeightState, log: &[Event], horizon: f64, mode: Mode) -> Result<HeightState> {
    let mut state = initial.clone();
    let mut t0 = 0.0;
    for ev in log {
        if ev.t < t0 {
            return Err(Error::InvalidInput(format!("event times decrease at t = {}", ev.t)));
        }
        state = advance(&state, ev.t - t0, mode);
        t0 = ev.t;
        let cell = ev.cell();
        match ev.kind {
            EventKind::Jump => state.set_height(cell, ev.to),
            EventKind::Absorb => {
                if state.is_supported(cell) {
                    state.remove_corner(cell);
                }
            }
        }
        state.validate()?;
    }
    Ok(advance(&state, horizon - t0, mode))
}
