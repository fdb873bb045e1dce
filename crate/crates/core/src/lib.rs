//! Simulation and verification of a particle process on generalized
//! standard Young tableaux and of its projection, a jump chain on Young
//! diagrams.

pub mod ensemble;
pub mod error;
pub mod gibbs;
pub mod jump_chain;
pub mod params;
pub mod partitions;
pub mod pdmp;
pub mod stats;
pub mod tableau_state;
pub mod verify;

pub use error::{Error, Result};
pub use params::{Complex, ExactParameters, ParamKind, Parameters};
pub use partitions::{Cell, StandardTableau, YoungDiagram};
pub use pdmp::{Event, EventKind, Mode, SimConfig};
pub use tableau_state::HeightState;
