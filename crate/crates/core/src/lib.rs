//! Simulator for the beeping model of communication.
//!
//! Two engines drive node-local protocols: a lockstep slot engine for the
//! discrete model and an event-driven engine for the continuous model. The
//! protocols compute interval colorings: each node settles on a phase within
//! a repeating period and an interval ending at that phase, with neighbors'
//! intervals disjoint. The [`analysis`] module holds global validators and
//! numeric oracles, and [`campaign`] runs seeded trials and emits traces.

pub mod analysis;
pub mod beepfirst;
pub mod campaign;
pub mod config;
pub mod continuous;
pub mod discrete;
pub mod jitterjump;
pub mod model;
pub mod rng;
pub mod topology;

pub use config::{ConfigError, Model, SimConfig, WakeupSchedule};
pub use discrete::{Action, DiscreteEngine, Observation, Slot, SlotCtx, SlotProtocol};
pub use jitterjump::{JitterJump, JjParams};
pub use model::{circular_distance, range_query, to_global, ClockOffset, GlobalPhase, PhaseSet};
pub use topology::{DynamicEvent, EventKind, GraphSpec, NodeId, Topology, TopologyError};
