//! Lockstep slot engine for the discrete beeping model.
//!
//! All nodes share slot boundaries but not period boundaries: a node's local
//! period starts at its wake slot, so its local phase at global slot `g` is
//! `(g - wake) mod Q`. In every slot each awake node either beeps or
//! listens; a listener learns only whether at least one neighbor beeped.

use thiserror::Error;

use crate::rng::{stream, NodeRng, StreamPurpose};
use crate::topology::{DynamicEvent, EventKind, NodeId, Topology, TopologyError};

/// A slot index inside one period.
pub type Slot = i64;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Action {
    Beep,
    Listen,
}

/// Where a node is in its own period when asked to act.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SlotCtx {
    /// Local phase in `[0, slots)`.
    pub phase: Slot,
    /// Local period index; 0 is the period the node woke in.
    pub period: u64,
    pub slots: Slot,
}

/// A node-local protocol driven by [`DiscreteEngine`].
///
/// Protocols never see node identifiers; the engine hands each one only its
/// own phase, its own random stream, and what it heard.
pub trait SlotProtocol {
    /// Chooses this slot's action.
    fn act(&mut self, ctx: SlotCtx, rng: &mut NodeRng) -> Action;
    /// A beep was heard at `phase` of the current period.
    fn hear(&mut self, phase: Slot);
    /// Called after the last slot of every local period.
    fn end_period(&mut self, ctx: SlotCtx);
}

/// What one node did or perceived in a slot.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Observation {
    Asleep,
    Beeped,
    Heard,
    Silence,
}

#[derive(Debug, Error, PartialEq)]
pub enum EngineError {
    #[error("node {node} is asleep at global slot {slot}")]
    Asleep { node: NodeId, slot: u64 },
    #[error("node {0} is not part of the network")]
    Absent(NodeId),
    #[error("dynamic event at period {period}: {source}")]
    Event {
        period: u64,
        #[source]
        source: TopologyError,
    },
    #[error("dynamic add_node requires a protocol factory")]
    NoFactory,
}

#[derive(Debug, Clone)]
pub struct NodeRuntime<P> {
    pub proto: P,
    pub wake_slot: u64,
    rng: NodeRng,
}

impl<P> NodeRuntime<P> {
    pub fn is_awake(&self, global_slot: u64) -> bool {
        global_slot >= self.wake_slot
    }
}

type Factory<P> = Box<dyn FnMut() -> P + Send>;

pub struct DiscreteEngine<P> {
    slots: Slot,
    topo: Topology,
    nodes: Vec<Option<NodeRuntime<P>>>,
    seed: u64,
    events: Vec<DynamicEvent>,
    next_event: usize,
    factory: Option<Factory<P>>,
    global_slot: u64,
    outcome: Vec<Observation>,
    beepers: Vec<NodeId>,
}

impl<P: SlotProtocol> DiscreteEngine<P> {
    /// Builds an engine with one protocol instance per node of `topo`.
    /// `make` sees the node id only so harnesses can seed engineered states.
    pub fn new(
        topo: Topology,
        slots: Slot,
        wake_slots: &[u64],
        seed: u64,
        mut make: impl FnMut(NodeId) -> P,
    ) -> Self {
        assert!(slots > 0, "a period needs at least one slot");
        assert_eq!(wake_slots.len(), topo.node_count(), "one wake slot per node");
        let nodes = (0..topo.node_count())
            .map(|v| {
                topo.is_alive(v).then(|| NodeRuntime {
                    proto: make(v),
                    wake_slot: wake_slots[v],
                    rng: stream(seed, v as u64, StreamPurpose::Protocol),
                })
            })
            .collect();
        let n = topo.node_count();
        DiscreteEngine {
            slots,
            topo,
            nodes,
            seed,
            events: Vec::new(),
            next_event: 0,
            factory: None,
            global_slot: 0,
            outcome: vec![Observation::Asleep; n],
            beepers: Vec::new(),
        }
    }

    /// Schedules topology changes; nodes added later are built by `factory`.
    pub fn with_events(
        mut self,
        mut events: Vec<DynamicEvent>,
        factory: Option<Factory<P>>,
    ) -> Self {
        events.sort_by_key(|e| e.at_period);
        self.events = events;
        self.factory = factory;
        self
    }

    /// Re-keys a node's random stream. Two nodes given the same key draw
    /// identical sequences.
    pub fn set_stream_key(&mut self, node: NodeId, key: u64) {
        if let Some(rt) = self.nodes[node].as_mut() {
            rt.rng = stream(self.seed, key, StreamPurpose::Protocol);
        }
    }

    pub fn slots(&self) -> Slot {
        self.slots
    }

    pub fn topology(&self) -> &Topology {
        &self.topo
    }

    pub fn global_slot(&self) -> u64 {
        self.global_slot
    }

    /// Index of the global period the next slot belongs to.
    pub fn global_period(&self) -> u64 {
        self.global_slot / self.slots as u64
    }

    pub fn node(&self, v: NodeId) -> Option<&NodeRuntime<P>> {
        self.nodes.get(v).and_then(Option::as_ref)
    }

    pub fn node_mut(&mut self, v: NodeId) -> Option<&mut NodeRuntime<P>> {
        self.nodes.get_mut(v).and_then(Option::as_mut)
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_awake(&self, v: NodeId) -> bool {
        self.node(v).is_some_and(|rt| rt.is_awake(self.global_slot))
    }

    /// Observations from the most recent slot.
    pub fn last_outcome(&self) -> &[Observation] {
        &self.outcome
    }

    /// Local phase of `node` at `global_slot`: `(global_slot - wake) mod Q`.
    pub fn local_phase(&self, node: NodeId, global_slot: u64) -> Result<Slot, EngineError> {
        let rt = self.node(node).ok_or(EngineError::Absent(node))?;
        if global_slot < rt.wake_slot {
            return Err(EngineError::Asleep {
                node,
                slot: global_slot,
            });
        }
        Ok(((global_slot - rt.wake_slot) % self.slots as u64) as Slot)
    }

    /// Clock offset `Θ_v` of a node: its wake slot reduced mod `Q`.
    pub fn clock_offset(&self, node: NodeId) -> Option<Slot> {
        self.node(node)
            .map(|rt| (rt.wake_slot % self.slots as u64) as Slot)
    }

    fn ctx(&self, wake_slot: u64, global_slot: u64) -> SlotCtx {
        let local = global_slot - wake_slot;
        let q = self.slots as u64;
        SlotCtx {
            phase: (local % q) as Slot,
            period: local / q,
            slots: self.slots,
        }
    }

    /// Applies every pending event scheduled for `period` or earlier.
    /// Added nodes wake at the first slot of `period`; removed nodes vanish.
    pub fn apply_dynamic_events(&mut self, period: u64) -> Result<(), EngineError> {
        while let Some(event) = self.events.get(self.next_event) {
            if event.at_period > period {
                break;
            }
            let event = event.clone();
            self.next_event += 1;
            event
                .apply(&mut self.topo)
                .map_err(|source| EngineError::Event { period, source })?;
            match event.kind {
                EventKind::AddNode { id, .. } => {
                    let factory = self.factory.as_mut().ok_or(EngineError::NoFactory)?;
                    let rt = NodeRuntime {
                        proto: factory(),
                        wake_slot: period * self.slots as u64,
                        rng: stream(self.seed, id as u64, StreamPurpose::Protocol),
                    };
                    debug_assert_eq!(id, self.nodes.len());
                    self.nodes.push(Some(rt));
                    self.outcome.push(Observation::Asleep);
                }
                EventKind::RemoveNode(v) => self.nodes[v] = None,
                EventKind::AddEdge(..) | EventKind::RemoveEdge(..) => {}
            }
        }
        Ok(())
    }

    /// Advances one global slot.
    pub fn step_slot(&mut self) -> Result<&[Observation], EngineError> {
        let g = self.global_slot;
        let q = self.slots as u64;
        if g % q == 0 {
            self.apply_dynamic_events(g / q)?;
        }

        self.beepers.clear();
        for v in 0..self.nodes.len() {
            let obs = match self.nodes[v].as_ref().map(|rt| rt.wake_slot) {
                Some(wake) if wake <= g => {
                    let ctx = self.ctx(wake, g);
                    let rt = self.nodes[v].as_mut().expect("checked above");
                    match rt.proto.act(ctx, &mut rt.rng) {
                        Action::Beep => {
                            self.beepers.push(v);
                            Observation::Beeped
                        }
                        Action::Listen => Observation::Silence,
                    }
                }
                _ => Observation::Asleep,
            };
            self.outcome[v] = obs;
        }

        for &u in &self.beepers {
            for &w in self.topo.neighbors(u) {
                if self.outcome[w] == Observation::Silence {
                    self.outcome[w] = Observation::Heard;
                }
            }
        }

        for v in 0..self.nodes.len() {
            let Some(wake) = self.nodes[v].as_ref().map(|rt| rt.wake_slot) else {
                continue;
            };
            if wake > g {
                continue;
            }
            let ctx = self.ctx(wake, g);
            let rt = self.nodes[v].as_mut().expect("checked above");
            if self.outcome[v] == Observation::Heard {
                rt.proto.hear(ctx.phase);
            }
            if ctx.phase == self.slots - 1 {
                rt.proto.end_period(ctx);
            }
        }

        self.global_slot += 1;
        Ok(&self.outcome)
    }

    /// Runs up to (not including) the next global period boundary.
    pub fn run_period(&mut self) -> Result<(), EngineError> {
        let q = self.slots as u64;
        let target = (self.global_slot / q + 1) * q;
        while self.global_slot < target {
            self.step_slot()?;
        }
        Ok(())
    }
}
