//! Event-driven engine for the continuous beeping model.
//!
//! Beeps are instantaneous. A node is either listening over a window
//! `[start, end)` or about to beep; a beep at time `t` reaches every neighbor
//! whose current window contains `t`, recorded at that neighbor's local phase
//! `(t - Θ) mod T` where `Θ` is its wake time.

use std::cmp::{Ordering, Reverse};
use std::collections::BinaryHeap;

use serde::Serialize;

use crate::model::PhaseValue;
use crate::rng::{stream, NodeRng, StreamPurpose};
use crate::topology::{NodeId, Topology};

/// What a continuous protocol does next.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ContOp {
    /// Listen for this many time units (may be zero).
    Listen(f64),
    /// Beep now.
    Beep,
}

/// A node-local protocol driven by [`ContinuousEngine`].
pub trait ContinuousProtocol {
    /// Called once at wake with an empty slice, then after every completed
    /// operation. `heard` holds the local phases recorded during the listen
    /// window that just closed, in arrival order; it is empty after a beep.
    fn next_op(&mut self, heard: &[f64], rng: &mut NodeRng) -> ContOp;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Kind {
    Wake,
    ListenEnd,
    Beep,
}

#[derive(Debug, Clone, Copy)]
struct Event {
    time: f64,
    kind: Kind,
    node: NodeId,
}

impl PartialEq for Event {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Event {}

impl PartialOrd for Event {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Event {
    fn cmp(&self, other: &Self) -> Ordering {
        self.time
            .total_cmp(&other.time)
            .then(self.kind.cmp(&other.kind))
            .then(self.node.cmp(&other.node))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Status {
    Asleep,
    Listening { start: f64, end: f64 },
    Busy,
}

#[derive(Debug, Clone)]
pub struct ContNode<P> {
    pub proto: P,
    pub wake: f64,
    rng: NodeRng,
    status: Status,
    buffer: Vec<f64>,
    /// Beeps recorded since the harness last drained the counter.
    pub heard_count: u64,
    pub beeps: u64,
    pub first_beep: Option<f64>,
    pub last_beep: Option<f64>,
}

/// Same-instant beep diagnostics.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct TieStats {
    /// Beeps that shared their exact timestamp with an earlier beep.
    pub simultaneous: u64,
    /// Of those, beeps whose node is adjacent to another beeper at that time.
    pub adjacent: u64,
}

pub struct ContinuousEngine<P> {
    period: f64,
    topo: Topology,
    nodes: Vec<ContNode<P>>,
    queue: BinaryHeap<Reverse<Event>>,
    now: f64,
    ties: TieStats,
    batch: Vec<NodeId>,
}

impl<P: ContinuousProtocol> ContinuousEngine<P> {
    pub fn new(
        topo: Topology,
        period: f64,
        wake: &[f64],
        seed: u64,
        mut make: impl FnMut(NodeId) -> P,
    ) -> Self {
        assert!(period > 0.0 && period.is_finite());
        assert_eq!(wake.len(), topo.node_count(), "one wake time per node");
        let mut queue = BinaryHeap::new();
        let nodes = (0..topo.node_count())
            .map(|v| {
                queue.push(Reverse(Event {
                    time: wake[v],
                    kind: Kind::Wake,
                    node: v,
                }));
                ContNode {
                    proto: make(v),
                    wake: wake[v],
                    rng: stream(seed, v as u64, StreamPurpose::Protocol),
                    status: Status::Asleep,
                    buffer: Vec::new(),
                    heard_count: 0,
                    beeps: 0,
                    first_beep: None,
                    last_beep: None,
                }
            })
            .collect();
        ContinuousEngine {
            period,
            topo,
            nodes,
            queue,
            now: 0.0,
            ties: TieStats::default(),
            batch: Vec::new(),
        }
    }

    /// Re-keys a node's random stream; equal keys give equal draws.
    pub fn set_stream_key(&mut self, node: NodeId, key: u64, seed: u64) {
        self.nodes[node].rng = stream(seed, key, StreamPurpose::Protocol);
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    pub fn topology(&self) -> &Topology {
        &self.topo
    }

    pub fn now(&self) -> f64 {
        self.now
    }

    pub fn nodes(&self) -> &[ContNode<P>] {
        &self.nodes
    }

    pub fn node(&self, v: NodeId) -> &ContNode<P> {
        &self.nodes[v]
    }

    pub fn node_mut(&mut self, v: NodeId) -> &mut ContNode<P> {
        &mut self.nodes[v]
    }

    pub fn ties(&self) -> TieStats {
        self.ties
    }

    pub fn is_awake(&self, v: NodeId) -> bool {
        self.nodes[v].status != Status::Asleep
    }

    /// Local phase of time `t` for node `v`.
    pub fn local_phase(&self, v: NodeId, t: f64) -> f64 {
        (t - self.nodes[v].wake).wrap(self.period)
    }

    fn schedule(&mut self, v: NodeId, op: ContOp) {
        let t = self.now;
        match op {
            ContOp::Listen(d) => {
                let d = d.max(0.0);
                self.nodes[v].status = Status::Listening { start: t, end: t + d };
                self.queue.push(Reverse(Event {
                    time: t + d,
                    kind: Kind::ListenEnd,
                    node: v,
                }));
            }
            ContOp::Beep => {
                self.nodes[v].status = Status::Busy;
                self.queue.push(Reverse(Event {
                    time: t,
                    kind: Kind::Beep,
                    node: v,
                }));
            }
        }
    }

    fn advance(&mut self, v: NodeId) {
        let node = &mut self.nodes[v];
        let heard = std::mem::take(&mut node.buffer);
        let op = node.proto.next_op(&heard, &mut node.rng);
        node.buffer = heard;
        node.buffer.clear();
        self.schedule(v, op);
    }

    fn deliver_batch(&mut self, t: f64) {
        let batch = std::mem::take(&mut self.batch);
        if batch.len() > 1 {
            self.ties.simultaneous += batch.len() as u64 - 1;
            for &u in &batch {
                if batch.iter().any(|&w| self.topo.has_edge(u, w)) {
                    self.ties.adjacent += 1;
                }
            }
        }
        for &u in &batch {
            let node = &mut self.nodes[u];
            node.beeps += 1;
            node.first_beep.get_or_insert(t);
            node.last_beep = Some(t);
        }
        for &u in &batch {
            for i in 0..self.topo.neighbors(u).len() {
                let w = self.topo.neighbors(u)[i];
                if let Status::Listening { start, end } = self.nodes[w].status {
                    if start <= t && t < end {
                        let phase = self.local_phase(w, t);
                        let node = &mut self.nodes[w];
                        node.buffer.push(phase);
                        node.heard_count += 1;
                    }
                }
            }
        }
        for &u in &batch {
            self.advance(u);
        }
        self.batch = batch;
        self.batch.clear();
    }

    /// Processes every event strictly before `t_end`.
    pub fn run_until(&mut self, t_end: f64) {
        while let Some(&Reverse(ev)) = self.queue.peek() {
            if ev.time >= t_end {
                break;
            }
            self.queue.pop();
            self.now = ev.time;
            match ev.kind {
                Kind::Wake | Kind::ListenEnd => {
                    self.nodes[ev.node].status = Status::Busy;
                    self.advance(ev.node);
                }
                Kind::Beep => {
                    self.batch.push(ev.node);
                    while let Some(&Reverse(next)) = self.queue.peek() {
                        if next.kind != Kind::Beep || next.time != ev.time {
                            break;
                        }
                        self.queue.pop();
                        self.batch.push(next.node);
                    }
                    self.deliver_batch(ev.time);
                }
            }
        }
        self.now = self.now.max(t_end);
    }
}
