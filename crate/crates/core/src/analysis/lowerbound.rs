//! Twin-state experiment on the cycle-of-blocks graph.
//!
//! In every block the vertices `b` and `c` have the same closed
//! neighborhood. An anonymous protocol that starts them in the same state
//! keeps them identical for as long as they keep taking the same action. The
//! experiment measures how long that lasts; it exercises the mechanism of the
//! lower bound, not the asymptotic statement itself.

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::discrete::{Action, DiscreteEngine, Observation, Slot, SlotCtx, SlotProtocol};
use crate::jitterjump::{JitterJump, JjParams};
use crate::rng::{derive_seed, NodeRng, StreamPurpose};
use crate::topology::{cycle_of_blocks, Topology, TopologyError};

/// The cycle-of-blocks graph on `k` blocks of four vertices.
pub fn build_lowerbound_graph(k: usize) -> Result<Topology, TopologyError> {
    cycle_of_blocks(k)
}

/// Ids of the `b` and `c` vertices of block `i`.
pub fn twin_pair(i: usize) -> (usize, usize) {
    (4 * i + 1, 4 * i + 2)
}

/// Equality over the state a protocol can act on.
pub trait TwinComparable {
    fn same_state(&self, other: &Self) -> bool;
}

impl TwinComparable for JitterJump {
    fn same_state(&self, other: &Self) -> bool {
        JitterJump::same_state(self, other)
    }
}

/// Beeps with probability one half in every slot; its state is the full
/// history of what it did and heard.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CoinBeeper {
    history: Vec<u8>,
}

impl SlotProtocol for CoinBeeper {
    fn act(&mut self, _ctx: SlotCtx, rng: &mut NodeRng) -> Action {
        if rng.gen_bool(0.5) {
            self.history.push(1);
            Action::Beep
        } else {
            self.history.push(0);
            Action::Listen
        }
    }

    fn hear(&mut self, _phase: Slot) {
        if let Some(last) = self.history.last_mut() {
            *last |= 2;
        }
    }

    fn end_period(&mut self, _ctx: SlotCtx) {}
}

impl TwinComparable for CoinBeeper {
    fn same_state(&self, other: &Self) -> bool {
        self == other
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum TwinProtocol {
    JitterJump,
    Coin,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TwinConfig {
    pub blocks: usize,
    pub slots: u64,
    pub trials: u64,
    pub seed: u64,
    /// Give each twin pair one shared random stream.
    pub shared_randomness: bool,
    /// Slot count after which surviving identical pairs are counted.
    pub horizon: u64,
}

impl TwinConfig {
    /// `ℓ = log2(k)`, rounded up.
    pub fn default_horizon(blocks: usize) -> u64 {
        (blocks.max(2) as f64).log2().ceil() as u64
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct TwinStats {
    pub trials: u64,
    pub slots: u64,
    /// Slot-pair observations where the twins entered the slot identical.
    pub same_state_slots: u64,
    /// Of those, how many had the twins take the same action.
    pub same_action_slots: u64,
    /// Pairs that went from identical to different.
    pub divergences: u64,
    /// Trials with at least one identical pair after `horizon` slots.
    pub trials_with_identical_pair: u64,
    pub horizon: u64,
}

impl TwinStats {
    pub fn same_action_rate(&self) -> f64 {
        self.same_action_slots as f64 / self.same_state_slots.max(1) as f64
    }

    pub fn surviving_pair_rate(&self) -> f64 {
        self.trials_with_identical_pair as f64 / self.trials.max(1) as f64
    }

    fn merge(mut self, o: TwinStats) -> TwinStats {
        self.trials += o.trials;
        self.same_state_slots += o.same_state_slots;
        self.same_action_slots += o.same_action_slots;
        self.divergences += o.divergences;
        self.trials_with_identical_pair += o.trials_with_identical_pair;
        self
    }
}

fn run_trial<P, F>(topo: &Topology, slots: Slot, cfg: &TwinConfig, trial: u64, make: &F) -> TwinStats
where
    P: SlotProtocol + TwinComparable,
    F: Fn() -> P,
{
    let n = topo.node_count();
    let seed = derive_seed(cfg.seed, trial, StreamPurpose::Trial);
    let mut engine = DiscreteEngine::new(topo.clone(), slots, &vec![0; n], seed, |_| make());
    let pairs: Vec<_> = (0..cfg.blocks).map(twin_pair).collect();
    if cfg.shared_randomness {
        for &(b, c) in &pairs {
            engine.set_stream_key(c, b as u64);
        }
    }
    let mut stats = TwinStats {
        trials: 1,
        slots: cfg.slots,
        horizon: cfg.horizon,
        ..TwinStats::default()
    };
    let same = |e: &DiscreteEngine<P>, b: usize, c: usize| {
        let (x, y) = (e.node(b).expect("static graph"), e.node(c).expect("static graph"));
        x.proto.same_state(&y.proto)
    };
    let mut identical: Vec<bool> = pairs.iter().map(|&(b, c)| same(&engine, b, c)).collect();
    if cfg.horizon == 0 && identical.iter().any(|&s| s) {
        stats.trials_with_identical_pair = 1;
    }
    for slot in 1..=cfg.slots {
        engine.step_slot().expect("static graph has no events");
        let out = engine.last_outcome();
        for (i, &(b, c)) in pairs.iter().enumerate() {
            if identical[i] {
                stats.same_state_slots += 1;
                let beeped = |v: usize| out[v] == Observation::Beeped;
                if beeped(b) == beeped(c) {
                    stats.same_action_slots += 1;
                }
            }
        }
        for (i, &(b, c)) in pairs.iter().enumerate() {
            let now = same(&engine, b, c);
            if identical[i] && !now {
                stats.divergences += 1;
            }
            identical[i] = now;
        }
        if slot == cfg.horizon && identical.iter().any(|&s| s) {
            stats.trials_with_identical_pair = 1;
        }
    }
    stats
}

/// Runs `trials` independent executions on the `k`-block graph with
/// simultaneous wakeup and aggregates twin statistics.
pub fn twin_coupling_experiment(
    protocol: TwinProtocol,
    cfg: &TwinConfig,
) -> Result<TwinStats, TopologyError> {
    let topo = build_lowerbound_graph(cfg.blocks)?;
    let delta = topo.max_degree();
    let q = (crate::config::DEFAULT_KAPPA * delta as f64).ceil() as Slot;
    let init = TwinStats {
        slots: cfg.slots,
        horizon: cfg.horizon,
        ..TwinStats::default()
    };
    let stats = (0..cfg.trials)
        .into_par_iter()
        .map(|t| match protocol {
            TwinProtocol::JitterJump => {
                let params = JjParams::new(crate::config::DEFAULT_ETA, q);
                run_trial(&topo, q, cfg, t, &|| JitterJump::new(params))
            }
            TwinProtocol::Coin => run_trial(&topo, q, cfg, t, &CoinBeeper::default),
        })
        .reduce(|| init, TwinStats::merge);
    Ok(stats)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn graph_shape() {
        let g = build_lowerbound_graph(2).unwrap();
        assert_eq!(g.node_count(), 8);
        assert_eq!(g.edge_count(), 12);
        for i in 0..2 {
            let (b, c) = twin_pair(i);
            assert_eq!(g.closed_neighborhood(b), g.closed_neighborhood(c));
            assert_eq!(g.closed_neighborhood(b), vec![4 * i, 4 * i + 1, 4 * i + 2, 4 * i + 3]);
        }
        assert!((0..8).all(|v| g.degree(v) == 3));
    }

    fn cfg(shared: bool, trials: u64) -> TwinConfig {
        TwinConfig {
            blocks: 16,
            slots: 40,
            trials,
            seed: 5,
            shared_randomness: shared,
            horizon: 4,
        }
    }

    #[test]
    fn shared_streams_never_diverge() {
        for p in [TwinProtocol::Coin, TwinProtocol::JitterJump] {
            let s = twin_coupling_experiment(p, &cfg(true, 20)).unwrap();
            assert_eq!(s.divergences, 0);
            assert_eq!(s.same_action_rate(), 1.0);
        }
    }

    #[test]
    fn independent_coin_twins_split() {
        let s = twin_coupling_experiment(TwinProtocol::Coin, &cfg(false, 400)).unwrap();
        assert!(s.divergences > 0);
        let rate = s.same_action_rate();
        assert!((rate - 0.5).abs() < 0.05, "rate {rate}");
    }

    #[test]
    fn deterministic_across_runs() {
        let a = twin_coupling_experiment(TwinProtocol::Coin, &cfg(false, 50)).unwrap();
        let b = twin_coupling_experiment(TwinProtocol::Coin, &cfg(false, 50)).unwrap();
        assert_eq!(a, b);
    }
}
