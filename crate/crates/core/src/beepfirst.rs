//! BeepFirst: interval coloring in the continuous beeping model.
//!
//! A node knows its degree `d` and the largest degree `d_max` in its closed
//! neighborhood. After a random start delay it listens for one full period,
//! then scans forward from phase 0, pushing its candidate phase past every
//! heard beep that lies within `b` of it, listening further as the candidate
//! advances. Once the candidate is clear it beeps there every period.

use rand::Rng;
use thiserror::Error;

use crate::continuous::{ContOp, ContinuousProtocol};
use crate::model::{circular_distance, PhaseSet, PhaseValue};
use crate::rng::NodeRng;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BfParams {
    pub period: f64,
    pub epsilon: f64,
    pub degree: usize,
    pub max_degree: usize,
    /// Pick the interval at stabilization as the largest beep-free radius
    /// instead of the degree-based formula.
    pub adaptive_interval: bool,
}

impl BfParams {
    /// `(1 - ε)·T / (2(d_max + 1))`.
    pub fn interval(&self) -> f64 {
        (1.0 - self.epsilon) * self.period / (2.0 * (self.max_degree as f64 + 1.0))
    }

    /// `(1 - ε_v)·T / (2(d + 1))`.
    pub fn buffer(&self, eps_v: f64) -> f64 {
        (1.0 - eps_v) * self.period / (2.0 * (self.degree as f64 + 1.0))
    }
}

#[derive(Debug, Clone, Copy, Error, PartialEq)]
pub enum BfViolation {
    #[error("search ran to phase {0}, past the end of the period")]
    Overrun(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Stage {
    Init,
    StartDelay,
    FirstListen,
    Searching,
    /// Beep at `p`, then listen to the end of the period.
    Beep,
    Tail,
    Head,
}

#[derive(Debug, Clone)]
pub struct BeepFirst {
    params: BfParams,
    stage: Stage,
    eps_v: f64,
    interval: f64,
    buffer: f64,
    phase: f64,
    heard: PhaseSet<f64>,
    search_len: Option<f64>,
    violation: Option<BfViolation>,
}

impl BeepFirst {
    pub fn new(params: BfParams) -> Self {
        BeepFirst {
            params,
            stage: Stage::Init,
            eps_v: 0.0,
            interval: params.interval(),
            buffer: 0.0,
            phase: 0.0,
            heard: PhaseSet::new(params.period),
            search_len: None,
            violation: None,
        }
    }

    pub fn params(&self) -> &BfParams {
        &self.params
    }

    pub fn eps_v(&self) -> f64 {
        self.eps_v
    }

    pub fn buffer(&self) -> f64 {
        self.buffer
    }

    pub fn interval(&self) -> f64 {
        self.interval
    }

    /// Chosen phase, relative to the start of the search.
    pub fn stable_phase(&self) -> Option<f64> {
        self.is_stable().then_some(self.phase)
    }

    pub fn is_stable(&self) -> bool {
        matches!(self.stage, Stage::Beep | Stage::Tail | Stage::Head)
    }

    /// Offset of the search origin from the wake time: `ε_v·T`.
    pub fn origin(&self) -> f64 {
        self.eps_v * self.params.period
    }

    /// Search duration after the initial full-period listen.
    pub fn search_len(&self) -> Option<f64> {
        self.search_len
    }

    pub fn violation(&self) -> Option<BfViolation> {
        self.violation
    }

    fn absorb(&mut self, heard: &[f64]) {
        let t = self.params.period;
        let origin = self.origin();
        for &h in heard {
            self.heard.insert((h - origin).wrap(t));
        }
    }

    /// One loop test; either extends the search or stabilizes.
    fn search_step(&mut self) -> ContOp {
        let t = self.params.period;
        let b = self.buffer;
        let p = self.phase;
        let Some(last) = self.heard.last_in(p - b, p + b) else {
            return self.stabilize();
        };
        // Forward offset of that beep from the start of the window.
        let start = (p - b).wrap(t);
        let forward = if last >= start { last - start } else { last + t - start };
        // New candidate is `last + b`, i.e. `forward` past the old one. A beep
        // exactly `b` behind the candidate (up to rounding) leaves it in place.
        let next = p + forward;
        if next <= p {
            return self.stabilize();
        }
        if next >= t {
            self.violation.get_or_insert(BfViolation::Overrun(next));
        }
        self.phase = next;
        ContOp::Listen(next - p)
    }

    fn stabilize(&mut self) -> ContOp {
        let t = self.params.period;
        self.search_len = Some(self.phase);
        self.phase = self.phase.wrap(t);
        if self.params.adaptive_interval {
            let p = self.phase;
            self.interval = match self
                .heard
                .iter()
                .map(|h| circular_distance(p, h, t))
                .min_by(f64::total_cmp)
            {
                Some(gap) => next_down(gap),
                None => t / 2.0,
            };
        }
        self.stage = Stage::Tail;
        ContOp::Beep
    }
}

fn next_down(x: f64) -> f64 {
    if x > 0.0 {
        f64::from_bits(x.to_bits() - 1)
    } else {
        0.0
    }
}

impl ContinuousProtocol for BeepFirst {
    fn next_op(&mut self, heard: &[f64], rng: &mut NodeRng) -> ContOp {
        let t = self.params.period;
        match self.stage {
            Stage::Init => {
                self.eps_v = rng.gen_range(0.0..self.params.epsilon);
                self.buffer = self.params.buffer(self.eps_v);
                self.stage = Stage::StartDelay;
                ContOp::Listen(self.origin())
            }
            Stage::StartDelay => {
                self.stage = Stage::FirstListen;
                ContOp::Listen(t)
            }
            Stage::FirstListen => {
                self.absorb(heard);
                self.phase = 0.0;
                self.stage = Stage::Searching;
                self.search_step()
            }
            Stage::Searching => {
                self.absorb(heard);
                self.search_step()
            }
            Stage::Tail => {
                self.stage = Stage::Head;
                ContOp::Listen(t - self.phase)
            }
            Stage::Head => {
                self.stage = Stage::Beep;
                ContOp::Listen(self.phase)
            }
            Stage::Beep => {
                self.stage = Stage::Tail;
                ContOp::Beep
            }
        }
    }
}
