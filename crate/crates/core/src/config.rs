//! Simulation parameters and wake-up schedules.

use std::str::FromStr;

use rand::Rng;
use serde::Serialize;
use thiserror::Error;

use crate::rng::{stream, StreamPurpose};
use crate::topology::strip_comment;

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("eta must lie in (0, 1/16], got {0}")]
    Eta(f64),
    #[error("kappa must be at least 4/eta = {min}, got {kappa}")]
    Kappa { kappa: f64, min: f64 },
    #[error("epsilon must lie in (0, 1), got {0}")]
    Epsilon(f64),
    #[error("period length must be positive")]
    Period,
    #[error("window r must be at least 1")]
    Window,
    #[error("wakeup schedule: {0}")]
    Wakeup(String),
}

/// Which time model a run uses.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Model {
    /// Slotted time; `slots` overrides `Q = ceil(κΔ)` when given.
    Discrete { slots: Option<u32> },
    /// Real time with period `T`.
    Continuous { period: f64 },
}

/// When each node wakes up, in periods of the run's time model.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum WakeupSchedule {
    Simultaneous,
    /// Each node wakes uniformly at random within the first `periods`.
    Uniform { periods: f64 },
    /// Node `v` wakes `v * step` periods after node 0.
    Stagger { step: f64 },
    /// Per-node wake instants in model units (slots or time); nodes past the
    /// end of the list wake at 0.
    Explicit(Vec<f64>),
}

impl WakeupSchedule {
    /// Wake slot of every node for a discrete run with `q` slots per period.
    pub fn resolve_slots(&self, n: usize, q: u32, seed: u64) -> Vec<u64> {
        let q = q as f64;
        match self {
            WakeupSchedule::Simultaneous => vec![0; n],
            WakeupSchedule::Uniform { periods } => {
                let span = (periods * q).floor().max(1.0) as u64;
                let mut rng = stream(seed, 0, StreamPurpose::Wakeup);
                (0..n).map(|_| rng.gen_range(0..span)).collect()
            }
            WakeupSchedule::Stagger { step } => {
                (0..n).map(|v| (v as f64 * step * q).floor() as u64).collect()
            }
            WakeupSchedule::Explicit(at) => (0..n)
                .map(|v| at.get(v).map_or(0, |&s| s.max(0.0).floor() as u64))
                .collect(),
        }
    }

    /// Wake time of every node for a continuous run with period `t`.
    pub fn resolve_times(&self, n: usize, t: f64, seed: u64) -> Vec<f64> {
        match self {
            WakeupSchedule::Simultaneous => vec![0.0; n],
            WakeupSchedule::Uniform { periods } => {
                let mut rng = stream(seed, 0, StreamPurpose::Wakeup);
                (0..n).map(|_| rng.gen::<f64>() * periods * t).collect()
            }
            WakeupSchedule::Stagger { step } => (0..n).map(|v| v as f64 * step * t).collect(),
            WakeupSchedule::Explicit(at) => {
                (0..n).map(|v| at.get(v).map_or(0.0, |&s| s.max(0.0))).collect()
            }
        }
    }

    /// Parses a `node value` per line wake file.
    pub fn parse_file(text: &str) -> Result<Self, ConfigError> {
        let mut at: Vec<f64> = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = strip_comment(raw);
            if line.is_empty() {
                continue;
            }
            let bad = || ConfigError::Wakeup(format!("line {}: expected \"node value\"", i + 1));
            let mut fields = line.split_whitespace();
            let node: usize = fields.next().and_then(|f| f.parse().ok()).ok_or_else(bad)?;
            let value: f64 = fields.next().and_then(|f| f.parse().ok()).ok_or_else(bad)?;
            if fields.next().is_some() || !(value >= 0.0) || !value.is_finite() {
                return Err(bad());
            }
            if at.len() <= node {
                at.resize(node + 1, 0.0);
            }
            at[node] = value;
        }
        Ok(WakeupSchedule::Explicit(at))
    }
}

impl FromStr for WakeupSchedule {
    type Err = ConfigError;

    /// `simultaneous`, `uniform:<periods>` or `stagger:<periods>`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || ConfigError::Wakeup(format!("unrecognised schedule {s:?}"));
        let (kind, arg) = match s.split_once(':') {
            Some((k, a)) => (k, Some(a)),
            None => (s, None),
        };
        let num = || -> Result<f64, ConfigError> {
            let v: f64 = arg.ok_or_else(bad)?.parse().map_err(|_| bad())?;
            if v >= 0.0 && v.is_finite() {
                Ok(v)
            } else {
                Err(bad())
            }
        };
        match kind {
            "simultaneous" if arg.is_none() => Ok(WakeupSchedule::Simultaneous),
            "uniform" => Ok(WakeupSchedule::Uniform { periods: num()? }),
            "stagger" => Ok(WakeupSchedule::Stagger { step: num()? }),
            _ => Err(bad()),
        }
    }
}

/// Everything that determines a run, apart from the topology.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimConfig {
    pub model: Model,
    pub kappa: f64,
    pub eta: f64,
    pub epsilon: f64,
    /// Moving-window length for the dynamic degree estimate.
    pub window: Option<u32>,
    pub master_seed: u64,
    pub wakeup: WakeupSchedule,
    pub max_periods: u64,
}

pub const DEFAULT_ETA: f64 = 1.0 / 16.0;
pub const DEFAULT_KAPPA: f64 = 4.0 / DEFAULT_ETA;

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            model: Model::Discrete { slots: None },
            kappa: DEFAULT_KAPPA,
            eta: DEFAULT_ETA,
            epsilon: 0.1,
            window: None,
            master_seed: 0,
            wakeup: WakeupSchedule::Simultaneous,
            max_periods: 1_000,
        }
    }
}

impl SimConfig {
    /// Checks the JitterAndJump preconditions: `0 < η ≤ 1/16`, `κ ≥ 4/η`.
    pub fn validate_jitterjump(&self) -> Result<(), ConfigError> {
        if !(self.eta > 0.0 && self.eta <= DEFAULT_ETA) {
            return Err(ConfigError::Eta(self.eta));
        }
        let min = 4.0 / self.eta;
        if !(self.kappa >= min) {
            return Err(ConfigError::Kappa {
                kappa: self.kappa,
                min,
            });
        }
        if self.window == Some(0) {
            return Err(ConfigError::Window);
        }
        Ok(())
    }

    pub fn validate_beepfirst(&self) -> Result<(), ConfigError> {
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return Err(ConfigError::Epsilon(self.epsilon));
        }
        if let Model::Continuous { period } = self.model {
            if !(period > 0.0 && period.is_finite()) {
                return Err(ConfigError::Period);
            }
        }
        Ok(())
    }

    /// `Q`: the explicit override, else `ceil(κ·Δ)` with Δ clamped to 1.
    pub fn slots_per_period(&self, delta: usize) -> u32 {
        match self.model {
            Model::Discrete { slots: Some(q) } => q,
            _ => (self.kappa * delta.max(1) as f64).ceil() as u32,
        }
    }

    pub fn period_length(&self) -> f64 {
        match self.model {
            Model::Continuous { period } => period,
            Model::Discrete { .. } => 1.0,
        }
    }

    /// Default window `r = ceil(log2 n)`, at least 1.
    pub fn window_for(&self, n: usize) -> u32 {
        self.window
            .unwrap_or_else(|| (n.max(2) as f64).log2().ceil() as u32)
            .max(1)
    }
}
