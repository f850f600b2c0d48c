//! JitterAndJump: interval coloring in the discrete beeping model.
//!
//! After one listen-only period a node repeatedly beeps once per period at
//! its nominal phase plus a random jitter of 0 or 1 slots. An uncolored node
//! jumps to a uniformly random free slot each period; it colors itself once a
//! whole period passes with no beep within `b` slots of its phase, and
//! uncolors when it hears a beep one slot before or two after it.
//!
//! In dynamic mode the node also beeps at a fresh free slot every period and
//! keeps a moving window of beep counts so its degree estimate can shrink
//! after churn.

use std::collections::VecDeque;

use rand::Rng;

use crate::discrete::{Action, Slot, SlotCtx, SlotProtocol};
use crate::model::PhaseSet;
use crate::rng::NodeRng;

/// Factor by which the window maximum must undercut the estimate before a
/// dynamic node resets.
pub const RESET_FACTOR: u32 = 16;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JjParams {
    pub eta: f64,
    pub slots: Slot,
    /// Window length `r`; `Some` switches on dynamic mode.
    pub window: Option<u32>,
}

impl JjParams {
    pub fn new(eta: f64, slots: Slot) -> Self {
        JjParams {
            eta,
            slots,
            window: None,
        }
    }

    pub fn dynamic(self, window: u32) -> Self {
        JjParams {
            window: Some(window.max(1)),
            ..self
        }
    }

    /// `b = max(1, floor(η·Q / (d̃ + 1)))`.
    pub fn buffer_for(&self, d_tilde: u32) -> Slot {
        let raw = (self.eta * self.slots as f64 / (d_tilde as f64 + 1.0)).floor() as Slot;
        raw.max(1)
    }
}

/// Counters kept beside the protocol state. They never influence behavior
/// and are excluded from twin-state comparison.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct JjDiagnostics {
    pub free_slot_computations: u64,
    /// Computations where `|F| < (1 - 3η)·Q`.
    pub free_slot_shortfalls: u64,
    pub min_free: Option<usize>,
    /// Computations that found no free slot and fell back to any slot.
    pub empty_free_sets: u64,
    pub resets: u64,
    /// Periods evaluated with a full window of `r` counts.
    pub full_windows: u64,
    /// Full windows that ended in a reset.
    pub full_window_resets: u64,
    /// Beep count of the last completed period.
    pub last_count: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Stage {
    FirstPeriod,
    Running,
}

#[derive(Debug, Clone)]
pub struct JitterJump {
    params: JjParams,
    stage: Stage,
    colored: bool,
    phase: Option<Slot>,
    jitter: Slot,
    second: Option<Slot>,
    d_tilde: u32,
    buffer: Slot,
    interval: Slot,
    heard: PhaseSet<Slot>,
    /// The period before `heard`.
    older: PhaseSet<Slot>,
    current: PhaseSet<Slot>,
    counts: VecDeque<u32>,
    d_star: u32,
    diag: JjDiagnostics,
}

/// Slots `p` whose guard window `[p - b - 2, p + b + 1]` holds no element of
/// `heard ∪ {own}`.
pub fn free_slots(heard: &PhaseSet<Slot>, own: Option<Slot>, buffer: Slot) -> Vec<Slot> {
    let q = heard.period();
    let width = 2 * buffer + 4;
    let occupied: Vec<Slot> = heard.iter().chain(own).collect();
    if !occupied.is_empty() && width >= q {
        return Vec::new();
    }
    // Occupant h blocks p in [h - b - 1, h + b + 2]; mark with a difference array.
    let mut diff = vec![0i32; q as usize + 1];
    for h in occupied {
        let start = (h - buffer - 1).rem_euclid(q);
        let end = start + width;
        if end <= q {
            diff[start as usize] += 1;
            diff[end as usize] -= 1;
        } else {
            diff[start as usize] += 1;
            diff[q as usize] -= 1;
            diff[0] += 1;
            diff[(end - q) as usize] -= 1;
        }
    }
    let mut free = Vec::new();
    let mut running = 0;
    for p in 0..q {
        running += diff[p as usize];
        if running == 0 {
            free.push(p);
        }
    }
    free
}

/// `max(s)` with `S[p - s, p]` empty, less one: the backward gap to the
/// nearest heard beep. `Q - 1` when nothing was heard.
pub fn measure_interval(heard: &PhaseSet<Slot>, phase: Slot) -> Slot {
    let q = heard.period();
    match heard.last_in(phase + 1, phase) {
        None => q - 1,
        Some(h) => ((phase - h).rem_euclid(q) - 1).max(0),
    }
}

impl JitterJump {
    /// A freshly woken node.
    pub fn new(params: JjParams) -> Self {
        let q = params.slots;
        JitterJump {
            params,
            stage: Stage::FirstPeriod,
            colored: false,
            phase: None,
            jitter: 0,
            second: None,
            d_tilde: 1,
            buffer: params.buffer_for(1),
            interval: 0,
            heard: PhaseSet::new(q),
            older: PhaseSet::new(q),
            current: PhaseSet::new(q),
            counts: VecDeque::new(),
            d_star: 0,
            diag: JjDiagnostics::default(),
        }
    }

    /// A node placed directly into the running loop with the given state,
    /// as if `heard` were what it observed last period.
    pub fn engineered(
        params: JjParams,
        colored: bool,
        phase: Option<Slot>,
        d_tilde: u32,
        heard: PhaseSet<Slot>,
    ) -> Self {
        let mut node = JitterJump::new(params);
        node.stage = Stage::Running;
        node.colored = colored;
        node.phase = phase.map(|p| p.rem_euclid(params.slots));
        node.d_tilde = d_tilde.max(1);
        node.buffer = params.buffer_for(node.d_tilde);
        node.heard = heard;
        node
    }

    pub fn params(&self) -> &JjParams {
        &self.params
    }

    pub fn in_first_period(&self) -> bool {
        self.stage == Stage::FirstPeriod
    }

    pub fn colored(&self) -> bool {
        self.colored
    }

    /// Nominal phase `p_v`; `None` until the first jump.
    pub fn phase(&self) -> Option<Slot> {
        self.phase
    }

    pub fn jitter(&self) -> Slot {
        self.jitter
    }

    pub fn second_phase(&self) -> Option<Slot> {
        self.second
    }

    pub fn d_tilde(&self) -> u32 {
        self.d_tilde
    }

    pub fn d_star(&self) -> u32 {
        self.d_star
    }

    pub fn buffer(&self) -> Slot {
        self.buffer
    }

    pub fn interval(&self) -> Slot {
        self.interval
    }

    /// Beeps heard in the last completed period.
    pub fn heard(&self) -> &PhaseSet<Slot> {
        &self.heard
    }

    pub fn diagnostics(&self) -> &JjDiagnostics {
        &self.diag
    }

    /// Free slots for the current state, judged on the last two periods.
    pub fn free_slots(&self) -> Vec<Slot> {
        let mut seen = self.heard.clone();
        seen.union_with(&self.older);
        free_slots(&seen, self.phase, self.buffer)
    }

    /// Compares everything the protocol can act on, ignoring diagnostics.
    pub fn same_state(&self, other: &JitterJump) -> bool {
        self.params == other.params
            && self.stage == other.stage
            && self.colored == other.colored
            && self.phase == other.phase
            && self.jitter == other.jitter
            && self.second == other.second
            && self.d_tilde == other.d_tilde
            && self.buffer == other.buffer
            && self.interval == other.interval
            && self.heard == other.heard
            && self.older == other.older
            && self.current == other.current
            && self.counts == other.counts
            && self.d_star == other.d_star
    }

    fn draw_free(&mut self, free: &[Slot], rng: &mut NodeRng) -> Slot {
        if free.is_empty() {
            rng.gen_range(0..self.params.slots)
        } else {
            free[rng.gen_range(0..free.len())]
        }
    }

    fn begin_period(&mut self, rng: &mut NodeRng) {
        self.current.clear();
        let dynamic = self.params.window.is_some();
        let free = if !self.colored || dynamic {
            let free = self.free_slots();
            self.record_free(free.len());
            Some(free)
        } else {
            None
        };
        if !self.colored {
            let free = free.as_deref().expect("computed for uncolored nodes");
            self.phase = Some(self.draw_free(free, rng));
        }
        self.jitter = rng.gen_range(0..=1);
        if dynamic {
            let free = free.as_deref().expect("computed in dynamic mode");
            self.second = Some(self.draw_free(free, rng));
        }
    }

    fn record_free(&mut self, len: usize) {
        let d = &mut self.diag;
        d.free_slot_computations += 1;
        let floor = (1.0 - 3.0 * self.params.eta) * self.params.slots as f64;
        if (len as f64) < floor {
            d.free_slot_shortfalls += 1;
        }
        if len == 0 {
            d.empty_free_sets += 1;
        }
        d.min_free = Some(d.min_free.map_or(len, |m| m.min(len)));
    }

    fn finish_first_period(&mut self) {
        let count = self.current.len() as u32;
        self.d_tilde = count.max(1);
        self.buffer = self.params.buffer_for(self.d_tilde);
        self.colored = false;
        if let Some(r) = self.params.window {
            self.push_count(count, r);
        }
        self.diag.last_count = count as usize;
        std::mem::swap(&mut self.heard, &mut self.current);
        self.stage = Stage::Running;
    }

    fn push_count(&mut self, count: u32, r: u32) {
        self.counts.push_back(count);
        while self.counts.len() > r as usize {
            self.counts.pop_front();
        }
        self.d_star = self.counts.iter().copied().max().unwrap_or(0);
    }

    fn finish_period(&mut self) {
        let p = self.phase.expect("running nodes have a phase");
        let count = self.current.len() as u32;
        // A neighbor one slot before our period boundary whose jitter flips
        // from 0 to 1 is silent for a whole period; the previous period
        // still has it.
        let mut seen = self.current.clone();
        seen.union_with(&self.heard);
        self.interval = measure_interval(&seen, p);
        match self.params.window {
            Some(r) => {
                self.push_count(count, r);
                self.d_tilde = self.d_tilde.max(self.d_star).max(1);
            }
            None => self.d_tilde = count.max(1),
        }
        self.buffer = self.params.buffer_for(self.d_tilde);
        let b = self.buffer;
        let s = &self.current;
        if !s.any_in(p - b, p + b) {
            self.colored = true;
        } else if s.any_in(p - 1, p + 2) {
            self.colored = false;
        }
        if let Some(r) = self.params.window {
            let full = self.counts.len() == r as usize;
            if full {
                self.diag.full_windows += 1;
            }
            if RESET_FACTOR * self.d_star < self.d_tilde {
                self.d_tilde = self.d_star.max(1);
                self.buffer = self.params.buffer_for(self.d_tilde);
                self.colored = false;
                self.diag.resets += 1;
                if full {
                    self.diag.full_window_resets += 1;
                }
            }
        }
        self.diag.last_count = count as usize;
        std::mem::swap(&mut self.older, &mut self.heard);
        std::mem::swap(&mut self.heard, &mut self.current);
    }
}

impl SlotProtocol for JitterJump {
    fn act(&mut self, ctx: SlotCtx, rng: &mut NodeRng) -> Action {
        if ctx.phase == 0 && self.stage == Stage::Running {
            self.begin_period(rng);
        }
        if self.stage == Stage::FirstPeriod {
            return Action::Listen;
        }
        let p = self.phase.expect("phase chosen at period start");
        // `p + jitter = Q` wraps to slot 0 of the same period.
        let main = ctx.phase == (p + self.jitter) % self.params.slots;
        if main || self.second == Some(ctx.phase) {
            Action::Beep
        } else {
            Action::Listen
        }
    }

    fn hear(&mut self, phase: Slot) {
        self.current.insert(phase);
    }

    fn end_period(&mut self, _ctx: SlotCtx) {
        match self.stage {
            Stage::FirstPeriod => self.finish_first_period(),
            Stage::Running => self.finish_period(),
        }
    }
}
