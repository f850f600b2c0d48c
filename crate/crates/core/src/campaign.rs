//! Seeded trial runners, per-period traces and campaign summaries.

use std::fmt;
use std::io::{self, Write};

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::analysis::coloring::{
    classify_good_bad, classify_separated, hardness_reduction, interval_floor_violations,
    validate_interval_coloring, ColoringSnapshot, GoodBadLabeling, IntervalReport,
    Label, NodeColoring,
};
use crate::beepfirst::{BeepFirst, BfParams};
use crate::config::{ConfigError, Model, SimConfig};
use crate::continuous::{ContinuousEngine, TieStats};
use crate::discrete::{DiscreteEngine, EngineError, Slot};
use crate::jitterjump::{JitterJump, JjParams};
use crate::model::{circular_distance, PhaseValue};
use crate::rng::{derive_seed, stream, StreamPurpose};
use crate::topology::{max_degree_over_events, DynamicEvent, GraphSpec, NodeId, Topology, TopologyError};

#[derive(Debug, Error)]
pub enum CampaignError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Topology(#[from] TopologyError),
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error("{0}")]
    Invalid(String),
}

/// A CSV cell that prints integers without a fractional part.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Num {
    Int(i64),
    Real(f64),
}

impl fmt::Display for Num {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Num::Int(v) => write!(f, "{v}"),
            Num::Real(v) => write!(f, "{v}"),
        }
    }
}

/// One node at one global period boundary.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceRecord {
    /// Completed global periods.
    pub period: u64,
    pub node: NodeId,
    /// Nominal phase in the global frame.
    pub phase: Option<Num>,
    pub jitter: Option<i64>,
    pub interval: Option<Num>,
    pub colored: bool,
    pub label: Option<Label>,
    pub beeps_heard: u64,
    /// Degree estimate; not part of the CSV.
    #[serde(skip)]
    pub d_tilde: Option<u32>,
}

pub const CSV_HEADER: &str = "period,node,phase,jitter,interval,colored,label,beeps_heard";

pub fn write_trace_csv<W: Write>(mut out: W, records: &[TraceRecord]) -> io::Result<()> {
    fn opt<T: fmt::Display>(v: &Option<T>) -> String {
        v.as_ref().map(ToString::to_string).unwrap_or_default()
    }
    writeln!(out, "{CSV_HEADER}")?;
    for r in records {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            r.period,
            r.node,
            opt(&r.phase),
            opt(&r.jitter),
            opt(&r.interval),
            r.colored,
            r.label.map_or("", Label::as_str),
            r.beeps_heard
        )?;
    }
    Ok(())
}

/// Everything one JitterAndJump execution needs.
#[derive(Debug, Clone)]
pub struct JjRun {
    pub topo: Topology,
    pub params: JjParams,
    pub wake: Vec<u64>,
    pub seed: u64,
    pub events: Vec<DynamicEvent>,
    pub max_periods: u64,
    /// Periods to keep running after everything is good.
    pub settle_periods: u64,
    pub record_trace: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct JjOutcome {
    pub slots: Slot,
    pub periods: u64,
    /// Completed periods when all nodes were first good after the last event.
    pub convergence: Option<u64>,
    pub last_event_period: Option<u64>,
    /// Nodes that went from good to not good between consecutive periods.
    pub monotonicity_violations: u64,
    /// Static-mode periods with `d̃` outside `[1, max(2d, 1)]`.
    pub sandwich_violations: u64,
    pub sandwich_checks: u64,
    pub free_slot_computations: u64,
    pub free_slot_shortfalls: u64,
    pub min_free: Option<usize>,
    pub empty_free_sets: u64,
    pub resets: u64,
    pub full_windows: u64,
    pub full_window_resets: u64,
    pub interval_report: Option<IntervalReport>,
    pub floor_violations: Vec<NodeId>,
    pub hardness_error: Option<String>,
    pub colors_used: Option<usize>,
    #[serde(skip)]
    pub final_snapshot: Option<ColoringSnapshot>,
    #[serde(skip)]
    pub final_labels: Option<GoodBadLabeling>,
    #[serde(skip)]
    pub trace: Vec<TraceRecord>,
}

impl JjOutcome {
    /// Names of failed validators; empty when the run is clean.
    pub fn failures(&self, static_mode: bool) -> Vec<String> {
        let mut f = Vec::new();
        if self.convergence.is_none() {
            f.push("not all nodes good within the period cap".to_string());
        }
        if static_mode && self.last_event_period.is_none() && self.monotonicity_violations > 0 {
            f.push(format!("{} good-to-bad transitions", self.monotonicity_violations));
        }
        if static_mode && self.sandwich_violations > 0 {
            f.push(format!("{} degree-estimate bound violations", self.sandwich_violations));
        }
        if let Some(r) = &self.interval_report {
            if !r.is_valid() {
                f.push(format!("{} overlapping intervals", r.violations.len()));
            }
        }
        if !self.floor_violations.is_empty() {
            f.push(format!("{} intervals below the floor", self.floor_violations.len()));
        }
        if let Some(e) = &self.hardness_error {
            f.push(format!("derived vertex coloring: {e}"));
        }
        f
    }
}

fn jj_snapshot(e: &DiscreteEngine<JitterJump>) -> ColoringSnapshot {
    let q = e.slots();
    let nodes = (0..e.node_count())
        .map(|v| {
            if !e.topology().is_alive(v) || !e.is_awake(v) {
                return None;
            }
            let proto = &e.node(v)?.proto;
            Some(NodeColoring {
                phase: proto.phase().map(|p| p as f64),
                offset: e.clock_offset(v).unwrap_or(0) as f64,
                interval: proto.interval() as f64,
                colored: proto.colored() && !proto.in_first_period(),
            })
        })
        .collect();
    ColoringSnapshot {
        period: q as f64,
        nodes,
    }
}

pub fn run_jitterjump(run: &JjRun) -> Result<JjOutcome, CampaignError> {
    let q = run.params.slots;
    let params = run.params;
    let static_mode = params.window.is_none();
    let mut engine = DiscreteEngine::new(run.topo.clone(), q, &run.wake, run.seed, |_| {
        JitterJump::new(params)
    })
    .with_events(
        run.events.clone(),
        Some(Box::new(move || JitterJump::new(params))),
    );
    let last_event = run.events.iter().map(|e| e.at_period).max();
    let mut out = JjOutcome {
        slots: q,
        last_event_period: last_event,
        ..JjOutcome::default()
    };
    let mut prev_labels: Option<GoodBadLabeling> = None;
    let mut converged_at: Option<u64> = None;

    for period in 1..=run.max_periods {
        engine.run_period()?;
        out.periods = period;
        let snap = jj_snapshot(&engine);
        let topo = engine.topology();
        let labels = classify_good_bad(&snap, topo);

        let event_between = run.events.iter().any(|e| e.at_period == period - 1);
        if let (Some(prev), false) = (&prev_labels, event_between) {
            for v in topo.alive_nodes() {
                if prev.is_good(v) && !labels.is_good(v) {
                    out.monotonicity_violations += 1;
                }
            }
        }

        if static_mode {
            for v in topo.alive_nodes() {
                let Some(rt) = engine.node(v) else { continue };
                if !engine.is_awake(v) || rt.proto.in_first_period() {
                    continue;
                }
                out.sandwich_checks += 1;
                let d = rt.proto.d_tilde() as usize;
                if d < 1 || d > (2 * topo.degree(v)).max(1) {
                    out.sandwich_violations += 1;
                }
            }
        }

        if run.record_trace {
            for v in topo.alive_nodes() {
                let (Some(rt), Some(c)) = (engine.node(v), snap.nodes[v]) else {
                    continue;
                };
                let p = &rt.proto;
                let running = !p.in_first_period();
                out.trace.push(TraceRecord {
                    period,
                    node: v,
                    phase: c.global_phase(snap.period).map(|g| Num::Int(g as i64)),
                    jitter: running.then_some(p.jitter()),
                    interval: running.then_some(Num::Int(p.interval())),
                    colored: c.colored,
                    label: labels.get(v),
                    beeps_heard: p.diagnostics().last_count as u64,
                    d_tilde: Some(p.d_tilde()),
                });
            }
        }

        let after_events = last_event.is_none_or(|l| period > l);
        let all_awake = topo.alive_nodes().all(|v| engine.is_awake(v));
        if converged_at.is_none() && after_events && all_awake && labels.all_good(topo) {
            converged_at = Some(period);
        }
        prev_labels = Some(labels);
        if let Some(c) = converged_at {
            if period >= c + run.settle_periods {
                break;
            }
        }
    }
    out.convergence = converged_at;

    for v in 0..engine.node_count() {
        let Some(rt) = engine.node(v) else { continue };
        let d = rt.proto.diagnostics();
        out.free_slot_computations += d.free_slot_computations;
        out.free_slot_shortfalls += d.free_slot_shortfalls;
        out.empty_free_sets += d.empty_free_sets;
        out.resets += d.resets;
        out.full_windows += d.full_windows;
        out.full_window_resets += d.full_window_resets;
        if let Some(m) = d.min_free {
            out.min_free = Some(out.min_free.map_or(m, |x| x.min(m)));
        }
    }

    let snap = jj_snapshot(&engine);
    let topo = engine.topology();
    let labels = classify_good_bad(&snap, topo);
    if labels.all_good(topo) {
        out.interval_report = Some(validate_interval_coloring(&snap, topo, params.eta * q as f64));
        // Two beeps per neighbor per period in dynamic mode double the ceiling
        // on the degree estimate.
        let per_neighbor = if static_mode { 2 } else { 4 };
        out.floor_violations = interval_floor_violations(&snap, topo, params.eta, q, per_neighbor);
        match hardness_reduction(&snap, topo) {
            Ok(c) => out.colors_used = Some(c.distinct),
            Err(e) => out.hardness_error = Some(e.to_string()),
        }
    }
    out.final_snapshot = Some(snap);
    out.final_labels = Some(labels);
    Ok(out)
}

/// Everything one BeepFirst execution needs.
#[derive(Debug, Clone)]
pub struct BfRun {
    pub topo: Topology,
    pub period: f64,
    pub epsilon: f64,
    pub adaptive_interval: bool,
    pub wake: Vec<f64>,
    pub seed: u64,
    /// Periods simulated past the last wake.
    pub periods_after_wake: u64,
    pub record_trace: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct BfOutcome {
    /// Per node, periods from wake to the first beep.
    pub convergence: Vec<Option<f64>>,
    pub max_convergence: Option<f64>,
    pub unstable_nodes: usize,
    pub search_overruns: u64,
    /// Searches that took a full period or longer.
    pub long_searches: u64,
    pub ties: TieStats,
    /// Adjacent stable nodes with bit-identical global phases.
    pub phase_ties: u64,
    pub interval_report: Option<IntervalReport>,
    /// Stable neighbors within the node's own interval of its phase.
    pub separation_violations: u64,
    /// Nodes whose interval differs from the degree formula.
    pub interval_mismatches: u64,
    #[serde(skip)]
    pub final_snapshot: Option<ColoringSnapshot>,
    #[serde(skip)]
    pub trace: Vec<TraceRecord>,
}

impl BfOutcome {
    pub fn failures(&self) -> Vec<String> {
        let mut f = Vec::new();
        if self.unstable_nodes > 0 {
            f.push(format!("{} nodes never stabilized", self.unstable_nodes));
        }
        if self.max_convergence.is_some_and(|c| c > 3.0) {
            f.push("a node took more than 3 periods to stabilize".into());
        }
        if self.search_overruns + self.long_searches > 0 {
            f.push(format!("{} searches overran a period", self.search_overruns + self.long_searches));
        }
        if self.ties.adjacent > 0 || self.phase_ties > 0 {
            f.push("neighbors beeped at the same instant".into());
        }
        if let Some(r) = &self.interval_report {
            if !r.is_valid() {
                f.push(format!("{} overlapping intervals", r.violations.len()));
            }
        }
        if self.separation_violations > 0 {
            f.push(format!("{} neighbors inside an interval", self.separation_violations));
        }
        if self.interval_mismatches > 0 {
            f.push(format!("{} intervals off the formula", self.interval_mismatches));
        }
        f
    }
}

fn bf_snapshot(e: &ContinuousEngine<BeepFirst>) -> ColoringSnapshot {
    let t = e.period();
    let nodes = e
        .nodes()
        .iter()
        .map(|n| {
            if n.wake > e.now() {
                return None;
            }
            let stable = n.proto.is_stable() && n.last_beep.is_some();
            Some(NodeColoring {
                phase: n.last_beep.filter(|_| stable).map(|b| b.wrap(t)),
                offset: 0.0,
                interval: n.proto.interval(),
                colored: stable,
            })
        })
        .collect();
    ColoringSnapshot { period: t, nodes }
}

pub fn run_beepfirst(run: &BfRun) -> Result<BfOutcome, CampaignError> {
    let t = run.period;
    let topo = &run.topo;
    let mut engine = ContinuousEngine::new(topo.clone(), t, &run.wake, run.seed, |v| {
        BeepFirst::new(BfParams {
            period: t,
            epsilon: run.epsilon,
            degree: topo.degree(v),
            max_degree: topo.closed_max_degree(v),
            adaptive_interval: run.adaptive_interval,
        })
    });
    let last_wake = run.wake.iter().copied().fold(0.0, f64::max);
    let horizon = (last_wake / t).ceil() as u64 + run.periods_after_wake;
    let mut out = BfOutcome::default();
    let mut heard_before = vec![0u64; topo.node_count()];
    for k in 1..=horizon {
        engine.run_until(k as f64 * t);
        if run.record_trace {
            let snap = bf_snapshot(&engine);
            let labels = classify_separated(&snap, topo);
            for v in topo.alive_nodes() {
                let Some(c) = snap.nodes[v] else { continue };
                let node = engine.node(v);
                out.trace.push(TraceRecord {
                    period: k,
                    node: v,
                    phase: c.phase.map(Num::Real),
                    jitter: None,
                    interval: Some(Num::Real(c.interval)),
                    colored: c.colored,
                    label: labels.get(v),
                    beeps_heard: node.heard_count - heard_before[v],
                    d_tilde: None,
                });
                heard_before[v] = node.heard_count;
            }
        }
    }

    for n in engine.nodes() {
        let conv = n.first_beep.map(|b| (b - n.wake) / t);
        out.convergence.push(conv);
        match conv {
            Some(c) => out.max_convergence = Some(out.max_convergence.map_or(c, |m: f64| m.max(c))),
            None => out.unstable_nodes += 1,
        }
        if n.proto.violation().is_some() {
            out.search_overruns += 1;
        }
        if n.proto.search_len().is_some_and(|s| s >= t) {
            out.long_searches += 1;
        }
        if !run.adaptive_interval && n.proto.interval() != n.proto.params().interval() {
            out.interval_mismatches += 1;
        }
    }
    out.ties = engine.ties();

    let snap = bf_snapshot(&engine);
    for (u, v) in topo.edges() {
        if let (Some(pu), Some(pv)) = (snap.global_phase(u), snap.global_phase(v)) {
            if pu == pv {
                out.phase_ties += 1;
            }
        }
    }
    for v in topo.alive_nodes() {
        let (Some(pv), Some(c)) = (snap.global_phase(v), snap.nodes[v]) else {
            continue;
        };
        for &u in topo.neighbors(v) {
            if snap
                .global_phase(u)
                .is_some_and(|pu| circular_distance(pu, pv, t) <= c.interval)
            {
                out.separation_violations += 1;
            }
        }
    }
    out.interval_report = Some(validate_interval_coloring(&snap, topo, (1.0 - run.epsilon) * t / 2.0));
    out.final_snapshot = Some(snap);
    Ok(out)
}

/// Where a trial's graph comes from.
#[derive(Debug, Clone)]
pub enum TopologySource {
    /// Generated afresh for every trial from the trial seed.
    Generated(GraphSpec),
    Fixed(Topology),
}

impl TopologySource {
    pub fn build(&self, trial_seed: u64) -> Result<Topology, TopologyError> {
        match self {
            TopologySource::Generated(spec) => {
                spec.build(&mut stream(trial_seed, 0, StreamPurpose::Topology))
            }
            TopologySource::Fixed(t) => Ok(t.clone()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ProtocolKind {
    BeepFirst { adaptive_interval: bool },
    JitterJump { dynamic: bool },
}

#[derive(Debug, Clone)]
pub struct CampaignEntry {
    pub config: SimConfig,
    pub topology: TopologySource,
    pub protocol: ProtocolKind,
    pub repeats: u64,
    pub events: Vec<DynamicEvent>,
    pub settle_periods: u64,
    pub record_trace: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct TrialSummary {
    pub trial: u64,
    pub nodes: usize,
    pub max_degree: usize,
    /// `Q` for discrete runs, `T` for continuous ones.
    pub period: f64,
    /// Periods until all nodes were good (discrete) or the slowest node
    /// stabilized (continuous).
    pub convergence: Option<f64>,
    /// Periods from the last topology event to convergence.
    pub restabilization: Option<f64>,
    pub failures: Vec<String>,
    pub tie_collisions: u64,
    pub free_slot_shortfalls: u64,
    pub resets: u64,
    #[serde(skip)]
    pub trace: Vec<TraceRecord>,
}

#[derive(Debug, Clone, Serialize)]
pub struct EntrySummary {
    pub protocol: ProtocolKind,
    pub trials: Vec<TrialSummary>,
    pub max_convergence: Option<f64>,
    pub median_convergence: Option<f64>,
    /// `C` in `convergence ≈ C·ln n`, least squares through the origin.
    pub fitted_c: Option<f64>,
    pub passed: bool,
}

pub fn trial_seed(master: u64, trial: u64) -> u64 {
    derive_seed(master, trial, StreamPurpose::Trial)
}

fn run_trial(entry: &CampaignEntry, trial: u64) -> Result<TrialSummary, CampaignError> {
    let cfg = &entry.config;
    let seed = trial_seed(cfg.master_seed, trial);
    let topo = entry.topology.build(seed)?;
    let n = topo.node_count();
    let delta = max_degree_over_events(&topo, &entry.events)?;
    match entry.protocol {
        ProtocolKind::JitterJump { dynamic } => {
            cfg.validate_jitterjump()?;
            let q = cfg.slots_per_period(delta);
            let mut params = JjParams::new(cfg.eta, q as Slot);
            if dynamic {
                params = params.dynamic(cfg.window_for(n));
            }
            let run = JjRun {
                wake: cfg.wakeup.resolve_slots(n, q, seed),
                topo,
                params,
                seed,
                events: entry.events.clone(),
                max_periods: cfg.max_periods,
                settle_periods: entry.settle_periods,
                record_trace: entry.record_trace,
            };
            let out = run_jitterjump(&run)?;
            Ok(TrialSummary {
                trial,
                nodes: n,
                max_degree: delta,
                period: q as f64,
                convergence: out.convergence.map(|c| c as f64),
                restabilization: out
                    .convergence
                    .zip(out.last_event_period)
                    .map(|(c, l)| c as f64 - l as f64),
                failures: out.failures(!dynamic),
                tie_collisions: 0,
                free_slot_shortfalls: out.free_slot_shortfalls,
                resets: out.resets,
                trace: out.trace,
            })
        }
        ProtocolKind::BeepFirst { adaptive_interval } => {
            cfg.validate_beepfirst()?;
            if !entry.events.is_empty() {
                return Err(CampaignError::Invalid(
                    "beepfirst does not support topology events".into(),
                ));
            }
            let t = match cfg.model {
                Model::Continuous { period } => period,
                Model::Discrete { .. } => 1.0,
            };
            let run = BfRun {
                wake: cfg.wakeup.resolve_times(n, t, seed),
                topo,
                period: t,
                epsilon: cfg.epsilon,
                adaptive_interval,
                seed,
                periods_after_wake: cfg.max_periods.max(4),
                record_trace: entry.record_trace,
            };
            let out = run_beepfirst(&run)?;
            Ok(TrialSummary {
                trial,
                nodes: n,
                max_degree: delta,
                period: t,
                convergence: out.max_convergence,
                restabilization: None,
                failures: out.failures(),
                tie_collisions: out.ties.simultaneous,
                free_slot_shortfalls: 0,
                resets: 0,
                trace: out.trace,
            })
        }
    }
}

/// Least-squares `C` for `y ≈ C·ln n` through the origin.
pub fn fit_log_constant(points: &[(usize, f64)]) -> Option<f64> {
    let (num, den) = points
        .iter()
        .filter(|(n, _)| *n >= 2)
        .fold((0.0, 0.0), |(a, b), &(n, y)| {
            let l = (n as f64).ln();
            (a + y * l, b + l * l)
        });
    (den > 0.0).then(|| num / den)
}

/// Ordinary least squares of `y` on `ln n`: `(slope, intercept)`.
pub fn log_regression(points: &[(usize, f64)]) -> Option<(f64, f64)> {
    let k = points.len() as f64;
    if points.len() < 2 {
        return None;
    }
    let xs: Vec<f64> = points.iter().map(|(n, _)| (*n as f64).ln()).collect();
    let mx = xs.iter().sum::<f64>() / k;
    let my = points.iter().map(|p| p.1).sum::<f64>() / k;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = xs.iter().zip(points).map(|(x, p)| (x - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    Some((slope, my - slope * mx))
}

pub fn median(values: &mut [f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    values.sort_by(f64::total_cmp);
    let m = values.len() / 2;
    Some(if values.len() % 2 == 1 {
        values[m]
    } else {
        (values[m - 1] + values[m]) / 2.0
    })
}

/// Runs every trial of an entry in parallel; results come back in trial order.
pub fn run_entry(entry: &CampaignEntry) -> Result<EntrySummary, CampaignError> {
    let trials: Vec<TrialSummary> = (0..entry.repeats)
        .into_par_iter()
        .map(|t| run_trial(entry, t))
        .collect::<Result<_, _>>()?;
    let mut conv: Vec<f64> = trials.iter().filter_map(|t| t.convergence).collect();
    let points: Vec<(usize, f64)> = trials
        .iter()
        .filter_map(|t| t.convergence.map(|c| (t.nodes, c)))
        .collect();
    let passed = trials.iter().all(|t| t.failures.is_empty());
    Ok(EntrySummary {
        protocol: entry.protocol,
        max_convergence: conv.iter().copied().reduce(f64::max),
        median_convergence: median(&mut conv),
        fitted_c: fit_log_constant(&points),
        passed,
        trials,
    })
}

/// A list of independent entries.
#[derive(Debug, Clone, Default)]
pub struct Campaign {
    pub entries: Vec<CampaignEntry>,
}

impl Campaign {
    pub fn run(&self) -> Result<Vec<EntrySummary>, CampaignError> {
        self.entries.iter().map(run_entry).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::WakeupSchedule;

    fn entry(protocol: ProtocolKind, graph: &str, repeats: u64) -> CampaignEntry {
        let model = match protocol {
            ProtocolKind::BeepFirst { .. } => Model::Continuous { period: 1.0 },
            ProtocolKind::JitterJump { .. } => Model::Discrete { slots: None },
        };
        CampaignEntry {
            config: SimConfig {
                model,
                master_seed: 17,
                max_periods: 200,
                ..SimConfig::default()
            },
            topology: TopologySource::Generated(graph.parse().unwrap()),
            protocol,
            repeats,
            events: Vec::new(),
            settle_periods: 3,
            record_trace: true,
        }
    }

    #[test]
    fn jitterjump_entry_passes() {
        let s = run_entry(&entry(ProtocolKind::JitterJump { dynamic: false }, "regular:16:4", 4)).unwrap();
        assert!(s.passed, "{:?}", s.trials.iter().map(|t| &t.failures).collect::<Vec<_>>());
        assert_eq!(s.trials.len(), 4);
        assert!(s.fitted_c.unwrap() > 0.0);
    }

    #[test]
    fn beepfirst_entry_passes() {
        let s = run_entry(&entry(ProtocolKind::BeepFirst { adaptive_interval: false }, "gnp:32:0.2", 4)).unwrap();
        assert!(s.passed, "{:?}", s.trials.iter().map(|t| &t.failures).collect::<Vec<_>>());
        assert!(s.max_convergence.unwrap() <= 3.0);
    }

    #[test]
    fn csv_is_reproducible() {
        let e = entry(ProtocolKind::JitterJump { dynamic: false }, "gnp:24:0.2", 2);
        let csv = |s: &EntrySummary| {
            let mut buf = Vec::new();
            write_trace_csv(&mut buf, &s.trials[1].trace).unwrap();
            buf
        };
        let a = csv(&run_entry(&e).unwrap());
        let b = csv(&run_entry(&e).unwrap());
        assert_eq!(a, b);
        assert!(String::from_utf8(a).unwrap().starts_with(CSV_HEADER));
    }

    #[test]
    fn staggered_wakeup_still_converges() {
        let mut e = entry(ProtocolKind::JitterJump { dynamic: false }, "gnp:24:0.2", 2);
        e.config.wakeup = WakeupSchedule::Uniform { periods: 3.0 };
        let s = run_entry(&e).unwrap();
        assert!(s.trials.iter().all(|t| t.convergence.is_some()));
    }

    #[test]
    fn kappa_below_bound_is_a_config_error() {
        let mut e = entry(ProtocolKind::JitterJump { dynamic: false }, "star:5", 1);
        e.config.kappa = 8.0;
        assert!(matches!(run_entry(&e), Err(CampaignError::Config(_))));
    }

    #[test]
    fn fits() {
        let pts = [(16, 2.0 * 16f64.ln()), (256, 2.0 * 256f64.ln())];
        approx::assert_relative_eq!(fit_log_constant(&pts).unwrap(), 2.0);
        let (slope, icpt) = log_regression(&[(16, 1.0 + 16f64.ln()), (64, 1.0 + 64f64.ln())]).unwrap();
        approx::assert_relative_eq!(slope, 1.0, epsilon = 1e-12);
        approx::assert_relative_eq!(icpt, 1.0, epsilon = 1e-12);
        assert_eq!(median(&mut [3.0, 1.0, 2.0]), Some(2.0));
    }
}
