//! Global checks on a snapshot of node phases and intervals.

use serde::Serialize;
use thiserror::Error;

use crate::model::{circular_distance, on_arc, PhaseValue};
use crate::topology::{NodeId, Topology};

/// One node's output at snapshot time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NodeColoring {
    /// Local phase `p_v`; `None` if the node has not picked one yet.
    pub phase: Option<f64>,
    /// Clock offset `Θ_v`.
    pub offset: f64,
    pub interval: f64,
    pub colored: bool,
}

impl NodeColoring {
    pub fn global_phase(&self, tau: f64) -> Option<f64> {
        self.phase.map(|p| (p + self.offset).wrap(tau))
    }
}

/// Per-node outputs (`None` for absent or sleeping nodes) on a period `τ`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ColoringSnapshot {
    pub period: f64,
    pub nodes: Vec<Option<NodeColoring>>,
}

impl ColoringSnapshot {
    pub fn global_phase(&self, v: NodeId) -> Option<f64> {
        self.nodes
            .get(v)
            .copied()
            .flatten()
            .and_then(|c| c.global_phase(self.period))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IntervalReport {
    pub checked_edges: usize,
    /// Edges whose intervals overlap.
    pub violations: Vec<(NodeId, NodeId)>,
    /// Edges skipped because an endpoint has no phase.
    pub skipped_edges: usize,
    /// `min_v I_v·(2·d_max(v) + 1) / unit` over nodes with a phase.
    pub min_normalized: Option<f64>,
}

impl IntervalReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Two closed arcs `[s, e]` on the circle intersect iff one contains the
/// other's start.
fn arcs_intersect(a: (f64, f64), b: (f64, f64), tau: f64) -> bool {
    on_arc(a.0, b.0, b.1, tau) || on_arc(b.0, a.0, a.1, tau)
}

/// Checks `[p̂_u - I_u, p̂_u]` and `[p̂_v - I_v, p̂_v]` are disjoint for every
/// edge, and reports the smallest interval normalized by `unit / (2·d_max + 1)`.
pub fn validate_interval_coloring(
    snap: &ColoringSnapshot,
    topo: &Topology,
    unit: f64,
) -> IntervalReport {
    let tau = snap.period;
    let arc = |v: NodeId| {
        let c = snap.nodes.get(v).copied().flatten()?;
        let g = c.global_phase(tau)?;
        if c.interval >= tau {
            // Covers the whole circle; start the arc just after its end.
            return Some((g, g));
        }
        Some(((g - c.interval).wrap(tau), g))
    };
    let mut report = IntervalReport {
        checked_edges: 0,
        violations: Vec::new(),
        skipped_edges: 0,
        min_normalized: None,
    };
    for (u, v) in topo.edges() {
        match (arc(u), arc(v)) {
            (Some(a), Some(b)) => {
                report.checked_edges += 1;
                if arcs_intersect(a, b, tau) {
                    report.violations.push((u, v));
                }
            }
            _ => report.skipped_edges += 1,
        }
    }
    for v in topo.alive_nodes() {
        let Some(c) = snap.nodes.get(v).copied().flatten() else {
            continue;
        };
        if c.phase.is_none() {
            continue;
        }
        let norm = c.interval * (2 * topo.closed_max_degree(v) + 1) as f64 / unit;
        report.min_normalized = Some(report.min_normalized.map_or(norm, |m: f64| m.min(norm)));
    }
    report
}

/// Nodes whose interval falls below `η·Q / (k·d_max(v) + 1)`, tested
/// without division as `I_v·(k·d_max + 1) < η·Q`. `k` bounds the beeps a
/// node hears per neighbor and period: 2 in static mode, 4 in dynamic mode.
pub fn interval_floor_violations(
    snap: &ColoringSnapshot,
    topo: &Topology,
    eta: f64,
    slots: i64,
    beeps_per_neighbor: i64,
) -> Vec<NodeId> {
    let target = eta * slots as f64;
    topo.alive_nodes()
        .filter(|&v| {
            let Some(c) = snap.nodes.get(v).copied().flatten() else {
                return false;
            };
            let lhs = c.interval as i64 * (beeps_per_neighbor * topo.closed_max_degree(v) as i64 + 1);
            (lhs as f64) < target
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Label {
    Good,
    BadColored,
    BadUncolored,
}

impl Label {
    pub fn as_str(self) -> &'static str {
        match self {
            Label::Good => "good",
            Label::BadColored => "bad-colored",
            Label::BadUncolored => "bad-uncolored",
        }
    }
}

/// Labels per node; `None` for absent or sleeping nodes.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GoodBadLabeling(pub Vec<Option<Label>>);

impl GoodBadLabeling {
    pub fn get(&self, v: NodeId) -> Option<Label> {
        self.0.get(v).copied().flatten()
    }

    pub fn is_good(&self, v: NodeId) -> bool {
        self.get(v) == Some(Label::Good)
    }

    pub fn good_count(&self) -> usize {
        self.0.iter().filter(|l| **l == Some(Label::Good)).count()
    }

    pub fn all_good(&self, topo: &Topology) -> bool {
        topo.alive_nodes().all(|v| self.is_good(v))
    }
}

fn classify_by(
    snap: &ColoringSnapshot,
    topo: &Topology,
    too_close: impl Fn(NodeId, f64) -> bool,
) -> GoodBadLabeling {
    let labels = (0..snap.nodes.len())
        .map(|v| {
            let c = snap.nodes[v]?;
            if !topo.is_alive(v) {
                return None;
            }
            let Some(pv) = c.global_phase(snap.period).filter(|_| c.colored) else {
                return Some(Label::BadUncolored);
            };
            let clash = topo.neighbors(v).iter().any(|&u| {
                snap.global_phase(u)
                    .is_some_and(|pu| too_close(v, circular_distance(pu, pv, snap.period)))
            });
            Some(if clash { Label::BadColored } else { Label::Good })
        })
        .collect();
    GoodBadLabeling(labels)
}

/// Good iff colored with no neighbor's nominal phase within one slot.
pub fn classify_good_bad(snap: &ColoringSnapshot, topo: &Topology) -> GoodBadLabeling {
    classify_by(snap, topo, |_, dist| dist <= 1.0)
}

/// Good iff colored with no neighbor's phase within the node's own interval.
pub fn classify_separated(snap: &ColoringSnapshot, topo: &Topology) -> GoodBadLabeling {
    classify_by(snap, topo, |v, dist| {
        dist <= snap.nodes[v].map_or(0.0, |c| c.interval)
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VertexColoring {
    pub colors: Vec<Option<i64>>,
    pub distinct: usize,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum HardnessError {
    #[error("nodes {0} and {1} share color {2}")]
    Improper(NodeId, NodeId, i64),
    #[error("node {0} has no phase")]
    Unassigned(NodeId),
    #[error("{used} colors exceed the {limit} available")]
    TooManyColors { used: usize, limit: usize },
}

/// Vertex coloring `c_v = (p_v + Θ_v) mod Q` derived from an interval
/// coloring; fails if it is not proper or uses more than `Q` colors.
pub fn hardness_reduction(
    snap: &ColoringSnapshot,
    topo: &Topology,
) -> Result<VertexColoring, HardnessError> {
    let q = snap.period.round() as i64;
    let mut colors = vec![None; snap.nodes.len()];
    for v in topo.alive_nodes() {
        let c = snap
            .nodes
            .get(v)
            .copied()
            .flatten()
            .and_then(|c| c.phase.map(|p| (p.round() as i64 + c.offset.round() as i64).rem_euclid(q)))
            .ok_or(HardnessError::Unassigned(v))?;
        colors[v] = Some(c);
    }
    for (u, v) in topo.edges() {
        if colors[u] == colors[v] {
            return Err(HardnessError::Improper(u, v, colors[u].unwrap_or(-1)));
        }
    }
    let mut used: Vec<i64> = colors.iter().flatten().copied().collect();
    used.sort_unstable();
    used.dedup();
    if used.len() > q as usize {
        return Err(HardnessError::TooManyColors {
            used: used.len(),
            limit: q as usize,
        });
    }
    Ok(VertexColoring {
        colors,
        distinct: used.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn node(phase: f64, interval: f64) -> Option<NodeColoring> {
        Some(NodeColoring {
            phase: Some(phase),
            offset: 0.0,
            interval,
            colored: true,
        })
    }

    fn edge() -> Topology {
        Topology::from_edges(2, [(0, 1)]).unwrap()
    }

    #[test]
    fn disjoint_intervals_pass() {
        let snap = ColoringSnapshot {
            period: 32.0,
            nodes: vec![node(2.0, 3.0), node(10.0, 3.0)],
        };
        assert!(validate_interval_coloring(&snap, &edge(), 1.0).is_valid());
    }

    #[test]
    fn overlapping_intervals_fail() {
        let snap = ColoringSnapshot {
            period: 32.0,
            nodes: vec![node(5.0, 3.0), node(6.0, 3.0)],
        };
        let r = validate_interval_coloring(&snap, &edge(), 1.0);
        assert_eq!(r.violations, vec![(0, 1)]);
    }

    #[test]
    fn wrapping_interval_overlap() {
        let snap = ColoringSnapshot {
            period: 32.0,
            nodes: vec![node(1.0, 3.0), node(30.0, 1.0)],
        };
        assert!(!validate_interval_coloring(&snap, &edge(), 1.0).is_valid());
    }

    #[test]
    fn labels() {
        let topo = Topology::from_edges(3, [(0, 1), (1, 2)]).unwrap();
        let mut snap = ColoringSnapshot {
            period: 32.0,
            nodes: vec![node(0.0, 1.0), node(2.0, 1.0), node(3.0, 1.0)],
        };
        let l = classify_good_bad(&snap, &topo);
        assert_eq!(l.get(0), Some(Label::Good));
        assert_eq!(l.get(1), Some(Label::BadColored));
        snap.nodes[0].as_mut().unwrap().colored = false;
        assert_eq!(classify_good_bad(&snap, &topo).get(0), Some(Label::BadUncolored));
    }

    #[test]
    fn wrap_aware_label_distance() {
        let snap = ColoringSnapshot {
            period: 32.0,
            nodes: vec![node(0.0, 1.0), node(31.0, 1.0)],
        };
        assert_eq!(classify_good_bad(&snap, &edge()).get(0), Some(Label::BadColored));
    }

    #[test]
    fn hardness_single_node() {
        let snap = ColoringSnapshot {
            period: 16.0,
            nodes: vec![Some(NodeColoring {
                phase: Some(0.0),
                offset: 7.0,
                interval: 1.0,
                colored: true,
            })],
        };
        let c = hardness_reduction(&snap, &Topology::empty(1)).unwrap();
        assert_eq!(c.colors, vec![Some(7)]);
    }

    #[test]
    fn hardness_detects_clash() {
        let snap = ColoringSnapshot {
            period: 16.0,
            nodes: vec![
                node(3.0, 1.0),
                Some(NodeColoring {
                    phase: Some(1.0),
                    offset: 2.0,
                    interval: 1.0,
                    colored: true,
                }),
            ],
        };
        assert_eq!(
            hardness_reduction(&snap, &edge()),
            Err(HardnessError::Improper(0, 1, 3))
        );
    }

    #[test]
    fn floor_check_is_exact() {
        // eta*Q = 16; star hub has d_max 3 so 2*3+1 = 7; 7*2 = 14 < 16, 7*3 = 21 >= 16.
        let topo = crate::topology::star(4);
        let mut snap = ColoringSnapshot {
            period: 256.0,
            nodes: vec![node(0.0, 2.0), node(50.0, 3.0), node(100.0, 3.0), node(150.0, 3.0)],
        };
        assert_eq!(interval_floor_violations(&snap, &topo, 1.0 / 16.0, 256, 2), vec![0]);
        snap.nodes[0].as_mut().unwrap().interval = 3.0;
        assert!(interval_floor_violations(&snap, &topo, 1.0 / 16.0, 256, 2).is_empty());
    }

    proptest! {
        /// Arc disjointness agrees with a slot-by-slot overlap count.
        #[test]
        fn arc_test_matches_enumeration(q in 4i64..40, pa in 0i64..40, pb in 0i64..40, ia in 0i64..40, ib in 0i64..40) {
            let (pa, pb) = (pa % q, pb % q);
            let (ia, ib) = (ia % q, ib % q);
            let slots = |p: i64, i: i64| (0..=i).map(move |k| (p - k).rem_euclid(q)).collect::<Vec<_>>();
            let a = slots(pa, ia);
            let overlap = slots(pb, ib).iter().any(|s| a.contains(s));
            let snap = ColoringSnapshot {
                period: q as f64,
                nodes: vec![node(pa as f64, ia as f64), node(pb as f64, ib as f64)],
            };
            let r = validate_interval_coloring(&snap, &edge(), 1.0);
            prop_assert_eq!(!r.is_valid(), overlap);
        }
    }
}
