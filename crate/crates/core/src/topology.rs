//! Undirected communication graphs, the built-in generators, and the
//! dynamic-event schedule applied at period boundaries.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use thiserror::Error;

use crate::rng::NodeRng;

pub type NodeId = usize;

#[derive(Debug, Error, PartialEq)]
pub enum TopologyError {
    #[error("self-loop on node {0}")]
    SelfLoop(NodeId),
    #[error("node {0} does not exist")]
    UnknownNode(NodeId),
    #[error("edge {0}-{1} does not exist")]
    UnknownEdge(NodeId, NodeId),
    #[error("edge {0}-{1} already exists")]
    DuplicateEdge(NodeId, NodeId),
    #[error("new node id {got} does not match next free id {expected}")]
    NodeIdMismatch { expected: NodeId, got: NodeId },
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("generator: {0}")]
    Generator(String),
}

/// Undirected simple graph whose node set may grow and shrink.
///
/// Removed nodes keep their id (ids are never reused) but lose all edges and
/// report `is_alive == false`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Topology {
    adjacency: Vec<Vec<NodeId>>,
    alive: Vec<bool>,
}

impl Topology {
    pub fn empty(n: usize) -> Self {
        Topology {
            adjacency: vec![Vec::new(); n],
            alive: vec![true; n],
        }
    }

    pub fn from_edges(
        n: usize,
        edges: impl IntoIterator<Item = (NodeId, NodeId)>,
    ) -> Result<Self, TopologyError> {
        let mut topo = Topology::empty(n);
        for (u, v) in edges {
            topo.add_edge(u, v)?;
        }
        Ok(topo)
    }

    /// Number of node ids ever allocated (alive or not).
    pub fn node_count(&self) -> usize {
        self.adjacency.len()
    }

    pub fn alive_count(&self) -> usize {
        self.alive.iter().filter(|&&a| a).count()
    }

    pub fn is_alive(&self, v: NodeId) -> bool {
        self.alive.get(v).copied().unwrap_or(false)
    }

    pub fn alive_nodes(&self) -> impl Iterator<Item = NodeId> + '_ {
        (0..self.node_count()).filter(|&v| self.alive[v])
    }

    pub fn neighbors(&self, v: NodeId) -> &[NodeId] {
        &self.adjacency[v]
    }

    pub fn degree(&self, v: NodeId) -> usize {
        self.adjacency[v].len()
    }

    /// Δ, the maximum degree.
    pub fn max_degree(&self) -> usize {
        self.adjacency.iter().map(Vec::len).max().unwrap_or(0)
    }

    /// `d^max(v)`: the largest degree in the closed neighborhood of `v`.
    pub fn closed_max_degree(&self, v: NodeId) -> usize {
        self.adjacency[v]
            .iter()
            .map(|&u| self.degree(u))
            .chain(std::iter::once(self.degree(v)))
            .max()
            .unwrap_or(0)
    }

    /// `N[v]`, sorted.
    pub fn closed_neighborhood(&self, v: NodeId) -> Vec<NodeId> {
        let mut out = self.adjacency[v].clone();
        let idx = out.partition_point(|&u| u < v);
        out.insert(idx, v);
        out
    }

    pub fn has_edge(&self, u: NodeId, v: NodeId) -> bool {
        u < self.node_count() && self.adjacency[u].binary_search(&v).is_ok()
    }

    pub fn edge_count(&self) -> usize {
        self.adjacency.iter().map(Vec::len).sum::<usize>() / 2
    }

    /// Edges as `(u, v)` with `u < v`, in lexicographic order.
    pub fn edges(&self) -> Vec<(NodeId, NodeId)> {
        let mut out = Vec::with_capacity(self.edge_count());
        for (u, adj) in self.adjacency.iter().enumerate() {
            out.extend(adj.iter().filter(|&&v| v > u).map(|&v| (u, v)));
        }
        out
    }

    fn check_node(&self, v: NodeId) -> Result<(), TopologyError> {
        if self.is_alive(v) {
            Ok(())
        } else {
            Err(TopologyError::UnknownNode(v))
        }
    }

    pub fn add_edge(&mut self, u: NodeId, v: NodeId) -> Result<(), TopologyError> {
        if u == v {
            return Err(TopologyError::SelfLoop(u));
        }
        self.check_node(u)?;
        self.check_node(v)?;
        if self.has_edge(u, v) {
            return Err(TopologyError::DuplicateEdge(u.min(v), u.max(v)));
        }
        for (a, b) in [(u, v), (v, u)] {
            let adj = &mut self.adjacency[a];
            let idx = adj.partition_point(|&x| x < b);
            adj.insert(idx, b);
        }
        Ok(())
    }

    pub fn remove_edge(&mut self, u: NodeId, v: NodeId) -> Result<(), TopologyError> {
        self.check_node(u)?;
        self.check_node(v)?;
        if !self.has_edge(u, v) {
            return Err(TopologyError::UnknownEdge(u.min(v), u.max(v)));
        }
        self.adjacency[u].retain(|&x| x != v);
        self.adjacency[v].retain(|&x| x != u);
        Ok(())
    }

    /// Appends a node with the given neighbors; returns its id.
    pub fn add_node(&mut self, neighbors: &[NodeId]) -> Result<NodeId, TopologyError> {
        for &u in neighbors {
            self.check_node(u)?;
        }
        let id = self.node_count();
        self.adjacency.push(Vec::new());
        self.alive.push(true);
        for &u in neighbors {
            self.add_edge(id, u)?;
        }
        Ok(id)
    }

    pub fn remove_node(&mut self, v: NodeId) -> Result<(), TopologyError> {
        self.check_node(v)?;
        for u in std::mem::take(&mut self.adjacency[v]) {
            self.adjacency[u].retain(|&x| x != v);
        }
        self.alive[v] = false;
        Ok(())
    }

    /// Parses a "u v" edge list (0-based ids, `#` comments, blank lines).
    /// The node count is one past the largest id mentioned.
    pub fn parse_edge_list(text: &str) -> Result<Self, TopologyError> {
        let mut edges = Vec::new();
        let mut n = 0;
        for (i, raw) in text.lines().enumerate() {
            let line = strip_comment(raw);
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.len() != 2 {
                return Err(TopologyError::Parse {
                    line: i + 1,
                    msg: format!("expected \"u v\", got {line:?}"),
                });
            }
            let u = parse_id(fields[0], i + 1)?;
            let v = parse_id(fields[1], i + 1)?;
            n = n.max(u + 1).max(v + 1);
            edges.push((i + 1, u, v));
        }
        let mut topo = Topology::empty(n);
        for (line, u, v) in edges {
            match topo.add_edge(u, v) {
                Ok(()) | Err(TopologyError::DuplicateEdge(..)) => {}
                Err(e) => {
                    return Err(TopologyError::Parse {
                        line,
                        msg: e.to_string(),
                    })
                }
            }
        }
        Ok(topo)
    }

    pub fn to_edge_list(&self) -> String {
        self.edges()
            .into_iter()
            .map(|(u, v)| format!("{u} {v}\n"))
            .collect()
    }
}

pub(crate) fn strip_comment(raw: &str) -> &str {
    raw.split('#').next().unwrap_or("").trim()
}

fn parse_id(field: &str, line: usize) -> Result<NodeId, TopologyError> {
    field.parse().map_err(|_| TopologyError::Parse {
        line,
        msg: format!("bad node id {field:?}"),
    })
}

/// Erdős–Rényi G(n, p).
pub fn gnp(n: usize, p: f64, rng: &mut NodeRng) -> Topology {
    let mut topo = Topology::empty(n);
    for u in 0..n {
        for v in (u + 1)..n {
            if rng.gen_bool(p) {
                topo.add_edge(u, v).expect("fresh edge");
            }
        }
    }
    topo
}

/// Random `d`-regular graph: stubs are paired one edge at a time, drawing
/// only pairs that keep the graph simple, and the attempt restarts if it gets
/// stuck. Close to uniform for small `d`.
pub fn random_regular(n: usize, d: usize, rng: &mut NodeRng) -> Result<Topology, TopologyError> {
    if d >= n || (n * d) % 2 != 0 {
        return Err(TopologyError::Generator(format!(
            "no simple {d}-regular graph on {n} nodes"
        )));
    }
    'attempt: for _ in 0..1_000 {
        let mut stubs: Vec<NodeId> = (0..n).flat_map(|v| std::iter::repeat(v).take(d)).collect();
        let mut topo = Topology::empty(n);
        while !stubs.is_empty() {
            let ok = |i: usize, j: usize, t: &Topology| stubs[i] != stubs[j] && !t.has_edge(stubs[i], stubs[j]);
            let mut pick = None;
            for _ in 0..64 {
                let (i, j) = (rng.gen_range(0..stubs.len()), rng.gen_range(0..stubs.len()));
                if ok(i, j, &topo) {
                    pick = Some((i, j));
                    break;
                }
            }
            if pick.is_none() {
                let valid: Vec<(usize, usize)> = (0..stubs.len())
                    .flat_map(|i| ((i + 1)..stubs.len()).map(move |j| (i, j)))
                    .filter(|&(i, j)| ok(i, j, &topo))
                    .collect();
                if valid.is_empty() {
                    continue 'attempt;
                }
                pick = Some(valid[rng.gen_range(0..valid.len())]);
            }
            let (i, j) = pick.expect("a pair was found");
            let (i, j) = (i.max(j), i.min(j));
            let u = stubs.swap_remove(i);
            let v = stubs.swap_remove(j);
            topo.add_edge(u, v).expect("pair keeps the graph simple");
        }
        return Ok(topo);
    }
    Err(TopologyError::Generator(format!(
        "could not pair stubs for n={n}, d={d}"
    )))
}

/// Hub 0 joined to spokes `1..n`.
pub fn star(n: usize) -> Topology {
    Topology::from_edges(n, (1..n).map(|v| (0, v))).expect("star edges are valid")
}

pub fn clique(n: usize) -> Topology {
    Topology::from_edges(n, (0..n).flat_map(|u| ((u + 1)..n).map(move |v| (u, v))))
        .expect("clique edges are valid")
}

/// Ring of `k` four-node blocks `{a_i, b_i, c_i, d_i}` (ids `4i..4i+3`).
///
/// Each block carries the edges a-b, b-c, c-d, a-c, b-d, and block `i` links
/// to block `i+1 mod k` through `d_i - a_{i+1}`. In every block `b_i` and
/// `c_i` have the same closed neighborhood.
pub fn cycle_of_blocks(k: usize) -> Result<Topology, TopologyError> {
    if k < 2 {
        return Err(TopologyError::Generator(
            "cycle of blocks needs at least 2 blocks".into(),
        ));
    }
    let mut edges = Vec::with_capacity(6 * k);
    for i in 0..k {
        let (a, b, c, d) = (4 * i, 4 * i + 1, 4 * i + 2, 4 * i + 3);
        edges.extend([(a, b), (b, c), (c, d), (a, c), (b, d)]);
        edges.push((d, 4 * ((i + 1) % k)));
    }
    Topology::from_edges(4 * k, edges)
}

/// Named generator, parsed from `kind:arg[:arg]`.
#[derive(Debug, Clone, PartialEq)]
pub enum GraphSpec {
    Gnp { n: usize, p: f64 },
    Regular { n: usize, d: usize },
    Star { n: usize },
    Clique { n: usize },
    Blocks { k: usize },
}

impl GraphSpec {
    pub fn build(&self, rng: &mut NodeRng) -> Result<Topology, TopologyError> {
        match *self {
            GraphSpec::Gnp { n, p } => Ok(gnp(n, p, rng)),
            GraphSpec::Regular { n, d } => random_regular(n, d, rng),
            GraphSpec::Star { n } => Ok(star(n)),
            GraphSpec::Clique { n } => Ok(clique(n)),
            GraphSpec::Blocks { k } => cycle_of_blocks(k),
        }
    }

    /// Whether building consumes randomness.
    pub fn is_random(&self) -> bool {
        matches!(self, GraphSpec::Gnp { .. } | GraphSpec::Regular { .. })
    }
}

impl fmt::Display for GraphSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GraphSpec::Gnp { n, p } => write!(f, "gnp:{n}:{p}"),
            GraphSpec::Regular { n, d } => write!(f, "regular:{n}:{d}"),
            GraphSpec::Star { n } => write!(f, "star:{n}"),
            GraphSpec::Clique { n } => write!(f, "clique:{n}"),
            GraphSpec::Blocks { k } => write!(f, "blocks:{k}"),
        }
    }
}

impl FromStr for GraphSpec {
    type Err = TopologyError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = |msg: &str| TopologyError::Generator(format!("{s:?}: {msg}"));
        let parts: Vec<&str> = s.split(':').collect();
        let int = |i: usize| -> Result<usize, TopologyError> {
            parts
                .get(i)
                .ok_or_else(|| bad("missing argument"))?
                .parse()
                .map_err(|_| bad("bad integer argument"))
        };
        let arity = |want: usize| {
            if parts.len() == want + 1 {
                Ok(())
            } else {
                Err(bad(&format!("expected {want} argument(s)")))
            }
        };
        match parts[0] {
            "gnp" => {
                arity(2)?;
                let p: f64 = parts[2].parse().map_err(|_| bad("bad probability"))?;
                if !(0.0..=1.0).contains(&p) {
                    return Err(bad("probability must be in [0, 1]"));
                }
                Ok(GraphSpec::Gnp { n: int(1)?, p })
            }
            "regular" => {
                arity(2)?;
                Ok(GraphSpec::Regular {
                    n: int(1)?,
                    d: int(2)?,
                })
            }
            "star" => {
                arity(1)?;
                Ok(GraphSpec::Star { n: int(1)? })
            }
            "clique" => {
                arity(1)?;
                Ok(GraphSpec::Clique { n: int(1)? })
            }
            "blocks" => {
                arity(1)?;
                Ok(GraphSpec::Blocks { k: int(1)? })
            }
            _ => Err(bad("unknown generator")),
        }
    }
}

/// Topology change applied at the start of a global period.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum EventKind {
    /// The id must equal the next unallocated node id.
    AddNode { id: NodeId, neighbors: Vec<NodeId> },
    RemoveNode(NodeId),
    AddEdge(NodeId, NodeId),
    RemoveEdge(NodeId, NodeId),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DynamicEvent {
    pub at_period: u64,
    pub kind: EventKind,
}

impl DynamicEvent {
    pub fn apply(&self, topo: &mut Topology) -> Result<(), TopologyError> {
        match &self.kind {
            EventKind::AddNode { id, neighbors } => {
                if *id != topo.node_count() {
                    return Err(TopologyError::NodeIdMismatch {
                        expected: topo.node_count(),
                        got: *id,
                    });
                }
                topo.add_node(neighbors).map(|_| ())
            }
            EventKind::RemoveNode(v) => topo.remove_node(*v),
            EventKind::AddEdge(u, v) => topo.add_edge(*u, *v),
            EventKind::RemoveEdge(u, v) => topo.remove_edge(*u, *v),
        }
    }
}

/// Parses an events file: one `period kind args...` entry per line, where
/// kind is `add_node <id> [nbr...]`, `remove_node <id>`, `add_edge <u> <v>`
/// or `remove_edge <u> <v>`. The result is stably sorted by period.
pub fn parse_events(text: &str) -> Result<Vec<DynamicEvent>, TopologyError> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = strip_comment(raw);
        if line.is_empty() {
            continue;
        }
        let ln = i + 1;
        let fields: Vec<&str> = line.split_whitespace().collect();
        let err = |msg: String| TopologyError::Parse { line: ln, msg };
        if fields.len() < 2 {
            return Err(err(format!("expected \"period kind args\", got {line:?}")));
        }
        let at_period: u64 = fields[0]
            .parse()
            .map_err(|_| err(format!("bad period {:?}", fields[0])))?;
        let ids = fields[2..]
            .iter()
            .map(|f| parse_id(f, ln))
            .collect::<Result<Vec<_>, _>>()?;
        let pair = |ids: &[NodeId]| {
            if ids.len() == 2 {
                Ok((ids[0], ids[1]))
            } else {
                Err(err(format!("{} takes exactly two node ids", fields[1])))
            }
        };
        let kind = match fields[1] {
            "add_node" => {
                let (&id, neighbors) = ids
                    .split_first()
                    .ok_or_else(|| err("add_node needs the new node id".into()))?;
                EventKind::AddNode {
                    id,
                    neighbors: neighbors.to_vec(),
                }
            }
            "remove_node" => {
                if ids.len() != 1 {
                    return Err(err("remove_node takes exactly one node id".into()));
                }
                EventKind::RemoveNode(ids[0])
            }
            "add_edge" => {
                let (u, v) = pair(&ids)?;
                EventKind::AddEdge(u, v)
            }
            "remove_edge" => {
                let (u, v) = pair(&ids)?;
                EventKind::RemoveEdge(u, v)
            }
            other => return Err(err(format!("unknown event kind {other:?}"))),
        };
        out.push(DynamicEvent { at_period, kind });
    }
    out.sort_by_key(|e| e.at_period);
    Ok(out)
}

/// Largest Δ over the initial topology and every state reached by applying
/// `events` in order.
pub fn max_degree_over_events(
    topo: &Topology,
    events: &[DynamicEvent],
) -> Result<usize, TopologyError> {
    let mut t = topo.clone();
    let mut delta = t.max_degree();
    for e in events {
        e.apply(&mut t)?;
        delta = delta.max(t.max_degree());
    }
    Ok(delta)
}
