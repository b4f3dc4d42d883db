//! Branch-system graphs: boxes driven by energy from earlier boxes, with
//! degraded energy leaving on the output side only.
//!
//! Edges are stored in the direction of the energy flux. The `orientation`
//! tag is a convention: [`time_reverse_graph`] flips every edge and the tag
//! together, and the queries that concern physical structure (validation,
//! causality, observer information) undo a `Reversed` tag before looking at
//! the edges, so relabelling never changes their answers.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use petgraph::algo::{has_path_connecting, is_cyclic_directed, is_isomorphic_matching};
use petgraph::graph::{DiGraph, NodeIndex};
use petgraph::visit::Dfs;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::rng_from;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeKind {
    InitialInstability,
    Branch,
    DegradedSink,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BranchSystem {
    pub id: String,
    pub kind: NodeKind,
    pub stored_energy: f64,
    pub entropy_in: f64,
    pub entropy_out: f64,
}

impl BranchSystem {
    pub fn new(
        id: &str,
        kind: NodeKind,
        stored_energy: f64,
        entropy_in: f64,
        entropy_out: f64,
    ) -> Self {
        BranchSystem {
            id: id.to_string(),
            kind,
            stored_energy,
            entropy_in,
            entropy_out,
        }
    }

    /// Entropy produced by the relaxation hosted in the box.
    pub fn entropy_gain(&self) -> f64 {
        self.entropy_out - self.entropy_in
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FluxTag {
    Driving,
    Degraded,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyFlux {
    pub source: String,
    pub target: String,
    pub amount: f64,
    pub tag: FluxTag,
}

impl EnergyFlux {
    pub fn new(source: &str, target: &str, amount: f64, tag: FluxTag) -> Self {
        EnergyFlux {
            source: source.to_string(),
            target: target.to_string(),
            amount,
            tag,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Orientation {
    #[default]
    Forward,
    Reversed,
}

impl Orientation {
    pub fn flipped(self) -> Self {
        match self {
            Orientation::Forward => Orientation::Reversed,
            Orientation::Reversed => Orientation::Forward,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BranchGraph {
    pub nodes: Vec<BranchSystem>,
    pub edges: Vec<EnergyFlux>,
    #[serde(default)]
    pub orientation: Orientation,
}

impl BranchGraph {
    pub fn node(&self, id: &str) -> Option<&BranchSystem> {
        self.nodes.iter().find(|n| n.id == id)
    }

    fn ids(&self) -> BTreeMap<&str, usize> {
        self.nodes
            .iter()
            .enumerate()
            .map(|(i, n)| (n.id.as_str(), i))
            .collect()
    }

    /// The graph with a `Reversed` tag undone, so edges follow the flux.
    fn physical(&self) -> BranchGraph {
        match self.orientation {
            Orientation::Forward => self.clone(),
            Orientation::Reversed => time_reverse_graph(self),
        }
    }
}

/// Flips every edge, swaps each box's entropy before and after relaxation,
/// and flips the orientation tag.
pub fn time_reverse_graph(graph: &BranchGraph) -> BranchGraph {
    BranchGraph {
        nodes: graph
            .nodes
            .iter()
            .map(|n| BranchSystem {
                entropy_in: n.entropy_out,
                entropy_out: n.entropy_in,
                ..n.clone()
            })
            .collect(),
        edges: graph
            .edges
            .iter()
            .map(|e| EnergyFlux {
                source: e.target.clone(),
                target: e.source.clone(),
                ..e.clone()
            })
            .collect(),
        orientation: graph.orientation.flipped(),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    DuplicateId(String),
    DanglingEdge { source: String, target: String },
    NonPositiveAmount { source: String, target: String },
    Cycle,
    SourceCount(usize),
    SourceHasInput(String),
    SinkHasOutput(String),
    MissingDrive(String),
    DrivingIntoSink { source: String, target: String },
    DegradedPlacement { source: String, target: String },
    NegativeStored(String),
    EnergyBalance { id: String, residual: f64 },
    EntropyDecrease { id: String, drop: f64 },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::DuplicateId(id) => write!(f, "duplicate id `{id}`"),
            Violation::DanglingEdge { source, target } => {
                write!(f, "edge {source} -> {target} names a missing node")
            }
            Violation::NonPositiveAmount { source, target } => {
                write!(f, "edge {source} -> {target} carries a non-positive amount")
            }
            Violation::Cycle => write!(f, "acyclicity: the graph has a directed cycle"),
            Violation::SourceCount(n) => write!(f, "expected one initial instability, found {n}"),
            Violation::SourceHasInput(id) => {
                write!(f, "initial instability `{id}` receives energy")
            }
            Violation::SinkHasOutput(id) => write!(f, "degraded sink `{id}` emits energy"),
            Violation::MissingDrive(id) => write!(f, "branch `{id}` has no incoming driving edge"),
            Violation::DrivingIntoSink { source, target } => {
                write!(
                    f,
                    "driving edge {source} -> {target} ends in a degraded sink"
                )
            }
            Violation::DegradedPlacement { source, target } => {
                write!(f, "degraded-placement: edge {source} -> {target} must run from a branch to a sink")
            }
            Violation::NegativeStored(id) => write!(f, "`{id}` has negative stored energy"),
            Violation::EnergyBalance { id, residual } => {
                write!(f, "energy balance of `{id}` off by {residual:e}")
            }
            Violation::EntropyDecrease { id, drop } => {
                write!(f, "entropy of `{id}` decreases by {drop}")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

pub const BALANCE_TOL: f64 = 1e-9;

/// Checks every structural rule and lists all violations.
pub fn validate_graph(graph: &BranchGraph) -> ValidationReport {
    let g = graph.physical();
    let mut v = Vec::new();
    let mut seen = BTreeSet::new();
    for n in &g.nodes {
        if !seen.insert(n.id.as_str()) {
            v.push(Violation::DuplicateId(n.id.clone()));
        }
    }
    let ids = g.ids();
    let kind = |id: &str| ids.get(id).map(|i| g.nodes[*i].kind);
    let sources = g
        .nodes
        .iter()
        .filter(|n| n.kind == NodeKind::InitialInstability)
        .count();
    if sources != 1 {
        v.push(Violation::SourceCount(sources));
    }
    let mut inflow = vec![0.0; g.nodes.len()];
    let mut outflow = vec![0.0; g.nodes.len()];
    let mut driven = vec![false; g.nodes.len()];
    for e in &g.edges {
        let (Some(ks), Some(kt)) = (kind(&e.source), kind(&e.target)) else {
            v.push(Violation::DanglingEdge {
                source: e.source.clone(),
                target: e.target.clone(),
            });
            continue;
        };
        if !(e.amount > 0.0) || !e.amount.is_finite() {
            v.push(Violation::NonPositiveAmount {
                source: e.source.clone(),
                target: e.target.clone(),
            });
        }
        let (s, t) = (ids[e.source.as_str()], ids[e.target.as_str()]);
        outflow[s] += e.amount;
        inflow[t] += e.amount;
        match e.tag {
            FluxTag::Driving => {
                driven[t] = true;
                if kt == NodeKind::DegradedSink {
                    v.push(Violation::DrivingIntoSink {
                        source: e.source.clone(),
                        target: e.target.clone(),
                    });
                }
            }
            FluxTag::Degraded => {
                if ks != NodeKind::Branch || kt != NodeKind::DegradedSink {
                    v.push(Violation::DegradedPlacement {
                        source: e.source.clone(),
                        target: e.target.clone(),
                    });
                }
            }
        }
    }
    if has_cycle(&g) {
        v.push(Violation::Cycle);
    }
    for (i, n) in g.nodes.iter().enumerate() {
        match n.kind {
            NodeKind::InitialInstability if inflow[i] > 0.0 => {
                v.push(Violation::SourceHasInput(n.id.clone()))
            }
            NodeKind::DegradedSink if outflow[i] > 0.0 => {
                v.push(Violation::SinkHasOutput(n.id.clone()))
            }
            NodeKind::Branch => {
                if !driven[i] {
                    v.push(Violation::MissingDrive(n.id.clone()));
                }
                let residual = inflow[i] - n.stored_energy - outflow[i];
                if residual.abs() > BALANCE_TOL * inflow[i].max(1.0) {
                    v.push(Violation::EnergyBalance {
                        id: n.id.clone(),
                        residual,
                    });
                }
            }
            _ => {}
        }
        if n.stored_energy < 0.0 {
            v.push(Violation::NegativeStored(n.id.clone()));
        }
        if n.entropy_gain() < 0.0 {
            v.push(Violation::EntropyDecrease {
                id: n.id.clone(),
                drop: -n.entropy_gain(),
            });
        }
    }
    ValidationReport { violations: v }
}

fn has_cycle(g: &BranchGraph) -> bool {
    let ids = g.ids();
    let mut dg = DiGraph::<(), ()>::new();
    let idx: Vec<NodeIndex> = g.nodes.iter().map(|_| dg.add_node(())).collect();
    for e in &g.edges {
        if let (Some(s), Some(t)) = (ids.get(e.source.as_str()), ids.get(e.target.as_str())) {
            dg.add_edge(idx[*s], idx[*t], ());
        }
    }
    is_cyclic_directed(&dg)
}

/// Driving edges in the direction of the flux.
fn driving_digraph(g: &BranchGraph) -> (DiGraph<usize, ()>, BTreeMap<String, NodeIndex>) {
    let mut dg = DiGraph::new();
    let mut map = BTreeMap::new();
    for (i, n) in g.nodes.iter().enumerate() {
        map.insert(n.id.clone(), dg.add_node(i));
    }
    for e in g.edges.iter().filter(|e| e.tag == FluxTag::Driving) {
        if let (Some(s), Some(t)) = (map.get(&e.source), map.get(&e.target)) {
            dg.add_edge(*s, *t, ());
        }
    }
    (dg, map)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Causal {
    CauseOf,
    EffectOf,
    Unrelated,
}

/// Reachability along driving edges. A node is not its own cause.
pub fn causally_related(graph: &BranchGraph, a: &str, b: &str) -> Result<Causal> {
    let g = graph.physical();
    let (dg, map) = driving_digraph(&g);
    let ia = *map
        .get(a)
        .ok_or_else(|| Error::UnknownNode(a.to_string()))?;
    let ib = *map
        .get(b)
        .ok_or_else(|| Error::UnknownNode(b.to_string()))?;
    if ia == ib {
        return Ok(Causal::Unrelated);
    }
    Ok(if has_path_connecting(&dg, ia, ib, None) {
        Causal::CauseOf
    } else if has_path_connecting(&dg, ib, ia, None) {
        Causal::EffectOf
    } else {
        Causal::Unrelated
    })
}

/// Full causal relation of a graph, for bulk queries.
#[derive(Debug, Clone, PartialEq)]
pub struct CausalOrder {
    pub ids: Vec<String>,
    reach: Vec<Vec<bool>>,
}

impl CausalOrder {
    pub fn new(graph: &BranchGraph) -> Self {
        let g = graph.physical();
        let (dg, _) = driving_digraph(&g);
        let n = g.nodes.len();
        let mut reach = vec![vec![false; n]; n];
        for i in dg.node_indices() {
            let mut dfs = Dfs::new(&dg, i);
            while let Some(j) = dfs.next(&dg) {
                if j != i {
                    reach[dg[i]][dg[j]] = true;
                }
            }
        }
        CausalOrder {
            ids: g.nodes.iter().map(|n| n.id.clone()).collect(),
            reach,
        }
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    /// Relation of the `i`-th node to the `j`-th (graph node order).
    pub fn relation(&self, i: usize, j: usize) -> Causal {
        if i == j {
            Causal::Unrelated
        } else if self.reach[i][j] {
            Causal::CauseOf
        } else if self.reach[j][i] {
            Causal::EffectOf
        } else {
            Causal::Unrelated
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ArrowReport {
    pub source: String,
    /// Orientation read off the edges: `Forward` when driving edges point
    /// away from the initial instability.
    pub orientation: Orientation,
    /// Whether the conventional tag agrees with the edges.
    pub tag_consistent: bool,
}

/// Locates the unique initial instability and reads the orientation of the
/// driving edges relative to it.
pub fn global_arrow(graph: &BranchGraph) -> Result<ArrowReport> {
    let sources: Vec<&BranchSystem> = graph
        .nodes
        .iter()
        .filter(|n| n.kind == NodeKind::InitialInstability)
        .collect();
    if sources.len() != 1 {
        return Err(Error::NoUniqueSource {
            count: sources.len(),
        });
    }
    if has_cycle(graph) {
        return Err(Error::Cyclic);
    }
    let (dg, map) = driving_digraph(graph);
    let s = map[&sources[0].id];
    let on_path =
        |from: NodeIndex, to: NodeIndex| from == to || has_path_connecting(&dg, from, to, None);
    let driving: Vec<(NodeIndex, NodeIndex)> = graph
        .edges
        .iter()
        .filter(|e| e.tag == FluxTag::Driving)
        .filter_map(|e| Some((*map.get(&e.source)?, *map.get(&e.target)?)))
        .collect();
    let forward = driving.iter().all(|(a, _)| on_path(s, *a));
    let reversed = driving.iter().all(|(_, b)| on_path(*b, s));
    let orientation = match (forward, reversed) {
        (true, _) => Orientation::Forward,
        (false, true) => Orientation::Reversed,
        (false, false) => return Err(Error::NotOriented),
    };
    Ok(ArrowReport {
        source: sources[0].id.clone(),
        orientation,
        tag_consistent: orientation == graph.orientation,
    })
}

/// Cumulative count of driving edges received by the observer along `path`.
/// Consecutive entries must be causally ordered.
pub fn observer_information(graph: &BranchGraph, path: &[&str]) -> Result<Vec<usize>> {
    let order = CausalOrder::new(graph);
    let g = graph.physical();
    let ids = g.ids();
    let mut idx = Vec::with_capacity(path.len());
    for p in path {
        idx.push(
            *ids.get(p)
                .ok_or_else(|| Error::UnknownNode(p.to_string()))?,
        );
    }
    for w in idx.windows(2) {
        if order.relation(w[0], w[1]) != Causal::CauseOf {
            return Err(Error::PathViolatesOrder {
                from: g.nodes[w[0]].id.clone(),
                to: g.nodes[w[1]].id.clone(),
            });
        }
    }
    let mut visited = BTreeSet::new();
    let mut out = Vec::with_capacity(idx.len());
    let mut count = 0;
    for &i in &idx {
        if visited.insert(i) {
            count += g
                .edges
                .iter()
                .filter(|e| e.tag == FluxTag::Driving && ids.get(e.target.as_str()) == Some(&i))
                .count();
        }
        out.push(count);
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EntropyAudit {
    pub paths: usize,
    pub violations: usize,
    /// Enumeration stopped at the path cap.
    pub truncated: bool,
}

/// Walks every maximal driving path from the initial instability and counts
/// those along which the cumulative entropy production ever decreases.
pub fn entropy_path_audit(graph: &BranchGraph, max_paths: usize) -> Result<EntropyAudit> {
    let g = graph.physical();
    let src = g
        .nodes
        .iter()
        .position(|n| n.kind == NodeKind::InitialInstability);
    let count = g
        .nodes
        .iter()
        .filter(|n| n.kind == NodeKind::InitialInstability)
        .count();
    let Some(src) = src.filter(|_| count == 1) else {
        return Err(Error::NoUniqueSource { count });
    };
    if has_cycle(&g) {
        return Err(Error::Cyclic);
    }
    let ids = g.ids();
    let mut children = vec![Vec::new(); g.nodes.len()];
    for e in g.edges.iter().filter(|e| e.tag == FluxTag::Driving) {
        if let (Some(s), Some(t)) = (ids.get(e.source.as_str()), ids.get(e.target.as_str())) {
            children[*s].push(*t);
        }
    }
    let mut audit = EntropyAudit {
        paths: 0,
        violations: 0,
        truncated: false,
    };
    // (node, cumulative before node, decreased so far)
    let mut stack = vec![(src, 0.0f64, false)];
    while let Some((u, before, bad)) = stack.pop() {
        let after = before + g.nodes[u].entropy_gain();
        let bad = bad || after < before;
        if children[u].is_empty() {
            audit.paths += 1;
            audit.violations += bad as usize;
            if audit.paths >= max_paths {
                audit.truncated = !stack.is_empty();
                break;
            }
        }
        for &c in &children[u] {
            stack.push((c, after, bad));
        }
    }
    Ok(audit)
}

pub const EXACT_MIRROR_LIMIT: usize = 24;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MirrorVerdict {
    pub symmetric: bool,
    /// False when the graph exceeded [`EXACT_MIRROR_LIMIT`] and only the
    /// colour-refinement test was run.
    pub exact: bool,
}

/// Node kinds on the nodes, `(driving, degraded)` multiplicities on the edges.
fn structure(g: &BranchGraph) -> DiGraph<NodeKind, (u32, u32)> {
    let ids = g.ids();
    let mut counts: BTreeMap<(usize, usize), (u32, u32)> = BTreeMap::new();
    for e in &g.edges {
        if let (Some(s), Some(t)) = (ids.get(e.source.as_str()), ids.get(e.target.as_str())) {
            let c = counts.entry((*s, *t)).or_default();
            match e.tag {
                FluxTag::Driving => c.0 += 1,
                FluxTag::Degraded => c.1 += 1,
            }
        }
    }
    let mut dg = DiGraph::new();
    let idx: Vec<NodeIndex> = g.nodes.iter().map(|n| dg.add_node(n.kind)).collect();
    for ((s, t), w) in counts {
        dg.add_edge(idx[s], idx[t], w);
    }
    dg
}

/// Colour refinement on the disjoint union of two graphs; returns the stable
/// colour histograms of each side.
fn refined_histograms(
    a: &DiGraph<NodeKind, (u32, u32)>,
    b: &DiGraph<NodeKind, (u32, u32)>,
) -> (Vec<usize>, Vec<usize>) {
    use petgraph::visit::EdgeRef;
    use petgraph::Direction::{Incoming, Outgoing};
    let graphs = [a, b];
    let mut colour: Vec<Vec<usize>> = graphs
        .iter()
        .map(|g| g.node_weights().map(|k| *k as usize).collect())
        .collect();
    let mut classes = usize::MAX;
    loop {
        type Sig = (usize, Vec<(u32, u32, usize)>, Vec<(u32, u32, usize)>);
        let sigs: Vec<Vec<Sig>> = graphs
            .iter()
            .zip(&colour)
            .map(|(g, col)| {
                g.node_indices()
                    .map(|v| {
                        let mut out: Vec<_> = g
                            .edges_directed(v, Outgoing)
                            .map(|e| (e.weight().0, e.weight().1, col[e.target().index()]))
                            .collect();
                        let mut inc: Vec<_> = g
                            .edges_directed(v, Incoming)
                            .map(|e| (e.weight().0, e.weight().1, col[e.source().index()]))
                            .collect();
                        out.sort_unstable();
                        inc.sort_unstable();
                        (col[v.index()], out, inc)
                    })
                    .collect()
            })
            .collect();
        let mut all: Vec<&Sig> = sigs.iter().flatten().collect();
        all.sort();
        all.dedup();
        colour = sigs
            .iter()
            .map(|s| s.iter().map(|x| all.binary_search(&x).unwrap()).collect())
            .collect();
        if all.len() == classes {
            break;
        }
        classes = all.len();
    }
    let hist = |c: &Vec<usize>| {
        let mut h = vec![0; classes];
        c.iter().for_each(|x| h[*x] += 1);
        h
    };
    (hist(&colour[0]), hist(&colour[1]))
}

/// Whether the graph is isomorphic to its time reversal, as a structure of
/// node kinds and tagged edges. Exact (VF2 isomorphism search) up to
/// [`EXACT_MIRROR_LIMIT`] nodes; colour refinement beyond.
pub fn mirror_verdict(graph: &BranchGraph) -> MirrorVerdict {
    let a = structure(graph);
    let b = structure(&time_reverse_graph(graph));
    if graph.nodes.len() <= EXACT_MIRROR_LIMIT {
        let symmetric = is_isomorphic_matching(&a, &b, |x, y| x == y, |x, y| x == y);
        return MirrorVerdict {
            symmetric,
            exact: true,
        };
    }
    let (ha, hb) = refined_histograms(&a, &b);
    MirrorVerdict {
        symmetric: ha == hb,
        exact: false,
    }
}

/// Exact mirror-symmetry verdict; graphs above [`EXACT_MIRROR_LIMIT`] nodes
/// return `TooLargeForExact` carrying the heuristic verdict.
pub fn is_mirror_symmetric(graph: &BranchGraph) -> Result<bool> {
    let v = mirror_verdict(graph);
    if v.exact {
        Ok(v.symmetric)
    } else {
        Err(Error::TooLargeForExact {
            nodes: graph.nodes.len(),
            limit: EXACT_MIRROR_LIMIT,
            heuristic: v.symmetric,
        })
    }
}

/// Six-box cascade: the instability feeds A and B, which are not causally
/// related; C (downstream of A) is a partial cause of D, which B also feeds.
/// Every box sends degraded energy to its own sink.
pub fn reference_graph() -> BranchGraph {
    use FluxTag::{Degraded, Driving};
    let boxes = [
        // id, stored, entropy in, entropy out
        ("A", 1.0, 1.0, 1.6),
        ("B", 1.0, 0.5, 1.5),
        ("C", 0.5, 0.8, 1.1),
        ("D", 1.0, 1.2, 2.0),
        ("E", 0.2, 0.3, 0.4),
        ("F", 1.2, 1.0, 2.5),
    ];
    let mut nodes = vec![BranchSystem::new(
        "instability",
        NodeKind::InitialInstability,
        10.0,
        0.0,
        0.0,
    )];
    for (id, stored, si, so) in boxes {
        nodes.push(BranchSystem::new(id, NodeKind::Branch, stored, si, so));
    }
    let mut edges = vec![
        EnergyFlux::new("instability", "A", 4.0, Driving),
        EnergyFlux::new("instability", "B", 5.0, Driving),
        EnergyFlux::new("A", "C", 2.0, Driving),
        EnergyFlux::new("C", "D", 0.5, Driving),
        EnergyFlux::new("B", "D", 3.0, Driving),
        EnergyFlux::new("C", "E", 0.5, Driving),
        EnergyFlux::new("D", "F", 2.0, Driving),
        EnergyFlux::new("E", "F", 0.2, Driving),
    ];
    for (id, degraded) in [
        ("A", 1.0),
        ("B", 1.0),
        ("C", 0.5),
        ("D", 0.5),
        ("E", 0.1),
        ("F", 1.0),
    ] {
        let sink = format!("heat_{id}");
        nodes.push(BranchSystem::new(
            &sink,
            NodeKind::DegradedSink,
            0.0,
            0.0,
            0.0,
        ));
        edges.push(EnergyFlux::new(id, &sink, degraded, Degraded));
    }
    BranchGraph {
        nodes,
        edges,
        orientation: Orientation::Forward,
    }
}

/// Random valid branch graph: an instability, `branches` boxes in causal
/// order, each driven by a random earlier node plus further earlier nodes
/// with probability `extra_edge_prob`, and between one and `branches` shared
/// degraded sinks. Amounts are drawn so every box balances exactly up to
/// rounding.
pub fn random_branch_graph(seed: u64, branches: usize, extra_edge_prob: f64) -> BranchGraph {
    let mut rng = rng_from(seed);
    let n = branches.max(1);
    let sinks = rng.gen_range(1..=n);
    let mut nodes = vec![BranchSystem::new(
        "S",
        NodeKind::InitialInstability,
        rng.gen_range(1.0..10.0),
        0.0,
        0.0,
    )];
    for i in 0..n {
        let e_in = rng.gen_range(0.0..5.0);
        let gain = rng.gen_range(0.0..2.0);
        nodes.push(BranchSystem {
            id: format!("B{i}"),
            kind: NodeKind::Branch,
            stored_energy: 0.0,
            entropy_in: e_in,
            entropy_out: e_in + gain,
        });
    }
    for k in 0..sinks {
        nodes.push(BranchSystem::new(
            &format!("W{k}"),
            NodeKind::DegradedSink,
            0.0,
            0.0,
            0.0,
        ));
    }
    // children[u] for u in 0..=n (0 is the source, i + 1 is branch i)
    let mut children: Vec<Vec<usize>> = vec![Vec::new(); n + 1];
    for i in 0..n {
        let node = i + 1;
        let first = rng.gen_range(0..node);
        children[first].push(node);
        for (u, kids) in children.iter_mut().enumerate().take(node) {
            if u != first && rng.gen_bool(extra_edge_prob.clamp(0.0, 1.0)) {
                kids.push(node);
            }
        }
    }
    let mut inflow = vec![0.0; n + 1];
    let mut edges = Vec::new();
    for u in 0..=n {
        let budget = if u == 0 {
            nodes[0].stored_energy
        } else {
            inflow[u]
        };
        let sink = if u == 0 {
            None
        } else {
            Some(
                n + 1
                    + if u - 1 < sinks {
                        u - 1
                    } else {
                        rng.gen_range(0..sinks)
                    },
            )
        };
        let parts = children[u].len() + if u == 0 { 0 } else { 2 };
        let w: Vec<f64> = (0..parts).map(|_| rng.gen_range(0.1..1.0)).collect();
        let total: f64 = w.iter().sum();
        let amounts: Vec<f64> = w.iter().map(|x| budget * x / total).collect();
        for (k, &c) in children[u].iter().enumerate() {
            inflow[c] += amounts[k];
            edges.push(EnergyFlux {
                source: nodes[u].id.clone(),
                target: nodes[c].id.clone(),
                amount: amounts[k],
                tag: FluxTag::Driving,
            });
        }
        if let Some(s) = sink {
            let k = children[u].len();
            edges.push(EnergyFlux {
                source: nodes[u].id.clone(),
                target: nodes[s].id.clone(),
                amount: amounts[k + 1],
                tag: FluxTag::Degraded,
            });
            nodes[u].stored_energy = amounts[k];
        }
    }
    BranchGraph {
        nodes,
        edges,
        orientation: Orientation::Forward,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn chain(ids: &[(&str, NodeKind)], links: &[(&str, &str, FluxTag)]) -> BranchGraph {
        BranchGraph {
            nodes: ids
                .iter()
                .map(|(id, k)| BranchSystem::new(id, *k, 0.0, 0.0, 0.0))
                .collect(),
            edges: links
                .iter()
                .map(|(s, t, tag)| EnergyFlux::new(s, t, 1.0, *tag))
                .collect(),
            orientation: Orientation::Forward,
        }
    }

    #[test]
    fn reference_graph_is_valid() {
        let g = reference_graph();
        let r = validate_graph(&g);
        assert!(r.is_valid(), "{:?}", r.violations);
        assert_eq!(
            g.nodes
                .iter()
                .filter(|n| n.kind == NodeKind::Branch)
                .count(),
            6
        );
    }

    #[test]
    fn reversal_is_an_involution() {
        let g = reference_graph();
        assert_eq!(time_reverse_graph(&time_reverse_graph(&g)), g);
        assert!(validate_graph(&time_reverse_graph(&g)).is_valid());
    }

    #[test]
    fn violations_are_all_listed() {
        use FluxTag::*;
        use NodeKind::*;
        let g = chain(
            &[
                ("S", InitialInstability),
                ("A", Branch),
                ("B", Branch),
                ("W", DegradedSink),
            ],
            &[
                ("S", "A", Driving),
                ("A", "B", Driving),
                ("B", "A", Driving),
                ("W", "B", Degraded),
                ("A", "W", Driving),
            ],
        );
        let v = validate_graph(&g).violations;
        assert!(v.contains(&Violation::Cycle));
        assert!(v.contains(&Violation::DegradedPlacement {
            source: "W".into(),
            target: "B".into()
        }));
        assert!(v.contains(&Violation::SinkHasOutput("W".into())));
        assert!(v.contains(&Violation::DrivingIntoSink {
            source: "A".into(),
            target: "W".into()
        }));
        assert!(v
            .iter()
            .any(|x| matches!(x, Violation::EnergyBalance { .. })));
    }

    #[test]
    fn random_graphs_balance() {
        for seed in 0..50 {
            let g = random_branch_graph(seed, 1 + (seed as usize % 10), 0.3);
            let r = validate_graph(&g);
            assert!(r.is_valid(), "seed {seed}: {:?}", r.violations);
        }
    }

    #[test]
    fn structure_merges_parallel_edges() {
        use FluxTag::*;
        use NodeKind::*;
        let g = chain(
            &[("S", InitialInstability), ("A", Branch)],
            &[("S", "A", Driving), ("S", "A", Driving)],
        );
        let s = structure(&g);
        assert_eq!(s.edge_count(), 1);
        assert_eq!(*s.edge_weights().next().unwrap(), (2, 0));
    }
}
