//! Plot graphs.
//!
//! Between two adjacent plot points a *bridge* is grown: a forward DAG of
//! "wants" inferences rooted at the first point, a backward DAG of "needs"
//! inferences leading into the second, and link edges joining the forward
//! frontier to the best-scoring backward node. Bridges are pruned so every
//! node lies on a source-to-sink path and then chained into a [`StoryGraph`].

mod assemble;
mod branch;
mod export;
mod link;

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::inference::{InferenceError, Relation};
use crate::scalar::Score;

pub use assemble::{assemble, build_bridge, build_story_graph, prune_dead_ends};
pub use branch::{build_backward, build_forward, BranchGraph};
pub use link::{combine_link_terms, link_graphs, link_weight, FALLBACK_WEIGHT};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodeId(pub u32);

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "n{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeOrigin {
    PlotPoint,
    ForwardInferred,
    BackwardInferred,
}

impl NodeOrigin {
    /// The relation that produced an inferred node.
    pub fn relation(self) -> Option<Relation> {
        match self {
            NodeOrigin::PlotPoint => None,
            NodeOrigin::ForwardInferred => Some(Relation::Wants),
            NodeOrigin::BackwardInferred => Some(Relation::Needs),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EventNode {
    pub id: NodeId,
    pub text: String,
    pub origin: NodeOrigin,
    /// Distance from the owning plot point.
    pub depth: u32,
    /// Canonical name of the character the event is about.
    pub subject: String,
    /// Owning bridge; `None` for plot points, which are shared.
    pub bridge: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EdgeKind {
    Forward,
    Backward,
    Link,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightedEdge<S> {
    pub from: NodeId,
    pub to: NodeId,
    pub weight: S,
    pub kind: EdgeKind,
}

/// Branching factor `k` and depth `n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphParams {
    pub k: usize,
    pub n: usize,
}

impl Default for GraphParams {
    fn default() -> Self {
        Self { k: 3, n: 3 }
    }
}

impl GraphParams {
    pub fn validate(&self) -> Result<(), GraphError> {
        if self.k == 0 || self.n == 0 {
            return Err(GraphError::InvalidParams(format!(
                "k and n must be at least 1 (k = {}, n = {})",
                self.k, self.n
            )));
        }
        Ok(())
    }

    /// Upper bound on the node count of one branch: 1 + k + ... + k^n.
    pub fn branch_node_bound(&self) -> u128 {
        (0..=self.n as u32)
            .map(|i| (self.k as u128).saturating_pow(i))
            .fold(0u128, u128::saturating_add)
    }
}

/// Which forward nodes receive a link into the backward graph.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LinkScope {
    /// Only nodes with no forward expansion.
    #[default]
    Frontier,
    /// Every forward node, including interior ones.
    AllNodes,
}

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("invalid graph parameters: {0}")]
    InvalidParams(String),
    #[error("backend failure while expanding {relation} at depth {depth}: {source}")]
    Backend {
        relation: Relation,
        depth: usize,
        #[source]
        source: InferenceError,
    },
    #[error("backend failure while linking: {0}")]
    Link(#[source] InferenceError),
    #[error("bridge has no path from source to sink")]
    Disconnected,
    #[error("assembly error: {0}")]
    Assembly(String),
    #[error("invalid graph: {0}")]
    Invalid(String),
}

/// A linked, possibly pruned pair of branches between two plot points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BridgeGraph<S> {
    pub source: NodeId,
    pub sink: NodeId,
    pub nodes: Vec<EventNode>,
    pub edges: Vec<WeightedEdge<S>>,
    pub params: GraphParams,
    /// True when no link could be scored and a single weak edge joins the
    /// endpoints instead.
    pub fallback: bool,
}

impl<S: Score> BridgeGraph<S> {
    pub fn node(&self, id: NodeId) -> Option<&EventNode> {
        self.nodes.iter().find(|n| n.id == id)
    }

    pub fn topology(&self) -> Topology {
        Topology::new(
            self.nodes.iter().map(|n| n.id),
            self.edges.iter().map(|e| (e.from, e.to)),
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BridgeSummary {
    pub source: NodeId,
    pub sink: NodeId,
    pub k: usize,
    pub n: usize,
    pub fallback: bool,
}

/// All bridges of an outline, chained through shared plot-point nodes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StoryGraph<S> {
    pub plot_points: Vec<NodeId>,
    pub nodes: Vec<EventNode>,
    pub edges: Vec<WeightedEdge<S>>,
    pub params: GraphParams,
    #[serde(default)]
    pub bridges: Vec<BridgeSummary>,
}

impl<S: Score> StoryGraph<S> {
    pub fn node(&self, id: NodeId) -> Option<&EventNode> {
        self.nodes
            .binary_search_by_key(&id, |n| n.id)
            .ok()
            .map(|i| &self.nodes[i])
    }

    pub fn first_plot_point(&self) -> NodeId {
        self.plot_points[0]
    }

    pub fn last_plot_point(&self) -> NodeId {
        *self.plot_points.last().expect("validated graphs have plot points")
    }

    pub fn topology(&self) -> Topology {
        Topology::new(
            self.nodes.iter().map(|n| n.id),
            self.edges.iter().map(|e| (e.from, e.to)),
        )
    }

    /// Out-edges of every node, sorted by target id.
    pub fn adjacency(&self) -> BTreeMap<NodeId, Vec<&WeightedEdge<S>>> {
        let mut adj: BTreeMap<NodeId, Vec<&WeightedEdge<S>>> = self.nodes.iter().map(|n| (n.id, Vec::new())).collect();
        for edge in &self.edges {
            adj.entry(edge.from).or_default().push(edge);
        }
        for out in adj.values_mut() {
            out.sort_by_key(|e| e.to);
        }
        adj
    }

    /// Structural checks applied to graphs read from disk.
    pub fn validate(&self) -> Result<(), GraphError> {
        let invalid = |m: String| Err(GraphError::Invalid(m));
        if self.plot_points.is_empty() {
            return invalid("no plot points".into());
        }
        if self.nodes.windows(2).any(|w| w[0].id >= w[1].id) {
            return invalid("node ids must be unique and ascending".into());
        }
        for id in &self.plot_points {
            match self.node(*id) {
                Some(n) if n.origin == NodeOrigin::PlotPoint => {}
                Some(_) => return invalid(format!("plot point {id} is not a plot-point node")),
                None => return invalid(format!("plot point {id} does not exist")),
            }
        }
        if self.plot_points.iter().collect::<BTreeSet<_>>().len() != self.plot_points.len() {
            return invalid("plot points repeat".into());
        }
        for e in &self.edges {
            if self.node(e.from).is_none() || self.node(e.to).is_none() {
                return invalid(format!("edge {} -> {} references a missing node", e.from, e.to));
            }
            if !(e.weight.is_finite() && e.weight > S::zero()) {
                return invalid(format!(
                    "edge {} -> {} has non-positive weight {}",
                    e.from, e.to, e.weight
                ));
            }
        }
        let topo = self.topology();
        if topo.topological_order().is_none() {
            return invalid("graph contains a cycle".into());
        }
        if topo.in_degree(self.first_plot_point()) != 0 {
            return invalid("first plot point has incoming edges".into());
        }
        if topo.out_degree(self.last_plot_point()) != 0 {
            return invalid("last plot point has outgoing edges".into());
        }
        Ok(())
    }
}

/// Adjacency view used for reachability and ordering checks.
#[derive(Debug, Clone)]
pub struct Topology {
    succ: BTreeMap<NodeId, BTreeSet<NodeId>>,
    pred: BTreeMap<NodeId, BTreeSet<NodeId>>,
}

impl Topology {
    pub fn new(nodes: impl IntoIterator<Item = NodeId>, edges: impl IntoIterator<Item = (NodeId, NodeId)>) -> Self {
        let mut succ: BTreeMap<NodeId, BTreeSet<NodeId>> = BTreeMap::new();
        let mut pred: BTreeMap<NodeId, BTreeSet<NodeId>> = BTreeMap::new();
        for id in nodes {
            succ.entry(id).or_default();
            pred.entry(id).or_default();
        }
        for (from, to) in edges {
            succ.entry(from).or_default().insert(to);
            pred.entry(to).or_default().insert(from);
            succ.entry(to).or_default();
            pred.entry(from).or_default();
        }
        Self { succ, pred }
    }

    pub fn out_degree(&self, id: NodeId) -> usize {
        self.succ.get(&id).map_or(0, BTreeSet::len)
    }

    pub fn in_degree(&self, id: NodeId) -> usize {
        self.pred.get(&id).map_or(0, BTreeSet::len)
    }

    pub fn successors(&self, id: NodeId) -> impl Iterator<Item = NodeId> + '_ {
        self.succ.get(&id).into_iter().flatten().copied()
    }

    /// Nodes reachable from `start` (inclusive), following edges forward.
    pub fn descendants(&self, start: NodeId) -> BTreeSet<NodeId> {
        Self::closure(&self.succ, start)
    }

    /// Nodes that reach `end` (inclusive).
    pub fn ancestors(&self, end: NodeId) -> BTreeSet<NodeId> {
        Self::closure(&self.pred, end)
    }

    fn closure(map: &BTreeMap<NodeId, BTreeSet<NodeId>>, start: NodeId) -> BTreeSet<NodeId> {
        let mut seen = BTreeSet::from([start]);
        let mut queue = VecDeque::from([start]);
        while let Some(id) = queue.pop_front() {
            for &next in map.get(&id).into_iter().flatten() {
                if seen.insert(next) {
                    queue.push_back(next);
                }
            }
        }
        seen
    }

    /// Kahn's algorithm; `None` if the graph has a cycle.
    pub fn topological_order(&self) -> Option<Vec<NodeId>> {
        let mut indegree: BTreeMap<NodeId, usize> = self.pred.iter().map(|(id, p)| (*id, p.len())).collect();
        let mut ready: VecDeque<NodeId> = indegree.iter().filter(|(_, d)| **d == 0).map(|(id, _)| *id).collect();
        let mut order = Vec::with_capacity(indegree.len());
        while let Some(id) = ready.pop_front() {
            order.push(id);
            for next in self.successors(id) {
                let d = indegree.get_mut(&next).expect("known node");
                *d -= 1;
                if *d == 0 {
                    ready.push_back(next);
                }
            }
        }
        (order.len() == self.succ.len()).then_some(order)
    }
}
