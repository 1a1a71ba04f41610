use std::collections::{BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use super::{EdgeKind, EventNode, GraphError, GraphParams, NodeId, NodeOrigin, WeightedEdge};
use crate::inference::{normalize_event, InferenceBackend, Relation};
use crate::scalar::Score;

/// One side of a bridge: the forward "wants" DAG grown from a plot point, or
/// the backward "needs" DAG grown into one. The root is always `NodeId(0)`
/// and ids follow breadth-first discovery order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BranchGraph<S> {
    pub relation: Relation,
    pub nodes: Vec<EventNode>,
    pub edges: Vec<WeightedEdge<S>>,
}

impl<S: Score> BranchGraph<S> {
    pub fn root(&self) -> &EventNode {
        &self.nodes[0]
    }

    pub fn node(&self, id: NodeId) -> &EventNode {
        &self.nodes[id.0 as usize]
    }

    /// Nodes that were never expanded further: those at full depth and the
    /// ones the backend had nothing for. Only meaningful for forward graphs.
    pub fn frontier(&self) -> Vec<NodeId> {
        let expanded: BTreeSet<NodeId> = self
            .edges
            .iter()
            .map(|e| match self.relation {
                Relation::Wants => e.from,
                Relation::Needs => e.to,
            })
            .collect();
        self.nodes
            .iter()
            .map(|n| n.id)
            .filter(|id| !expanded.contains(id))
            .collect()
    }
}

/// Grows the forward DAG from `event` by `n` rounds of "wants" queries.
pub fn build_forward<S: Score, B: InferenceBackend<S> + ?Sized>(
    event: &str,
    subject: &str,
    backend: &B,
    params: GraphParams,
) -> Result<BranchGraph<S>, GraphError> {
    grow(event, subject, backend, params, Relation::Wants)
}

/// Grows the backward DAG into `event` by `n` rounds of "needs" queries.
/// Edges point from each precondition to the event that needed it.
pub fn build_backward<S: Score, B: InferenceBackend<S> + ?Sized>(
    event: &str,
    subject: &str,
    backend: &B,
    params: GraphParams,
) -> Result<BranchGraph<S>, GraphError> {
    grow(event, subject, backend, params, Relation::Needs)
}

fn grow<S: Score, B: InferenceBackend<S> + ?Sized>(
    event: &str,
    subject: &str,
    backend: &B,
    params: GraphParams,
    relation: Relation,
) -> Result<BranchGraph<S>, GraphError> {
    params.validate()?;
    let (origin, kind) = match relation {
        Relation::Wants => (NodeOrigin::ForwardInferred, EdgeKind::Forward),
        Relation::Needs => (NodeOrigin::BackwardInferred, EdgeKind::Backward),
    };

    let mut nodes = vec![EventNode {
        id: NodeId(0),
        text: event.to_string(),
        origin: NodeOrigin::PlotPoint,
        depth: 0,
        subject: subject.to_string(),
        bridge: None,
    }];
    let mut edges: Vec<WeightedEdge<S>> = Vec::new();
    // normalized text -> (node, depth); a repeated inference merges only with a
    // node of the same depth so every edge goes from depth d to d + 1
    let mut seen: HashMap<String, (NodeId, u32)> = HashMap::from([(normalize_event(event), (NodeId(0), 0))]);
    let mut layer = vec![NodeId(0)];

    for depth in 0..params.n {
        let child_depth = depth as u32 + 1;
        let mut next_layer = Vec::new();
        for parent in layer {
            let text = nodes[parent.0 as usize].text.clone();
            let response = backend
                .infer(&text, relation, params.k)
                .map_err(|source| GraphError::Backend {
                    relation,
                    depth,
                    source,
                })?;
            for candidate in response.candidates.into_iter().take(params.k) {
                let key = normalize_event(&candidate.tail);
                if key.is_empty() {
                    continue;
                }
                let child = match seen.get(&key) {
                    Some(&(id, d)) if d == child_depth => id,
                    Some(_) => continue,
                    None => {
                        let id = NodeId(nodes.len() as u32);
                        nodes.push(EventNode {
                            id,
                            text: candidate.tail.split_whitespace().collect::<Vec<_>>().join(" "),
                            origin,
                            depth: child_depth,
                            subject: subject.to_string(),
                            bridge: None,
                        });
                        seen.insert(key, (id, child_depth));
                        next_layer.push(id);
                        id
                    }
                };
                let (from, to) = match relation {
                    Relation::Wants => (parent, child),
                    Relation::Needs => (child, parent),
                };
                if !edges.iter().any(|e| e.from == from && e.to == to) {
                    edges.push(WeightedEdge {
                        from,
                        to,
                        weight: candidate.likelihood,
                        kind,
                    });
                }
            }
        }
        layer = next_layer;
    }

    Ok(BranchGraph { relation, nodes, edges })
}
