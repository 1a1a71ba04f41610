use std::collections::BTreeMap;

use rayon::prelude::*;

use super::{
    build_backward, build_forward, link_graphs, BridgeGraph, BridgeSummary, EventNode, GraphError, GraphParams,
    LinkScope, NodeId, NodeOrigin, StoryGraph, WeightedEdge,
};
use crate::extraction::PlotOutline;
use crate::inference::{normalize_event, InferenceBackend};
use crate::scalar::Score;

/// Drops every node and edge that is not on some source-to-sink path.
/// Node ids are preserved.
pub fn prune_dead_ends<S: Score>(bridge: &BridgeGraph<S>) -> Result<BridgeGraph<S>, GraphError> {
    let topo = bridge.topology();
    let from_source = topo.descendants(bridge.source);
    if !from_source.contains(&bridge.sink) {
        return Err(GraphError::Disconnected);
    }
    let to_sink = topo.ancestors(bridge.sink);
    let keep = |id: &NodeId| from_source.contains(id) && to_sink.contains(id);

    Ok(BridgeGraph {
        nodes: bridge.nodes.iter().filter(|n| keep(&n.id)).cloned().collect(),
        edges: bridge
            .edges
            .iter()
            .filter(|e| keep(&e.from) && keep(&e.to))
            .cloned()
            .collect(),
        ..bridge.clone()
    })
}

/// Grows, links and prunes the bridge between two plot-point phrases.
pub fn build_bridge<S: Score, B: InferenceBackend<S> + ?Sized>(
    from_event: &str,
    to_event: &str,
    subject: &str,
    backend: &B,
    params: GraphParams,
    scope: LinkScope,
) -> Result<BridgeGraph<S>, GraphError> {
    let forward = build_forward(from_event, subject, backend, params)?;
    let backward = build_backward(to_event, subject, backend, params)?;
    let linked = link_graphs(&forward, &backward, backend, params, scope)?;
    prune_dead_ends(&linked)
}

fn same_plot_point(a: &EventNode, b: &EventNode) -> bool {
    a.origin == NodeOrigin::PlotPoint
        && b.origin == NodeOrigin::PlotPoint
        && normalize_event(&a.text) == normalize_event(&b.text)
}

/// Chains bridges into one graph. The sink of bridge `i` and the source of
/// bridge `i + 1` become a single node. Ids are reassigned in bridge order,
/// each bridge's nodes in their local id order.
pub fn assemble<S: Score>(bridges: &[BridgeGraph<S>]) -> Result<StoryGraph<S>, GraphError> {
    let first = bridges
        .first()
        .ok_or_else(|| GraphError::Assembly("no bridges to assemble".into()))?;
    let params = first.params;

    let mut nodes: Vec<EventNode> = Vec::new();
    let mut edges: Vec<WeightedEdge<S>> = Vec::new();
    let mut plot_points: Vec<NodeId> = Vec::new();
    let mut summaries = Vec::with_capacity(bridges.len());
    let mut previous_sink: Option<&EventNode> = None;

    for (index, bridge) in bridges.iter().enumerate() {
        let source = bridge
            .node(bridge.source)
            .ok_or_else(|| GraphError::Assembly(format!("bridge {index} lacks its source node")))?;
        let sink = bridge
            .node(bridge.sink)
            .ok_or_else(|| GraphError::Assembly(format!("bridge {index} lacks its sink node")))?;
        if let Some(prev) = previous_sink {
            if !same_plot_point(prev, source) {
                return Err(GraphError::Assembly(format!(
                    "bridge {index} starts at {:?} but bridge {} ends at {:?}",
                    source.text,
                    index - 1,
                    prev.text
                )));
            }
        }
        if bridge.params != params {
            return Err(GraphError::Assembly(format!(
                "bridge {index} was built with different parameters"
            )));
        }

        let mut local: BTreeMap<NodeId, NodeId> = BTreeMap::new();
        if index > 0 {
            local.insert(bridge.source, *plot_points.last().expect("previous sink recorded"));
        }
        let mut ordered: Vec<&EventNode> = bridge.nodes.iter().collect();
        ordered.sort_by_key(|n| n.id);
        for node in ordered {
            if local.contains_key(&node.id) {
                continue;
            }
            let id = NodeId(nodes.len() as u32);
            local.insert(node.id, id);
            let is_endpoint = node.id == bridge.source || node.id == bridge.sink;
            nodes.push(EventNode {
                id,
                bridge: (!is_endpoint).then_some(index),
                ..node.clone()
            });
            if node.id == bridge.source {
                plot_points.push(id);
            }
        }
        let sink_id = local[&bridge.sink];
        plot_points.push(sink_id);

        for edge in &bridge.edges {
            let (Some(&from), Some(&to)) = (local.get(&edge.from), local.get(&edge.to)) else {
                return Err(GraphError::Assembly(format!(
                    "bridge {index} has an edge to a missing node"
                )));
            };
            edges.push(WeightedEdge {
                from,
                to,
                ..edge.clone()
            });
        }
        summaries.push(BridgeSummary {
            source: local[&bridge.source],
            sink: sink_id,
            k: bridge.params.k,
            n: bridge.params.n,
            fallback: bridge.fallback,
        });
        previous_sink = Some(sink);
    }

    edges.sort_by_key(|e| (e.from, e.to, e.kind));
    let graph = StoryGraph {
        plot_points,
        nodes,
        edges,
        params,
        bridges: summaries,
    };
    if graph.topology().topological_order().is_none() {
        return Err(GraphError::Assembly("assembled graph contains a cycle".into()));
    }
    Ok(graph)
}

/// Builds every bridge of the outline (in parallel) and assembles them.
pub fn build_story_graph<S: Score, B: InferenceBackend<S> + ?Sized>(
    outline: &PlotOutline,
    backend: &B,
    params: GraphParams,
    scope: LinkScope,
) -> Result<StoryGraph<S>, GraphError> {
    params.validate()?;
    if outline.points.len() < 2 {
        return Err(GraphError::Assembly("an outline needs at least two plot points".into()));
    }
    let phrases: Vec<String> = outline.points.iter().map(|p| p.phrase()).collect();
    let bridges = phrases
        .par_windows(2)
        .map(|pair| build_bridge(&pair[0], &pair[1], &outline.character, backend, params, scope))
        .collect::<Result<Vec<_>, _>>()?;
    assemble(&bridges)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::inference::KnowledgeTable;
    use crate::plot_graph::EdgeKind;

    fn table(src: &str) -> KnowledgeTable<f64> {
        KnowledgeTable::parse(src).unwrap()
    }

    #[test]
    fn prune_removes_unlinked_subtree() {
        // forward p1 -> a, p1 -> c -> d; backward a -> b -> p2.
        // Only frontier node a links (b needs a); d and c are dead ends, and
        // the backward copy of a is unreachable from p1.
        let t = table(
            "p1\twants\ta\t0.6\np1\twants\tc\t0.4\nc\twants\td\t0.5\n\
             p2\tneeds\tb\t0.5\nb\tneeds\ta\t0.5\n",
        );
        let params = GraphParams { k: 2, n: 2 };
        let f = build_forward("p1", "X", &t, params).unwrap();
        let b = build_backward("p2", "X", &t, params).unwrap();
        let linked = link_graphs(&f, &b, &t, params, LinkScope::Frontier).unwrap();
        assert_eq!(linked.nodes.len(), 7);
        let pruned = prune_dead_ends(&linked).unwrap();
        let texts: Vec<_> = pruned.nodes.iter().map(|n| n.text.as_str()).collect();
        assert_eq!(texts, ["p1", "a", "p2", "b"]);
        assert_eq!(prune_dead_ends(&pruned).unwrap(), pruned);
    }

    #[test]
    fn prune_keeps_minimal_fallback_bridge() {
        let t = table("");
        let bridge =
            build_bridge::<f64, _>("p1", "p2", "X", &t, GraphParams { k: 3, n: 3 }, LinkScope::Frontier).unwrap();
        assert!(bridge.fallback);
        assert_eq!(bridge.nodes.len(), 2);
        assert_eq!(bridge.edges.len(), 1);
        assert_eq!(prune_dead_ends(&bridge).unwrap(), bridge);
    }

    #[test]
    fn prune_rejects_disconnected_bridge() {
        let t = table("");
        let params = GraphParams { k: 1, n: 1 };
        let mut linked = link_graphs(
            &build_forward::<f64, _>("p1", "X", &t, params).unwrap(),
            &build_backward("p2", "X", &t, params).unwrap(),
            &t,
            params,
            LinkScope::Frontier,
        )
        .unwrap();
        linked.edges.clear();
        assert!(matches!(prune_dead_ends(&linked), Err(GraphError::Disconnected)));
    }

    #[test]
    fn assemble_shares_plot_points() {
        let t = table("");
        let params = GraphParams { k: 1, n: 1 };
        let b1 = build_bridge::<f64, _>("p1", "p2", "X", &t, params, LinkScope::Frontier).unwrap();
        let b2 = build_bridge::<f64, _>("p2", "p3", "X", &t, params, LinkScope::Frontier).unwrap();
        let g = assemble(&[b1.clone(), b2.clone()]).unwrap();
        assert_eq!(g.plot_points, [NodeId(0), NodeId(1), NodeId(2)]);
        assert_eq!(g.nodes.len(), 3);
        assert_eq!(g.edges.len(), 2);
        assert!(g.edges.iter().all(|e| e.kind == EdgeKind::Link));
        g.validate().unwrap();

        assert!(matches!(assemble(&[b2, b1]), Err(GraphError::Assembly(_))));
        assert!(matches!(assemble::<f64>(&[]), Err(GraphError::Assembly(_))));
    }

    #[test]
    fn single_bridge_is_preserved() {
        let t = table("p1\twants\ta\t0.5\na\twants\tb\t0.5\np2\tneeds\tb\t0.5\n");
        let params = GraphParams { k: 1, n: 1 };
        let bridge = build_bridge::<f64, _>("p1", "p2", "X", &t, params, LinkScope::Frontier).unwrap();
        let g = assemble(std::slice::from_ref(&bridge)).unwrap();
        assert_eq!(g.nodes.len(), bridge.nodes.len());
        assert_eq!(g.edges.len(), bridge.edges.len());
        let mut a: Vec<_> = bridge
            .nodes
            .iter()
            .map(|n| (n.text.clone(), n.origin, n.depth))
            .collect();
        let mut b: Vec<_> = g.nodes.iter().map(|n| (n.text.clone(), n.origin, n.depth)).collect();
        a.sort();
        b.sort();
        assert_eq!(a, b);
        assert_eq!(g.plot_points.len(), 2);
    }
}
