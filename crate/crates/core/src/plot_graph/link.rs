use std::cmp::Ordering;

use super::{BranchGraph, BridgeGraph, EdgeKind, EventNode, GraphError, GraphParams, LinkScope, NodeId, WeightedEdge};
use crate::inference::{InferenceBackend, InferenceResponse, Relation};
use crate::scalar::Score;

/// Weight of the direct source-to-sink edge used when nothing links.
pub const FALLBACK_WEIGHT: f64 = 1e-9;

/// Link weight from its four ingredients:
/// `P_wants(v | u) / α_wants(u) + P_needs(u | v) / α_needs(v)`.
///
/// A missing probability contributes nothing; with both missing the pair
/// cannot be linked and the result is `None`.
pub fn combine_link_terms<S: Score>(
    wants_likelihood: Option<S>,
    wants_anchor: S,
    needs_likelihood: Option<S>,
    needs_anchor: S,
) -> Option<S> {
    if wants_likelihood.is_none() && needs_likelihood.is_none() {
        return None;
    }
    let forward = wants_likelihood.map_or_else(S::zero, |p| p / wants_anchor);
    let backward = needs_likelihood.map_or_else(S::zero, |p| p / needs_anchor);
    Some(forward + backward)
}

/// Scores linking forward node `u` to backward node `v`.
///
/// The wants term scores `v` as a continuation of `u`; the needs term scores
/// `u` as a precondition of `v`. Probabilities are looked up among all the
/// candidates the backend returns for the conditioning event.
pub fn link_weight<S: Score, B: InferenceBackend<S> + ?Sized>(
    u: &EventNode,
    v: &EventNode,
    backend: &B,
) -> Result<Option<S>, GraphError> {
    let wants = backend
        .infer(&u.text, Relation::Wants, usize::MAX)
        .map_err(GraphError::Link)?;
    let wants_anchor = backend
        .anchor_probability(&u.text, Relation::Wants)
        .map_err(GraphError::Link)?;
    let needs = backend
        .infer(&v.text, Relation::Needs, usize::MAX)
        .map_err(GraphError::Link)?;
    let needs_anchor = backend
        .anchor_probability(&v.text, Relation::Needs)
        .map_err(GraphError::Link)?;
    Ok(combine_link_terms(
        wants.likelihood_of(&v.text),
        wants_anchor,
        needs.likelihood_of(&u.text),
        needs_anchor,
    ))
}

struct Scored<S> {
    response: InferenceResponse<S>,
    anchor: S,
}

fn query<S: Score, B: InferenceBackend<S> + ?Sized>(
    backend: &B,
    node: &EventNode,
    relation: Relation,
) -> Result<Scored<S>, GraphError> {
    Ok(Scored {
        response: backend
            .infer(&node.text, relation, usize::MAX)
            .map_err(GraphError::Link)?,
        anchor: backend
            .anchor_probability(&node.text, relation)
            .map_err(GraphError::Link)?,
    })
}

/// Orders candidate targets: heavier first, then text, then shallower, then id.
fn better<S: Score>(a: (S, &EventNode), b: (S, &EventNode)) -> Ordering {
    b.0.partial_cmp(&a.0)
        .unwrap_or(Ordering::Equal)
        .then_with(|| a.1.text.cmp(&b.1.text))
        .then_with(|| a.1.depth.cmp(&b.1.depth))
        .then_with(|| a.1.id.cmp(&b.1.id))
}

/// Joins a forward and a backward branch into a bridge.
///
/// Every forward node in `scope` gets one link edge to its best-scoring
/// backward node. Forward nodes without any linkable partner stay unlinked
/// (pruning removes them). If no link exists at all, a single
/// [`FALLBACK_WEIGHT`] edge joins the two plot points directly.
///
/// In the returned bridge, forward nodes keep their ids and backward node
/// ids are shifted past them, so the source is `NodeId(0)` and the sink is
/// `NodeId(forward.nodes.len())`.
pub fn link_graphs<S: Score, B: InferenceBackend<S> + ?Sized>(
    forward: &BranchGraph<S>,
    backward: &BranchGraph<S>,
    backend: &B,
    params: GraphParams,
    scope: LinkScope,
) -> Result<BridgeGraph<S>, GraphError> {
    if forward.relation != Relation::Wants || backward.relation != Relation::Needs {
        return Err(GraphError::Invalid(
            "link_graphs expects a wants branch and a needs branch".into(),
        ));
    }
    let offset = forward.nodes.len() as u32;
    let shift = |id: NodeId| NodeId(id.0 + offset);

    let linked_from: Vec<NodeId> = match scope {
        LinkScope::Frontier => forward.frontier(),
        LinkScope::AllNodes => forward.nodes.iter().map(|n| n.id).collect(),
    };

    let targets = backward
        .nodes
        .iter()
        .map(|v| query(backend, v, Relation::Needs))
        .collect::<Result<Vec<_>, _>>()?;

    let mut links = Vec::new();
    for &u_id in &linked_from {
        let u = forward.node(u_id);
        let from_u = query(backend, u, Relation::Wants)?;
        let best = backward
            .nodes
            .iter()
            .zip(&targets)
            .filter_map(|(v, scored_v)| {
                combine_link_terms(
                    from_u.response.likelihood_of(&v.text),
                    from_u.anchor,
                    scored_v.response.likelihood_of(&u.text),
                    scored_v.anchor,
                )
                .map(|w| (w, v))
            })
            .min_by(|a, b| better(*a, *b));
        if let Some((weight, v)) = best {
            links.push(WeightedEdge {
                from: u_id,
                to: shift(v.id),
                weight,
                kind: EdgeKind::Link,
            });
        }
    }

    let fallback = links.is_empty();
    if fallback {
        links.push(WeightedEdge {
            from: NodeId(0),
            to: NodeId(offset),
            weight: S::from_f64_lossy(FALLBACK_WEIGHT),
            kind: EdgeKind::Link,
        });
    }

    let mut nodes = forward.nodes.clone();
    nodes.extend(backward.nodes.iter().map(|n| EventNode {
        id: shift(n.id),
        ..n.clone()
    }));
    let mut edges = forward.edges.clone();
    edges.extend(backward.edges.iter().map(|e| WeightedEdge {
        from: shift(e.from),
        to: shift(e.to),
        ..e.clone()
    }));
    edges.extend(links);

    Ok(BridgeGraph {
        source: NodeId(0),
        sink: NodeId(offset),
        nodes,
        edges,
        params,
        fallback,
    })
}
