//! Story generation by seeded random walks from the first plot point to
//! the last, plus exhaustive path enumeration.

use std::collections::BTreeMap;

use rand::distributions::{Distribution, WeightedIndex};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::plot_graph::{NodeId, StoryGraph, WeightedEdge};
use crate::scalar::Score;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WalkMode {
    /// Next edge drawn with probability proportional to its weight.
    #[default]
    WeightProportional,
    Uniform,
}

impl std::str::FromStr for WalkMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "weighted" | "weight_proportional" => Ok(Self::WeightProportional),
            "uniform" => Ok(Self::Uniform),
            _ => Err(format!("unknown walk mode {s:?} (expected weighted or uniform)")),
        }
    }
}

impl std::fmt::Display for WalkMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::WeightProportional => "weighted",
            Self::Uniform => "uniform",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct WalkPolicy {
    pub mode: WalkMode,
    pub seed: u64,
    /// Defaults to the graph's node count + 1, which no DAG walk can exceed.
    pub max_steps: Option<usize>,
}

impl WalkPolicy {
    pub fn new(mode: WalkMode, seed: u64) -> Self {
        Self {
            mode,
            seed,
            max_steps: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StoryPath {
    pub seed: u64,
    pub node_ids: Vec<NodeId>,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum WalkError {
    #[error("walk reached {node}, which has no way forward (graph not pruned)")]
    DeadEnd { node: NodeId },
    #[error("walk exceeded its budget of {max_steps} steps")]
    StepBudgetExceeded { max_steps: usize },
    #[error("step budget {max_steps} is below the plot-point count {plot_points}")]
    BudgetTooSmall { max_steps: usize, plot_points: usize },
    #[error("invalid path: {0}")]
    InvalidPath(String),
}

/// Out-edges per node, sorted by target id, with weights as `f64` for sampling.
pub struct WalkIndex {
    start: NodeId,
    end: NodeId,
    node_count: usize,
    plot_points: usize,
    out: BTreeMap<NodeId, Vec<(NodeId, f64)>>,
}

impl WalkIndex {
    pub fn new<S: Score>(graph: &StoryGraph<S>) -> Self {
        let out = graph
            .adjacency()
            .into_iter()
            .map(|(id, edges)| {
                (
                    id,
                    edges
                        .iter()
                        .map(|e: &&WeightedEdge<S>| (e.to, e.weight.to_f64_lossy()))
                        .collect(),
                )
            })
            .collect();
        Self {
            start: graph.first_plot_point(),
            end: graph.last_plot_point(),
            node_count: graph.nodes.len(),
            plot_points: graph.plot_points.len(),
            out,
        }
    }

    pub fn walk(&self, policy: &WalkPolicy) -> Result<StoryPath, WalkError> {
        let max_steps = policy.max_steps.unwrap_or(self.node_count + 1);
        if max_steps < self.plot_points {
            return Err(WalkError::BudgetTooSmall {
                max_steps,
                plot_points: self.plot_points,
            });
        }
        let mut rng = ChaCha8Rng::seed_from_u64(policy.seed);
        let mut current = self.start;
        let mut node_ids = vec![current];
        while current != self.end {
            if node_ids.len() >= max_steps {
                return Err(WalkError::StepBudgetExceeded { max_steps });
            }
            let out = self.out.get(&current).map(Vec::as_slice).unwrap_or_default();
            let next = match (out.len(), policy.mode) {
                (0, _) => return Err(WalkError::DeadEnd { node: current }),
                (1, _) => out[0].0,
                (_, WalkMode::Uniform) => out[rng.gen_range(0..out.len())].0,
                (_, WalkMode::WeightProportional) => {
                    let dist = WeightedIndex::new(out.iter().map(|(_, w)| *w))
                        .map_err(|_| WalkError::DeadEnd { node: current })?;
                    out[dist.sample(&mut rng)].0
                }
            };
            node_ids.push(next);
            current = next;
        }
        Ok(StoryPath {
            seed: policy.seed,
            node_ids,
        })
    }
}

/// One seeded walk from the first plot point to the last.
pub fn walk<S: Score>(graph: &StoryGraph<S>, policy: &WalkPolicy) -> Result<StoryPath, WalkError> {
    WalkIndex::new(graph).walk(policy)
}

/// `count` independent walks; walk `j` uses seed `base_seed + j`.
pub fn walk_batch<S: Score>(
    graph: &StoryGraph<S>,
    mode: WalkMode,
    base_seed: u64,
    count: usize,
) -> Result<Vec<StoryPath>, WalkError> {
    let index = WalkIndex::new(graph);
    (0..count as u64)
        .into_par_iter()
        .map(|j| index.walk(&WalkPolicy::new(mode, base_seed.wrapping_add(j))))
        .collect()
}

/// Checks a path against the graph: starts at the first plot point, ends at
/// the last, follows edges and meets every plot point in order.
pub fn validate_path<S: Score>(graph: &StoryGraph<S>, path: &StoryPath) -> Result<(), WalkError> {
    let invalid = |m: String| Err(WalkError::InvalidPath(m));
    let (Some(first), Some(last)) = (path.node_ids.first(), path.node_ids.last()) else {
        return invalid("empty path".into());
    };
    if *first != graph.first_plot_point() {
        return invalid(format!("path starts at {first}, not the first plot point"));
    }
    if *last != graph.last_plot_point() {
        return invalid(format!("path ends at {last}, not the last plot point"));
    }
    let topo = graph.topology();
    for pair in path.node_ids.windows(2) {
        if !topo.successors(pair[0]).any(|s| s == pair[1]) {
            return invalid(format!("no edge {} -> {}", pair[0], pair[1]));
        }
    }
    let visited: Vec<NodeId> = path
        .node_ids
        .iter()
        .copied()
        .filter(|id| graph.plot_points.contains(id))
        .collect();
    if visited != graph.plot_points {
        return invalid("plot points are not visited exactly once in order".into());
    }
    Ok(())
}

/// Every path from the first plot point to the last, in lexicographic order
/// of node ids, truncated after `limit` paths.
pub fn enumerate_paths<S: Score>(graph: &StoryGraph<S>, limit: usize) -> Vec<StoryPath> {
    let topo = graph.topology();
    let end = graph.last_plot_point();
    let mut paths = Vec::new();
    let mut stack = vec![graph.first_plot_point()];
    // explicit DFS; each frame remembers which successors are still to try
    let mut pending: Vec<Vec<NodeId>> = vec![topo
        .successors(stack[0])
        .collect::<Vec<_>>()
        .into_iter()
        .rev()
        .collect()];

    if limit == 0 {
        return paths;
    }
    if stack[0] == end {
        paths.push(StoryPath {
            seed: 0,
            node_ids: stack,
        });
        return paths;
    }
    while let Some(frame) = pending.last_mut() {
        match frame.pop() {
            Some(next) => {
                stack.push(next);
                if next == end {
                    paths.push(StoryPath {
                        seed: 0,
                        node_ids: stack.clone(),
                    });
                    if paths.len() >= limit {
                        break;
                    }
                    stack.pop();
                } else {
                    pending.push(topo.successors(next).collect::<Vec<_>>().into_iter().rev().collect());
                }
            }
            None => {
                pending.pop();
                stack.pop();
            }
        }
    }
    paths
}

/// Number of first-to-last paths, by dynamic programming over a topological
/// order. Saturates at `u128::MAX`.
pub fn count_paths<S: Score>(graph: &StoryGraph<S>) -> u128 {
    let topo = graph.topology();
    let Some(order) = topo.topological_order() else {
        return 0;
    };
    let end = graph.last_plot_point();
    let mut ways: BTreeMap<NodeId, u128> = BTreeMap::new();
    for id in order.into_iter().rev() {
        let count = if id == end {
            1
        } else {
            topo.successors(id)
                .map(|s| ways.get(&s).copied().unwrap_or(0))
                .fold(0u128, u128::saturating_add)
        };
        ways.insert(id, count);
    }
    ways.get(&graph.first_plot_point()).copied().unwrap_or(0)
}
