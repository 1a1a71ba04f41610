use std::fmt::Write as _;

use super::{EdgeKind, GraphError, NodeOrigin, StoryGraph};
use crate::scalar::Score;

impl<S: Score> StoryGraph<S> {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("graph serialization is infallible")
    }

    /// Parses and validates a graph document.
    pub fn from_json(json: &str) -> Result<Self, GraphError> {
        let graph: StoryGraph<S> = serde_json::from_str(json).map_err(|e| GraphError::Invalid(e.to_string()))?;
        graph.validate()?;
        Ok(graph)
    }

    /// Graphviz rendering: plot points double-circled, link edges dashed.
    pub fn to_dot(&self) -> String {
        let mut out = String::from("digraph story {\n  rankdir=LR;\n  node [shape=box];\n");
        for node in &self.nodes {
            let shape = match node.origin {
                NodeOrigin::PlotPoint => " shape=doublecircle",
                NodeOrigin::ForwardInferred | NodeOrigin::BackwardInferred => "",
            };
            let _ = writeln!(out, "  {} [label=\"{}\"{shape}];", node.id, escape(&node.text));
        }
        for edge in &self.edges {
            let style = match edge.kind {
                EdgeKind::Link => " style=dashed",
                EdgeKind::Forward | EdgeKind::Backward => "",
            };
            let _ = writeln!(
                out,
                "  {} -> {} [label=\"{:.4}\"{style}];",
                edge.from,
                edge.to,
                edge.weight.to_f64_lossy()
            );
        }
        out.push_str("}\n");
        out
    }
}

fn escape(text: &str) -> String {
    text.replace('\\', "\\\\").replace('"', "\\\"").replace('\n', "\\n")
}
