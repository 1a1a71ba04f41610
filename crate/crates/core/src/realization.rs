//! Surface realization: plot points and inferred events become short
//! sentences ("Holmes decides go." / "Holmes wants to go."), and a walked
//! path becomes story text.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::extraction::{PlotOutline, PlotPoint};
use crate::inference::Relation;
use crate::plot_graph::{NodeId, NodeOrigin, StoryGraph};
use crate::scalar::Score;
use crate::walk::{validate_path, StoryPath};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum RealizationError {
    #[error("path does not match graph: {0}")]
    Contract(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TemplateSet {
    pub wants_connectives: Vec<String>,
    pub needs_connectives: Vec<String>,
    /// Cycle through the list by position; otherwise always use the first.
    pub cycle_deterministic: bool,
}

impl Default for TemplateSet {
    fn default() -> Self {
        let defaults: Vec<String> = ["wants", "tries", "begins", "starts"].map(String::from).to_vec();
        Self {
            wants_connectives: defaults.clone(),
            needs_connectives: defaults,
            cycle_deterministic: true,
        }
    }
}

impl TemplateSet {
    pub fn validate(&self) -> Result<(), String> {
        let blank = |list: &[String]| list.is_empty() || list.iter().any(|c| c.trim().is_empty());
        if blank(&self.wants_connectives) || blank(&self.needs_connectives) {
            return Err("connective lists must be non-empty and contain no blank entries".into());
        }
        Ok(())
    }

    fn connectives(&self, relation: Relation) -> &[String] {
        match relation {
            Relation::Wants => &self.wants_connectives,
            Relation::Needs => &self.needs_connectives,
        }
    }
}

fn sentence(words: &[&str]) -> String {
    let joined = words
        .iter()
        .flat_map(|w| w.split_whitespace())
        .collect::<Vec<_>>()
        .join(" ");
    let mut chars = joined.chars();
    let mut out = match chars.next() {
        Some(first) => first.to_uppercase().chain(chars).collect::<String>(),
        None => return String::new(),
    };
    if !out.ends_with(['.', '!', '?']) {
        out.push('.');
    }
    out
}

/// "<subject> <relation> <object>." with the object omitted when empty.
pub fn realize_plot_point(point: &PlotPoint) -> String {
    let t = &point.triple;
    sentence(&[&t.subject, &t.relation, &t.object])
}

/// "<subject> <connective> <tail>.", where the connective is picked by
/// `position` from the relation's list. A tail that already opens with one
/// of the listed connectives gets none added.
pub fn realize_inference(
    subject: &str,
    relation: Relation,
    tail: &str,
    templates: &TemplateSet,
    position: usize,
) -> String {
    let list = templates.connectives(relation);
    let first_word = tail.split_whitespace().next().unwrap_or_default().to_lowercase();
    let has_connective = list.iter().any(|c| {
        c.split_whitespace()
            .next()
            .is_some_and(|w| w.eq_ignore_ascii_case(&first_word))
    });
    if has_connective || list.is_empty() {
        return sentence(&[subject, tail]);
    }
    let index = if templates.cycle_deterministic {
        position % list.len()
    } else {
        0
    };
    sentence(&[subject, &list[index], tail])
}

/// Realizes a plot-point node from its graph text alone.
pub fn realize_event_text(text: &str) -> String {
    sentence(&[text])
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RealizedSentence {
    pub text: String,
    pub is_plot_point: bool,
    pub node_id: NodeId,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RealizedStory {
    pub seed: u64,
    pub sentences: Vec<RealizedSentence>,
}

impl RealizedStory {
    /// Sentences joined by single spaces.
    pub fn text(&self) -> String {
        self.sentences
            .iter()
            .map(|s| s.text.as_str())
            .collect::<Vec<_>>()
            .join(" ")
    }
}

/// Realizes every node of `path` in order. Plot points come from the
/// outline when one is given (it must match the graph's plot points), or
/// from the node text otherwise. Inferred sentences are numbered from 0 in
/// order of appearance; that number selects the connective.
pub fn realize_story<S: Score>(
    path: &StoryPath,
    graph: &StoryGraph<S>,
    outline: Option<&PlotOutline>,
    templates: &TemplateSet,
) -> Result<RealizedStory, RealizationError> {
    validate_path(graph, path).map_err(|e| RealizationError::Contract(e.to_string()))?;
    if let Some(outline) = outline {
        if outline.points.len() != graph.plot_points.len() {
            return Err(RealizationError::Contract(format!(
                "outline has {} plot points, graph has {}",
                outline.points.len(),
                graph.plot_points.len()
            )));
        }
    }

    let mut inferred = 0usize;
    let mut sentences = Vec::with_capacity(path.node_ids.len());
    for &id in &path.node_ids {
        let node = graph
            .node(id)
            .ok_or_else(|| RealizationError::Contract(format!("node {id} missing from graph")))?;
        let text = match node.origin.relation() {
            None => {
                let index = graph.plot_points.iter().position(|p| *p == id).ok_or_else(|| {
                    RealizationError::Contract(format!(
                        "node {id} is marked as a plot point but is not in the outline order"
                    ))
                })?;
                match outline {
                    Some(outline) => realize_plot_point(&outline.points[index]),
                    None => realize_event_text(&node.text),
                }
            }
            Some(relation) => {
                let s = realize_inference(&node.subject, relation, &node.text, templates, inferred);
                inferred += 1;
                s
            }
        };
        sentences.push(RealizedSentence {
            text,
            is_plot_point: node.origin == NodeOrigin::PlotPoint,
            node_id: id,
        });
    }
    Ok(RealizedStory {
        seed: path.seed,
        sentences,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::extraction::{CharSpan, Triple};

    fn point(subject: &str, relation: &str, object: &str) -> PlotPoint {
        PlotPoint {
            triple: Triple {
                subject: subject.into(),
                subject_span: CharSpan { start: 0, end: 1 },
                relation: relation.into(),
                object: object.into(),
                span: CharSpan { start: 0, end: 2 },
            },
            order_index: 0,
            subject_canonical: subject.into(),
        }
    }

    #[test]
    fn plot_point_sentences() {
        assert_eq!(
            realize_plot_point(&point("Holmes", "decides", "go")),
            "Holmes decides go."
        );
        assert_eq!(
            realize_plot_point(&point("Anna", "found", "a key")),
            "Anna found a key."
        );
        assert_eq!(
            realize_plot_point(&point("Queen", "is", "furious")),
            "Queen is furious."
        );
        assert_eq!(
            realize_plot_point(&point("the door", "creaked", "")),
            "The door creaked."
        );
    }

    #[test]
    fn inference_sentences() {
        let t = TemplateSet::default();
        assert_eq!(
            realize_inference("Holmes", Relation::Wants, "to go", &t, 0),
            "Holmes wants to go."
        );
        assert_eq!(
            realize_inference("Holmes", Relation::Wants, "wants to clean up", &t, 1),
            "Holmes wants to clean up."
        );
        assert_eq!(
            realize_inference("X", Relation::Wants, "to rest", &t, 0),
            "X wants to rest."
        );
        assert_eq!(
            realize_inference("Holmes", Relation::Wants, "to look around", &t, 2),
            "Holmes begins to look around."
        );
        assert_eq!(
            realize_inference("Queen", Relation::Needs, "to relax", &t, 5),
            "Queen tries to relax."
        );
        let fixed = TemplateSet {
            cycle_deterministic: false,
            ..TemplateSet::default()
        };
        assert_eq!(
            realize_inference("Holmes", Relation::Needs, "to go", &fixed, 3),
            "Holmes wants to go."
        );
    }

    #[test]
    fn template_validation() {
        assert!(TemplateSet::default().validate().is_ok());
        let empty = TemplateSet {
            wants_connectives: vec![],
            ..TemplateSet::default()
        };
        assert!(empty.validate().is_err());
    }
}
