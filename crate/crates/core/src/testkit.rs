//! Random fixtures for property tests and the acceptance suite.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::extraction::{CharSpan, PlotOutline, PlotPoint, Triple};
use crate::inference::{KnowledgeTable, Relation};
use crate::plot_graph::{build_story_graph, GraphParams, LinkScope, StoryGraph};
use crate::scalar::Score;

/// Shape of a generated table.
#[derive(Debug, Clone, Copy)]
pub struct TableShape {
    pub vocabulary: usize,
    pub max_candidates: usize,
    /// Probability that an (event, relation) key has any entry.
    pub density: f64,
    /// Probability that a key carries an explicit anchor.
    pub anchor_rate: f64,
}

impl Default for TableShape {
    fn default() -> Self {
        Self {
            vocabulary: 40,
            max_candidates: 4,
            density: 0.8,
            anchor_rate: 0.3,
        }
    }
}

pub fn event_name(i: usize) -> String {
    format!("event {i}")
}

fn likelihood<S: Score>(rng: &mut ChaCha8Rng) -> S {
    // multiples of 1/64 keep ties common enough to exercise tie-breaking
    S::from_f64_lossy(rng.gen_range(1..=64) as f64 / 64.0)
}

/// A table over `event 0 .. event V-1` plus the given extra events, with
/// candidates drawn from the same vocabulary.
pub fn random_table<S: Score>(seed: u64, shape: TableShape, extra_events: &[String]) -> KnowledgeTable<S> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut vocab: Vec<String> = (0..shape.vocabulary).map(event_name).collect();
    vocab.extend(extra_events.iter().cloned());
    let mut table = KnowledgeTable::new();
    for event in &vocab {
        for relation in [Relation::Wants, Relation::Needs] {
            if !rng.gen_bool(shape.density) {
                continue;
            }
            let count = rng.gen_range(0..=shape.max_candidates);
            for tail in vocab.choose_multiple(&mut rng, count) {
                table
                    .insert(event, relation, tail, likelihood(&mut rng))
                    .expect("generated rows are valid");
            }
            if rng.gen_bool(shape.anchor_rate) {
                table
                    .set_anchor(event, relation, likelihood(&mut rng))
                    .expect("generated anchors are valid");
            }
        }
    }
    table
}

/// A table in which every event reachable within `depth` rounds has `k`
/// fresh candidates under both relations, so branches reach full size.
pub fn saturated_table<S: Score>(roots: &[&str], k: usize, depth: usize) -> KnowledgeTable<S> {
    let mut table = KnowledgeTable::new();
    for relation in [Relation::Wants, Relation::Needs] {
        let mut layer: Vec<String> = roots.iter().map(|r| r.to_string()).collect();
        for _ in 0..depth {
            let mut next = Vec::new();
            for event in &layer {
                for j in 0..k {
                    let tail = format!("{event} / {relation} {j}");
                    let score = S::from_f64_lossy(1.0 / (j + 1) as f64);
                    table.insert(event, relation, &tail, score).expect("valid row");
                    next.push(tail);
                }
            }
            layer = next;
        }
    }
    table
}

/// An outline whose plot-point phrases are `subject act i`.
pub fn synthetic_outline(points: usize) -> PlotOutline {
    let character = "Subject".to_string();
    PlotOutline {
        points: (0..points)
            .map(|i| PlotPoint {
                triple: Triple {
                    subject: character.clone(),
                    subject_span: CharSpan {
                        start: i * 10,
                        end: i * 10 + 7,
                    },
                    relation: "acts".into(),
                    object: format!("{i}"),
                    span: CharSpan {
                        start: i * 10,
                        end: i * 10 + 9,
                    },
                },
                order_index: i,
                subject_canonical: character.clone(),
            })
            .collect(),
        character,
        source_length: points * 10,
    }
}

/// A pruned story graph over a random outline of 2..=`max_points` plot
/// points and a random table that links plot points into the vocabulary.
pub fn random_story_graph<S: Score>(seed: u64, max_points: usize, params: GraphParams) -> StoryGraph<S> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
    let outline = synthetic_outline(rng.gen_range(2..=max_points.max(2)));
    let phrases: Vec<String> = outline.points.iter().map(|p| p.phrase()).collect();
    let shape = TableShape {
        vocabulary: rng.gen_range(6..30),
        ..TableShape::default()
    };
    let table = random_table::<S>(seed, shape, &phrases);
    build_story_graph(&outline, &table, params, LinkScope::Frontier).expect("table backends never fail")
}
