//! Character-centric plot graphs.
//!
//! The pipeline turns an annotated story into a single-character plot
//! outline, bridges each pair of adjacent plot points with commonsense
//! "wants" (forward) and "needs" (backward) inferences, links the two sides
//! of each bridge by normalized likelihood, and generates new stories as
//! seeded random walks from the first plot point to the last.
//!
//! Numeric types are generic over [`Score`]; the aliases at the crate root
//! fix them to `f64`.

pub mod extraction;
pub mod inference;
pub mod metrics;
pub mod plot_graph;
pub mod realization;
pub mod scalar;
#[cfg(feature = "test-support")]
pub mod testkit;
pub mod walk;

pub use extraction::{
    align_plot_points, extract_outline, parse_annotated_story, select_cluster, AlignOptions, AnnotatedStory, CharSpan,
    ClusterStrategy, CorefCluster, ExtractionError, Mention, PlotOutline, PlotPoint, SpanMatch, Triple,
};
pub use inference::{normalize_event, InferenceBackend, InferenceError, MissingKeyPolicy, Relation};
pub use plot_graph::{EdgeKind, GraphError, GraphParams, LinkScope, NodeId, NodeOrigin};
pub use realization::{RealizationError, TemplateSet};
pub use scalar::Score;
pub use walk::{StoryPath, WalkError, WalkMode, WalkPolicy};

pub type KnowledgeTable = inference::KnowledgeTable<f64>;
pub type HttpBackend = inference::HttpBackend<f64>;
pub type InferenceResponse = inference::InferenceResponse<f64>;
pub type InferenceCandidate = inference::InferenceCandidate<f64>;
pub type BranchGraph = plot_graph::BranchGraph<f64>;
pub type BridgeGraph = plot_graph::BridgeGraph<f64>;
pub type StoryGraph = plot_graph::StoryGraph<f64>;
pub type WeightedEdge = plot_graph::WeightedEdge<f64>;
pub type CorpusStats = metrics::CorpusStats<f64>;
