//! Commonsense inference backends.
//!
//! A backend answers "what does a character *want* after this event" and
//! "what did a character *need* before it", returning scored candidate
//! phrases plus the anchor likelihood used to normalize link weights.

mod http;
mod table;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scalar::Score;

pub use http::{HttpBackend, DEFAULT_TIMEOUT};
pub use table::{KnowledgeTable, MissingKeyPolicy, TableEntry};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Relation {
    /// Forward cause: what the character wants after the event.
    Wants,
    /// Backward enablement: what the character needed before the event.
    Needs,
}

impl Relation {
    pub fn as_str(self) -> &'static str {
        match self {
            Relation::Wants => "wants",
            Relation::Needs => "needs",
        }
    }
}

impl fmt::Display for Relation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Relation {
    type Err = InferenceError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "wants" | "xwant" => Ok(Relation::Wants),
            "needs" | "xneed" => Ok(Relation::Needs),
            other => Err(InferenceError::Argument(format!("unknown relation {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InferenceCandidate<S> {
    pub tail: String,
    pub likelihood: S,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InferenceResponse<S> {
    pub candidates: Vec<InferenceCandidate<S>>,
    pub anchor_likelihood: S,
}

impl<S: Score> InferenceResponse<S> {
    pub fn empty() -> Self {
        Self {
            candidates: Vec::new(),
            anchor_likelihood: S::one(),
        }
    }

    /// Likelihood of `tail` among the candidates, compared after normalization.
    pub fn likelihood_of(&self, tail: &str) -> Option<S> {
        let key = normalize_event(tail);
        self.candidates
            .iter()
            .find(|c| normalize_event(&c.tail) == key)
            .map(|c| c.likelihood)
    }

    /// Checks the response invariants: non-empty tails, scores in (0, 1],
    /// descending order, at most `k` candidates.
    pub fn validate(&self, k: usize) -> Result<(), String> {
        if self.candidates.len() > k {
            return Err(format!("{} candidates returned for k = {k}", self.candidates.len()));
        }
        if !self.anchor_likelihood.is_probability() {
            return Err(format!("anchor likelihood {} outside (0, 1]", self.anchor_likelihood));
        }
        for c in &self.candidates {
            if c.tail.trim().is_empty() {
                return Err("empty candidate tail".into());
            }
            if !c.likelihood.is_probability() {
                return Err(format!("likelihood {} for {:?} outside (0, 1]", c.likelihood, c.tail));
            }
        }
        if self.candidates.windows(2).any(|w| w[0].likelihood < w[1].likelihood) {
            return Err("candidates are not sorted by descending likelihood".into());
        }
        Ok(())
    }
}

#[derive(Debug, Error)]
pub enum InferenceError {
    #[error("invalid argument: {0}")]
    Argument(String),
    #[error("no knowledge for ({relation}, {event:?})")]
    MissingKey { event: String, relation: Relation },
    #[error("transport error: {0}")]
    Transport(String),
    #[error("malformed backend response: {0}")]
    Protocol(String),
    #[error("i/o error reading {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("table schema error at row {row}: {message}")]
    Schema { row: usize, message: String },
    #[error("table validation error at row {row}: {message}")]
    Validation { row: usize, message: String },
}

/// Source of commonsense inferences. Implementations are read-only after
/// construction and shared across threads while bridges are built.
pub trait InferenceBackend<S: Score>: Send + Sync {
    /// Up to `k` candidates for `event` under `relation`, best first.
    fn infer(&self, event: &str, relation: Relation, k: usize) -> Result<InferenceResponse<S>, InferenceError>;

    /// Likelihood of the anchor token ("to") for this query.
    fn anchor_probability(&self, event: &str, relation: Relation) -> Result<S, InferenceError> {
        Ok(self.infer(event, relation, 1)?.anchor_likelihood)
    }
}

impl<S: Score, B: InferenceBackend<S> + ?Sized> InferenceBackend<S> for &B {
    fn infer(&self, event: &str, relation: Relation, k: usize) -> Result<InferenceResponse<S>, InferenceError> {
        (**self).infer(event, relation, k)
    }

    fn anchor_probability(&self, event: &str, relation: Relation) -> Result<S, InferenceError> {
        (**self).anchor_probability(event, relation)
    }
}

impl<S: Score, B: InferenceBackend<S> + ?Sized> InferenceBackend<S> for Box<B> {
    fn infer(&self, event: &str, relation: Relation, k: usize) -> Result<InferenceResponse<S>, InferenceError> {
        (**self).infer(event, relation, k)
    }

    fn anchor_probability(&self, event: &str, relation: Relation) -> Result<S, InferenceError> {
        (**self).anchor_probability(event, relation)
    }
}

pub(crate) fn check_query(event: &str, k: usize) -> Result<(), InferenceError> {
    if k == 0 {
        return Err(InferenceError::Argument("k must be at least 1".into()));
    }
    if event.trim().is_empty() {
        return Err(InferenceError::Argument("event must not be empty".into()));
    }
    Ok(())
}

/// Key normalization for events: lowercase, collapse whitespace, strip
/// terminal punctuation.
pub fn normalize_event(text: &str) -> String {
    let collapsed = text.split_whitespace().collect::<Vec<_>>().join(" ").to_lowercase();
    collapsed
        .trim_end_matches(|c: char| matches!(c, '.' | '!' | '?' | ';' | ',' | ':') || c.is_whitespace())
        .to_string()
}
