use std::marker::PhantomData;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::{check_query, InferenceBackend, InferenceCandidate, InferenceError, InferenceResponse, Relation};
use crate::scalar::Score;

pub const DEFAULT_TIMEOUT: Duration = Duration::from_millis(5000);

#[derive(Serialize)]
struct InferRequest<'a> {
    event: &'a str,
    relation: Relation,
    k: usize,
}

#[derive(Deserialize)]
struct WireCandidate {
    tail: String,
    likelihood: f64,
}

#[derive(Deserialize)]
struct WireResponse {
    candidates: Vec<WireCandidate>,
    anchor_likelihood: f64,
}

/// Backend that forwards queries to an inference sidecar over HTTP.
///
/// `POST {base}/infer` with `{event, relation, k}`; any non-200 status or
/// network failure is a transport error. No retries.
pub struct HttpBackend<S> {
    endpoint: String,
    agent: ureq::Agent,
    _score: PhantomData<fn() -> S>,
}

impl<S> std::fmt::Debug for HttpBackend<S> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("HttpBackend").field("endpoint", &self.endpoint).finish()
    }
}

impl<S: Score> HttpBackend<S> {
    pub fn new(base_url: &str, timeout: Duration) -> Self {
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(timeout))
            .http_status_as_error(false)
            .build()
            .into();
        Self {
            endpoint: format!("{}/infer", base_url.trim_end_matches('/')),
            agent,
            _score: PhantomData,
        }
    }

    pub fn endpoint(&self) -> &str {
        &self.endpoint
    }
}

impl<S: Score> InferenceBackend<S> for HttpBackend<S> {
    fn infer(&self, event: &str, relation: Relation, k: usize) -> Result<InferenceResponse<S>, InferenceError> {
        check_query(event, k)?;
        let body = InferRequest { event, relation, k };
        let mut response = self
            .agent
            .post(&self.endpoint)
            .send_json(&body)
            .map_err(|e| InferenceError::Transport(format!("{}: {e}", self.endpoint)))?;
        let status = response.status().as_u16();
        if status != 200 {
            return Err(InferenceError::Transport(format!(
                "{} returned HTTP {status}",
                self.endpoint
            )));
        }
        let wire: WireResponse = response
            .body_mut()
            .read_json()
            .map_err(|e| InferenceError::Protocol(e.to_string()))?;
        let parsed = InferenceResponse {
            candidates: wire
                .candidates
                .into_iter()
                .map(|c| InferenceCandidate {
                    tail: c.tail,
                    likelihood: S::from_f64_lossy(c.likelihood),
                })
                .collect(),
            anchor_likelihood: S::from_f64_lossy(wire.anchor_likelihood),
        };
        parsed.validate(k).map_err(InferenceError::Protocol)?;
        Ok(parsed)
    }
}
