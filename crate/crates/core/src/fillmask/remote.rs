//! HTTP client for the fill-mask model server.
//!
//! Wire protocol (HTTP/1.1, JSON, UTF-8):
//!
//! | Endpoint | Request | Response |
//! |----------|---------|----------|
//! | `POST /v1/fill_mask` | [`FillRequest`] | [`FillResponse`] |
//! | `POST /v1/tokenize` | [`TokenizeRequest`] | [`TokenizeResponse`] |
//! | `GET /v1/health` | | [`HealthResponse`] |
//!
//! Requests carry whole tokens; the server does its own subword segmentation
//! of the context and maps each `[MASK]` to exactly one model position.
//! Scores are log-softmax values.

use std::sync::{Condvar, Mutex};
use std::time::Duration;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use super::{Candidate, FillError, FillModel, PieceTokenizer, PredictionSet};
use crate::masking::{MaskedInstance, MASK_TOKEN};
use crate::token::TokenSeq;

pub const MAX_TOP_K: usize = 100;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FillRequest {
    pub tokens: Vec<String>,
    pub top_k: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WireCandidate {
    pub piece: String,
    pub log_prob: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaskPrediction {
    /// Position of the sentinel in the request tokens.
    pub index: usize,
    pub candidates: Vec<WireCandidate>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FillResponse {
    pub masks: Vec<MaskPrediction>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TokenizeRequest {
    pub tokens: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TokenizeResponse {
    pub pieces: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HealthResponse {
    pub status: String,
    pub model_id: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RemoteConfig {
    pub base_url: String,
    pub timeout: Duration,
    /// Extra attempts after a transport failure.
    pub retries: u32,
    pub max_in_flight: usize,
}

impl RemoteConfig {
    pub fn new(base_url: impl Into<String>) -> Self {
        RemoteConfig { base_url: base_url.into(), timeout: Duration::from_secs(30), retries: 2, max_in_flight: 8 }
    }
}

/// Counting semaphore bounding concurrent requests.
struct Gate {
    free: Mutex<usize>,
    freed: Condvar,
}

struct Permit<'a>(&'a Gate);

impl Gate {
    fn new(n: usize) -> Self {
        Gate { free: Mutex::new(n.max(1)), freed: Condvar::new() }
    }

    fn acquire(&self) -> Permit<'_> {
        let mut free = self.free.lock().unwrap_or_else(|e| e.into_inner());
        while *free == 0 {
            free = self.freed.wait(free).unwrap_or_else(|e| e.into_inner());
        }
        *free -= 1;
        Permit(self)
    }
}

impl Drop for Permit<'_> {
    fn drop(&mut self) {
        *self.0.free.lock().unwrap_or_else(|e| e.into_inner()) += 1;
        self.0.freed.notify_one();
    }
}

pub struct RemoteClient {
    config: RemoteConfig,
    agent: ureq::Agent,
    gate: Gate,
}

impl std::fmt::Debug for RemoteClient {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("RemoteClient").field("config", &self.config).finish_non_exhaustive()
    }
}

impl RemoteClient {
    pub fn new(config: RemoteConfig) -> Result<Self, FillError> {
        if !(config.base_url.starts_with("http://") || config.base_url.starts_with("https://")) {
            return Err(FillError::Config(format!("endpoint {:?} is not an http(s) URL", config.base_url)));
        }
        if config.max_in_flight == 0 {
            return Err(FillError::Config("in-flight limit must be at least 1".into()));
        }
        let agent = ureq::AgentBuilder::new().timeout(config.timeout).build();
        let gate = Gate::new(config.max_in_flight);
        Ok(RemoteClient { config, agent, gate })
    }

    pub fn config(&self) -> &RemoteConfig {
        &self.config
    }

    fn url(&self, path: &str) -> String {
        format!("{}{}", self.config.base_url.trim_end_matches('/'), path)
    }

    fn call<T: DeserializeOwned>(&self, path: &str, body: Option<&impl Serialize>) -> Result<T, FillError> {
        let url = self.url(path);
        let mut last = None;
        for _ in 0..=self.config.retries {
            let outcome = {
                let _permit = self.gate.acquire();
                match body {
                    Some(body) => self.agent.post(&url).send_json(body),
                    None => self.agent.get(&url).call(),
                }
            };
            let err = match outcome {
                Ok(resp) => {
                    return resp
                        .into_json::<T>()
                        .map_err(|e| FillError::Protocol(format!("{path}: unreadable response: {e}")))
                }
                Err(ureq::Error::Status(code, resp)) => {
                    let detail = resp.into_string().unwrap_or_default();
                    if code >= 500 {
                        FillError::Transport(format!("{path}: HTTP {code} {detail}"))
                    } else {
                        return Err(FillError::Protocol(format!("{path}: HTTP {code} {detail}")));
                    }
                }
                Err(ureq::Error::Transport(t)) => FillError::Transport(format!("{path}: {t}")),
            };
            last = Some(err);
        }
        Err(last.expect("at least one attempt"))
    }

    pub fn health(&self) -> Result<HealthResponse, FillError> {
        self.call::<HealthResponse>("/v1/health", None::<&()>)
    }
}

impl PieceTokenizer for RemoteClient {
    fn pieces(&self, tokens: &TokenSeq) -> Result<Vec<String>, FillError> {
        if tokens.is_empty() {
            return Ok(Vec::new());
        }
        let req = TokenizeRequest { tokens: tokens.to_vec() };
        Ok(self.call::<TokenizeResponse>("/v1/tokenize", Some(&req))?.pieces)
    }
}

impl FillModel for RemoteClient {
    /// The server's checkpoint id, or the endpoint URL if the server cannot
    /// be reached.
    fn model_id(&self) -> String {
        self.health().map(|h| h.model_id).unwrap_or_else(|_| format!("remote:{}", self.config.base_url))
    }

    fn predict(&self, masked: &MaskedInstance, k: usize) -> Result<PredictionSet, FillError> {
        if !(1..=MAX_TOP_K).contains(&k) {
            return Err(FillError::Config(format!("top-k {k} outside 1..={MAX_TOP_K}")));
        }
        let req = FillRequest { tokens: masked.tokens.to_vec(), top_k: k };
        let resp: FillResponse = self.call("/v1/fill_mask", Some(&req))?;
        predictions_from_response(masked, resp, k)
    }
}

/// Checks a server response against the request it answers.
pub fn predictions_from_response(
    masked: &MaskedInstance,
    resp: FillResponse,
    k: usize,
) -> Result<PredictionSet, FillError> {
    let sentinels: Vec<usize> =
        masked.tokens.iter().enumerate().filter(|(_, t)| *t == MASK_TOKEN).map(|(i, _)| i).collect();
    if resp.masks.len() != sentinels.len() {
        return Err(FillError::Protocol(format!(
            "instance {}: sent {} masks, server answered {}",
            masked.instance_id,
            sentinels.len(),
            resp.masks.len()
        )));
    }
    let mut per_mask = Vec::with_capacity(resp.masks.len());
    for (mask, expected) in resp.masks.into_iter().zip(&sentinels) {
        if mask.index != *expected {
            return Err(FillError::Protocol(format!(
                "instance {}: expected mask at {}, server answered {}",
                masked.instance_id, expected, mask.index
            )));
        }
        if mask.candidates.len() > k {
            return Err(FillError::Protocol(format!(
                "mask {} has {} candidates for top-{k}",
                mask.index,
                mask.candidates.len()
            )));
        }
        let list = mask
            .candidates
            .into_iter()
            .map(|c| Candidate::new(c.piece, c.log_prob))
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| FillError::Protocol(e.to_string()))?;
        per_mask.push(list);
    }
    Ok(PredictionSet::ranked(per_mask, k))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::masking::MaskStrategy;

    fn masked() -> MaskedInstance {
        MaskedInstance {
            instance_id: "i".into(),
            strategy: MaskStrategy::OriginSpan,
            tokens: TokenSeq::from_whitespace("a [MASK] [MASK] b"),
            mask_positions: vec![1, 2],
            gold_replacement: TokenSeq::from_whitespace("x y"),
            gold_pieces: None,
        }
    }

    fn resp(json: &str) -> FillResponse {
        serde_json::from_str(json).unwrap()
    }

    #[test]
    fn accepts_well_formed_response() {
        let r = resp(
            r###"{"masks":[{"index":1,"candidates":[{"piece":"x","log_prob":-0.1},{"piece":"w","log_prob":-0.1}]},
                                  {"index":2,"candidates":[{"piece":"##y","log_prob":-2.0}]}]}"###,
        );
        let set = predictions_from_response(&masked(), r, 2).unwrap();
        assert_eq!(set.per_mask()[0][0].piece, "w");
        assert_eq!(set.per_mask()[1][0].piece, "##y");
    }

    #[test]
    fn mask_count_disagreement_is_protocol_error() {
        let r = resp(r#"{"masks":[{"index":1,"candidates":[]}]}"#);
        assert!(matches!(predictions_from_response(&masked(), r, 2), Err(FillError::Protocol(_))));
        let r = resp(r#"{"masks":[{"index":2,"candidates":[]},{"index":1,"candidates":[]}]}"#);
        assert!(matches!(predictions_from_response(&masked(), r, 2), Err(FillError::Protocol(_))));
    }

    #[test]
    fn bad_candidates_are_protocol_errors() {
        let r =
            resp(r#"{"masks":[{"index":1,"candidates":[{"piece":"x","log_prob":1.5}]},{"index":2,"candidates":[]}]}"#);
        assert!(matches!(predictions_from_response(&masked(), r, 2), Err(FillError::Protocol(_))));
        let r = resp(
            r#"{"masks":[{"index":1,"candidates":[{"piece":"x","log_prob":-1},{"piece":"y","log_prob":-2}]},{"index":2,"candidates":[]}]}"#,
        );
        assert!(matches!(predictions_from_response(&masked(), r, 1), Err(FillError::Protocol(_))));
    }

    #[test]
    fn rejects_bad_config() {
        assert!(matches!(RemoteClient::new(RemoteConfig::new("localhost:8601")), Err(FillError::Config(_))));
        let mut c = RemoteConfig::new("http://localhost:8601");
        c.max_in_flight = 0;
        assert!(RemoteClient::new(c).is_err());
    }

    #[test]
    fn defaults() {
        let c = RemoteConfig::new("http://x");
        assert_eq!((c.timeout, c.retries, c.max_in_flight), (Duration::from_secs(30), 2, 8));
    }
}
