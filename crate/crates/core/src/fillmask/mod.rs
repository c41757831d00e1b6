//! Fill-mask backends and candidate handling.
//!
//! A [`FillModel`] returns ranked subword candidates for every sentinel in a
//! [`MaskedInstance`]. Pieces follow the WordPiece convention: a leading `##`
//! marks a continuation of the previous piece.
//!
//! Three backends are provided: [`GoldMock`] and [`LexiconMock`] for offline
//! runs, and [`RemoteClient`] for a model server speaking the JSON protocol in
//! [`remote`].

mod mock;
mod pieces;
pub mod remote;

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::masking::MaskedInstance;
use crate::token::TokenSeq;

pub use mock::{fit_pieces, GoldMock, LexiconMock, MockWordPiece};
pub use pieces::{assemble_hypothesis, merge_pieces, AssembleError, MergeError, CONTINUATION};
pub use remote::{RemoteClient, RemoteConfig};

#[derive(Debug, Error)]
pub enum FillError {
    /// Connection failure, timeout or server-side 5xx. Worth retrying.
    #[error("transport error: {0}")]
    Transport(String),
    #[error("protocol error: {0}")]
    Protocol(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("invalid candidate: {0}")]
    InvalidCandidate(String),
}

impl FillError {
    pub fn is_retryable(&self) -> bool {
        matches!(self, FillError::Transport(_))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub piece: String,
    pub log_prob: f64,
}

impl Candidate {
    pub fn new(piece: impl Into<String>, log_prob: f64) -> Result<Self, FillError> {
        let piece = piece.into();
        if piece.is_empty() {
            return Err(FillError::InvalidCandidate("empty piece".into()));
        }
        if !log_prob.is_finite() || log_prob > 0.0 {
            return Err(FillError::InvalidCandidate(format!("piece {piece:?} has log-probability {log_prob}")));
        }
        Ok(Candidate { piece, log_prob })
    }

    pub fn is_continuation(&self) -> bool {
        self.piece.starts_with(CONTINUATION)
    }
}

/// Higher log-probability first; equal scores in ascending piece order.
fn rank_order(a: &Candidate, b: &Candidate) -> Ordering {
    b.log_prob.total_cmp(&a.log_prob).then_with(|| a.piece.cmp(&b.piece))
}

/// Ranked candidates for each mask position, in mask order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionSet {
    per_mask: Vec<Vec<Candidate>>,
    k: usize,
}

impl PredictionSet {
    /// Sorts each list into rank order and keeps the top `k`.
    pub fn ranked(per_mask: Vec<Vec<Candidate>>, k: usize) -> Self {
        let per_mask = per_mask
            .into_iter()
            .map(|mut list| {
                list.sort_by(rank_order);
                list.truncate(k);
                list
            })
            .collect();
        PredictionSet { per_mask, k }
    }

    pub fn per_mask(&self) -> &[Vec<Candidate>] {
        &self.per_mask
    }

    pub fn mask_count(&self) -> usize {
        self.per_mask.len()
    }

    /// Requested depth.
    pub fn k(&self) -> usize {
        self.k
    }

    /// Reorders each mask's list by the permutation `order(mask, list)`
    /// returns. Used by rerankers, so the result need not be score-sorted.
    pub(crate) fn permuted(&self, mut order: impl FnMut(usize, &[Candidate]) -> Vec<usize>) -> PredictionSet {
        let per_mask = self
            .per_mask
            .iter()
            .enumerate()
            .map(|(mask, list)| {
                let perm = order(mask, list);
                debug_assert_eq!(perm.len(), list.len());
                perm.into_iter().map(|i| list[i].clone()).collect()
            })
            .collect();
        PredictionSet { per_mask, k: self.k }
    }
}

/// Splits whole-word tokens into model pieces.
pub trait PieceTokenizer: Send + Sync {
    fn pieces(&self, tokens: &TokenSeq) -> Result<Vec<String>, FillError>;

    fn count_pieces(&self, tokens: &TokenSeq) -> Result<usize, FillError> {
        Ok(self.pieces(tokens)?.len())
    }
}

/// A masked language model.
///
/// Implementations must be deterministic for fixed inputs and safe to call
/// from several threads. Real backends only read `masked.tokens` and
/// `masked.mask_positions`; the gold fields are there for the oracle mock.
pub trait FillModel: PieceTokenizer {
    /// Identifies the backing checkpoint in run manifests.
    fn model_id(&self) -> String;

    /// Ranked candidates for every mask, at most `k` each.
    fn predict(&self, masked: &MaskedInstance, k: usize) -> Result<PredictionSet, FillError>;
}

/// Runs `model` on `masked` and checks the shape of what comes back.
pub fn fill(model: &dyn FillModel, masked: &MaskedInstance, k: usize) -> Result<PredictionSet, FillError> {
    if masked.mask_positions.is_empty() {
        return Err(FillError::Config(format!("instance {} has no mask positions", masked.instance_id)));
    }
    if k == 0 {
        return Err(FillError::Config("top-k must be at least 1".into()));
    }
    let predictions = model.predict(masked, k)?;
    if predictions.mask_count() != masked.mask_count() {
        return Err(FillError::Protocol(format!(
            "instance {}: {} masks sent, {} prediction lists returned",
            masked.instance_id,
            masked.mask_count(),
            predictions.mask_count()
        )));
    }
    if let Some(over) = predictions.per_mask().iter().position(|l| l.len() > k) {
        return Err(FillError::Protocol(format!("mask {over} returned more than {k} candidates")));
    }
    Ok(predictions)
}
