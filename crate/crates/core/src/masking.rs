//! Masking a single-edit instance for the fill model.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::edit::{apply_edits, EditKind};
use crate::expansion::SingleEditInstance;
use crate::fillmask::{FillError, PieceTokenizer};
use crate::token::TokenSeq;

/// The mask sentinel.
pub const MASK_TOKEN: &str = "[MASK]";

/// How many sentinels replace the residual span.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MaskStrategy {
    /// One sentinel per source token in the span (at least one).
    #[serde(rename = "origin")]
    OriginSpan,
    /// One sentinel per model piece of the gold replacement.
    #[serde(rename = "target")]
    TargetLength,
    /// Always a single sentinel.
    Single,
}

impl MaskStrategy {
    pub const ALL: [MaskStrategy; 3] = [MaskStrategy::OriginSpan, MaskStrategy::TargetLength, MaskStrategy::Single];

    pub fn as_str(self) -> &'static str {
        match self {
            MaskStrategy::OriginSpan => "origin",
            MaskStrategy::TargetLength => "target",
            MaskStrategy::Single => "single",
        }
    }
}

impl fmt::Display for MaskStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for MaskStrategy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "origin" | "origin-span" => Ok(MaskStrategy::OriginSpan),
            "target" | "target-length" => Ok(MaskStrategy::TargetLength),
            "single" => Ok(MaskStrategy::Single),
            other => Err(format!("unknown masking strategy {other:?} (expected origin, target or single)")),
        }
    }
}

#[derive(Debug, Error)]
pub enum MaskError {
    #[error("instance {instance_id}: residual is a deletion; apply it with apply_deletion instead of masking")]
    Deletion { instance_id: String },
    #[error("instance {instance_id}: residual is a {kind}, not a deletion")]
    NotDeletion { instance_id: String, kind: EditKind },
    #[error("the target-length strategy needs a piece tokenizer")]
    MissingTokenizer,
    #[error("instance {instance_id}: tokenizer returned no pieces for the replacement")]
    NoPieces { instance_id: String },
    #[error("instance {instance_id}: source already contains the {MASK_TOKEN} sentinel")]
    SentinelInSource { instance_id: String },
    #[error("instance {instance_id}: {source}")]
    Tokenizer { instance_id: String, source: FillError },
}

/// A token sequence with a contiguous run of sentinels standing in for the
/// residual span.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MaskedInstance {
    pub instance_id: String,
    pub strategy: MaskStrategy,
    pub tokens: TokenSeq,
    pub mask_positions: Vec<usize>,
    pub gold_replacement: TokenSeq,
    /// Model pieces of the replacement, one per mask. Only for
    /// [`MaskStrategy::TargetLength`].
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gold_pieces: Option<Vec<String>>,
}

impl MaskedInstance {
    pub fn mask_count(&self) -> usize {
        self.mask_positions.len()
    }

    /// What each mask is scored against at mask level: the gold pieces when
    /// the masks were sized from them, otherwise the gold words.
    pub fn mask_gold(&self) -> Vec<String> {
        match &self.gold_pieces {
            Some(pieces) => pieces.clone(),
            None => self.gold_replacement.to_vec(),
        }
    }
}

/// Replaces the residual span of `instance` with sentinels according to
/// `strategy`. Insertions splice the sentinels into the gap.
///
/// `tokenizer` is only consulted for [`MaskStrategy::TargetLength`].
pub fn mask_instance(
    instance: &SingleEditInstance,
    strategy: MaskStrategy,
    tokenizer: Option<&dyn PieceTokenizer>,
) -> Result<MaskedInstance, MaskError> {
    let residual = &instance.residual;
    let instance_id = || instance.instance_id.clone();
    if residual.kind() == EditKind::Deletion {
        return Err(MaskError::Deletion { instance_id: instance_id() });
    }
    if instance.source.iter().any(|t| t == MASK_TOKEN) {
        return Err(MaskError::SentinelInSource { instance_id: instance_id() });
    }
    let mut gold_pieces = None;
    let count = match strategy {
        MaskStrategy::OriginSpan => residual.span_len().max(1),
        MaskStrategy::Single => 1,
        MaskStrategy::TargetLength => {
            let tokenizer = tokenizer.ok_or(MaskError::MissingTokenizer)?;
            let pieces = tokenizer
                .pieces(residual.replacement())
                .map_err(|source| MaskError::Tokenizer { instance_id: instance_id(), source })?;
            if pieces.is_empty() {
                return Err(MaskError::NoPieces { instance_id: instance_id() });
            }
            let n = pieces.len();
            gold_pieces = Some(pieces);
            n
        }
    };

    let source = &instance.source;
    let start = residual.start();
    let mut tokens = Vec::with_capacity(source.len() + count);
    tokens.extend_from_slice(&source[..start]);
    tokens.extend(std::iter::repeat_n(MASK_TOKEN.to_owned(), count));
    tokens.extend_from_slice(&source[residual.end()..]);

    Ok(MaskedInstance {
        instance_id: instance_id(),
        strategy,
        tokens: TokenSeq::from_valid(tokens),
        mask_positions: (start..start + count).collect(),
        gold_replacement: residual.replacement().clone(),
        gold_pieces,
    })
}

/// Resolves a deletion residual directly, without the fill model.
pub fn apply_deletion(instance: &SingleEditInstance) -> Result<TokenSeq, MaskError> {
    let kind = instance.residual.kind();
    if kind != EditKind::Deletion {
        return Err(MaskError::NotDeletion { instance_id: instance.instance_id.clone(), kind });
    }
    Ok(apply_edits(&instance.source, &instance.gold()).expect("residual is range-checked on construction"))
}
