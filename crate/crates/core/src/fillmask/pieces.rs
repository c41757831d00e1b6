use thiserror::Error;

use super::PredictionSet;
use crate::masking::MaskedInstance;
use crate::token::TokenSeq;

/// Prefix marking a continuation piece.
pub const CONTINUATION: &str = "##";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MergeError {
    #[error("first piece {0:?} is a continuation")]
    LeadingContinuation(String),
    #[error("piece {index} ({piece:?}) is empty or contains whitespace")]
    InvalidPiece { index: usize, piece: String },
}

/// Joins subword pieces into words: each `##` piece is glued onto the word
/// before it with the marker stripped.
pub fn merge_pieces<S: AsRef<str>>(pieces: &[S]) -> Result<TokenSeq, MergeError> {
    let mut words: Vec<String> = Vec::new();
    for (index, piece) in pieces.iter().enumerate() {
        let piece = piece.as_ref();
        if piece.is_empty() || piece.chars().any(char::is_whitespace) {
            return Err(MergeError::InvalidPiece { index, piece: piece.to_owned() });
        }
        match piece.strip_prefix(CONTINUATION) {
            Some(rest) => match words.last_mut() {
                Some(word) => word.push_str(rest),
                None => return Err(MergeError::LeadingContinuation(piece.to_owned())),
            },
            None => words.push(piece.to_owned()),
        }
    }
    Ok(TokenSeq::from_valid(words))
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AssembleError {
    #[error("rank must be at least 1")]
    ZeroRank,
    #[error("mask {mask_index} has {available} candidates, rank {rank} requested")]
    RankUnavailable { mask_index: usize, rank: usize, available: usize },
    #[error("{masks} masks but {lists} prediction lists")]
    MaskCount { masks: usize, lists: usize },
    #[error(transparent)]
    Merge(#[from] MergeError),
}

/// Builds the hypothesis sentence: every mask takes its rank-`rank`
/// candidate (1-based), the filled pieces are merged into words, and the
/// result is spliced back between the unmasked context.
pub fn assemble_hypothesis(
    masked: &MaskedInstance,
    predictions: &PredictionSet,
    rank: usize,
) -> Result<TokenSeq, AssembleError> {
    if rank == 0 {
        return Err(AssembleError::ZeroRank);
    }
    if predictions.mask_count() != masked.mask_count() {
        return Err(AssembleError::MaskCount { masks: masked.mask_count(), lists: predictions.mask_count() });
    }
    let mut filled = Vec::with_capacity(masked.mask_count());
    for (mask_index, list) in predictions.per_mask().iter().enumerate() {
        let candidate =
            list.get(rank - 1).ok_or(AssembleError::RankUnavailable { mask_index, rank, available: list.len() })?;
        filled.push(candidate.piece.as_str());
    }
    let words = merge_pieces(&filled)?;

    let (first, last) = match (masked.mask_positions.first(), masked.mask_positions.last()) {
        (Some(&f), Some(&l)) => (f, l),
        _ => return Ok(masked.tokens.clone()),
    };
    let tokens = &masked.tokens;
    let mut out = Vec::with_capacity(tokens.len());
    out.extend_from_slice(&tokens[..first]);
    out.extend(words.into_inner());
    out.extend_from_slice(&tokens[last + 1..]);
    Ok(TokenSeq::from_valid(out))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fillmask::Candidate;
    use crate::masking::MaskStrategy;

    fn words(s: &str) -> TokenSeq {
        TokenSeq::from_whitespace(s)
    }

    fn masked(src: &str, positions: Vec<usize>) -> MaskedInstance {
        MaskedInstance {
            instance_id: "i".into(),
            strategy: MaskStrategy::Single,
            tokens: words(src),
            mask_positions: positions,
            gold_replacement: words("x"),
            gold_pieces: None,
        }
    }

    fn single_candidates(pieces: &[&str]) -> PredictionSet {
        PredictionSet::ranked(pieces.iter().map(|p| vec![Candidate::new(*p, -1.0).unwrap()]).collect(), 5)
    }

    #[test]
    fn merges_continuations() {
        assert_eq!(merge_pieces(&["ad", "##e", "##quate"]).unwrap(), words("adequate"));
        assert_eq!(merge_pieces(&["allow"]).unwrap(), words("allow"));
        assert_eq!(merge_pieces(&["play", "##ing", "well"]).unwrap(), words("playing well"));
        assert_eq!(merge_pieces::<&str>(&[]).unwrap(), TokenSeq::empty());
    }

    #[test]
    fn merge_errors() {
        assert_eq!(merge_pieces(&["##ing"]), Err(MergeError::LeadingContinuation("##ing".into())));
        assert!(matches!(merge_pieces(&["a", ""]), Err(MergeError::InvalidPiece { index: 1, .. })));
        assert!(matches!(merge_pieces(&["a b"]), Err(MergeError::InvalidPiece { index: 0, .. })));
    }

    #[test]
    fn bus_stop() {
        let m = masked("Of course there 's also a number 8 bus [MASK] in front of the hotel", vec![9]);
        let hyp = assemble_hypothesis(&m, &single_candidates(&["stop"]), 1).unwrap();
        assert_eq!(hyp.join(), "Of course there 's also a number 8 bus stop in front of the hotel");
    }

    #[test]
    fn three_masks_merge_to_one_word() {
        let m = masked("a [MASK] [MASK] [MASK] b", vec![1, 2, 3]);
        let hyp = assemble_hypothesis(&m, &single_candidates(&["ad", "##e", "##quate"]), 1).unwrap();
        assert_eq!(hyp, words("a adequate b"));
    }

    #[test]
    fn rank_errors() {
        let m = masked("a [MASK] [MASK]", vec![1, 2]);
        let set = PredictionSet::ranked(
            vec![
                vec![Candidate::new("x", -1.0).unwrap(), Candidate::new("y", -2.0).unwrap()],
                vec![Candidate::new("z", -1.0).unwrap()],
            ],
            2,
        );
        assert_eq!(
            assemble_hypothesis(&m, &set, 2),
            Err(AssembleError::RankUnavailable { mask_index: 1, rank: 2, available: 1 })
        );
        assert_eq!(assemble_hypothesis(&m, &set, 0), Err(AssembleError::ZeroRank));
        assert_eq!(assemble_hypothesis(&m, &set, 1).unwrap(), words("a x z"));
        let leading = single_candidates(&["##s", "x"]);
        assert!(matches!(assemble_hypothesis(&m, &leading, 1), Err(AssembleError::Merge(_))));
    }
}
