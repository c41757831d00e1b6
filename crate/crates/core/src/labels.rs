//! Token labels for error identification.
//!
//! Internally insertions live on gaps between tokens, which keeps an
//! insertion next to another edit representable. [`flatten_labels`] gives the
//! flat four-label view (`remain`, `substitution`, `insert`, `delete`) where the
//! token after an insertion gap carries `insert`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::edit::EditKind;
use crate::expansion::SingleEditInstance;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TokenLabel {
    Remain,
    Substitution,
    Delete,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FlatLabel {
    Remain,
    Substitution,
    Insert,
    Delete,
}

impl From<TokenLabel> for FlatLabel {
    fn from(label: TokenLabel) -> FlatLabel {
        match label {
            TokenLabel::Remain => FlatLabel::Remain,
            TokenLabel::Substitution => FlatLabel::Substitution,
            TokenLabel::Delete => FlatLabel::Delete,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("gap {gap} is out of range for a sentence of {len} tokens")]
pub struct GapOutOfRange {
    pub gap: usize,
    pub len: usize,
}

/// Per-token labels plus insertion lengths keyed by gap index.
///
/// Gap `g` is the position before token `g`; gap `len` is the end of the
/// sentence. This is what a stage-one tagger produces.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelSeq {
    token_labels: Vec<TokenLabel>,
    gap_insertions: BTreeMap<usize, usize>,
}

impl LabelSeq {
    pub fn new(token_labels: Vec<TokenLabel>, gap_insertions: BTreeMap<usize, usize>) -> Result<Self, GapOutOfRange> {
        let len = token_labels.len();
        if let Some(&gap) = gap_insertions.keys().find(|&&g| g > len) {
            return Err(GapOutOfRange { gap, len });
        }
        Ok(LabelSeq { token_labels, gap_insertions })
    }

    pub fn token_labels(&self) -> &[TokenLabel] {
        &self.token_labels
    }

    pub fn gap_insertions(&self) -> &BTreeMap<usize, usize> {
        &self.gap_insertions
    }
}

/// Oracle labels: the residual edit of `instance` projected onto its tokens.
pub fn project_labels(instance: &SingleEditInstance) -> LabelSeq {
    let residual = &instance.residual;
    let mut token_labels = vec![TokenLabel::Remain; instance.source.len()];
    let mut gap_insertions = BTreeMap::new();
    match residual.kind() {
        EditKind::Substitution => token_labels[residual.start()..residual.end()].fill(TokenLabel::Substitution),
        EditKind::Deletion => token_labels[residual.start()..residual.end()].fill(TokenLabel::Delete),
        EditKind::Insertion => {
            gap_insertions.insert(residual.start(), residual.replacement().len());
        }
    }
    LabelSeq { token_labels, gap_insertions }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FlatLabels {
    pub labels: Vec<FlatLabel>,
    /// An insertion sits at the end of the sentence, after the last token.
    pub end_insertion: bool,
    /// Some insertion gap is followed by a token that already carries a
    /// non-remain label, so the flat view cannot show it.
    pub ambiguous: bool,
}

pub fn flatten_labels(labels: &LabelSeq) -> FlatLabels {
    let mut flat: Vec<FlatLabel> = labels.token_labels.iter().copied().map(FlatLabel::from).collect();
    let mut end_insertion = false;
    let mut ambiguous = false;
    for &gap in labels.gap_insertions.keys() {
        match flat.get_mut(gap) {
            None => end_insertion = true,
            Some(label @ FlatLabel::Remain) => *label = FlatLabel::Insert,
            Some(_) => ambiguous = true,
        }
    }
    FlatLabels { labels: flat, end_insertion, ambiguous }
}

/// A span recovered from labels, without its replacement text.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabeledSpan {
    pub start: usize,
    pub end: usize,
    pub kind: EditKind,
    /// Number of tokens to insert; zero for substitutions and deletions.
    pub insert_len: usize,
}

/// Reads edit spans back out of labels: each maximal run of equal non-remain
/// token labels, plus one zero-width span per gap insertion, in position order.
pub fn decode_spans(labels: &LabelSeq) -> Vec<LabeledSpan> {
    let mut spans: Vec<LabeledSpan> = labels
        .gap_insertions
        .iter()
        .map(|(&gap, &len)| LabeledSpan { start: gap, end: gap, kind: EditKind::Insertion, insert_len: len })
        .collect();
    let tokens = &labels.token_labels;
    let mut i = 0;
    while i < tokens.len() {
        let kind = match tokens[i] {
            TokenLabel::Remain => {
                i += 1;
                continue;
            }
            TokenLabel::Substitution => EditKind::Substitution,
            TokenLabel::Delete => EditKind::Deletion,
        };
        let start = i;
        while i < tokens.len() && tokens[i] == tokens[start] {
            i += 1;
        }
        spans.push(LabeledSpan { start, end: i, kind, insert_len: 0 });
    }
    spans.sort_by_key(|s| (s.start, s.end));
    spans
}
