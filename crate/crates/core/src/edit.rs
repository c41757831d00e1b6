//! Span edits over token sequences and the algebra for applying them.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::token::TokenSeq;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EditError {
    #[error("null edit at gap {gap}: an insertion needs a nonempty replacement")]
    Null { gap: usize },
    #[error("edit span ({start}, {end}) is reversed")]
    Reversed { start: usize, end: usize },
    #[error("edit #{index} ({start}, {end}) is out of range for a sentence of {len} tokens")]
    OutOfRange { index: usize, start: usize, end: usize, len: usize },
    #[error("edits ({a_start}, {a_end}) and ({b_start}, {b_end}) overlap")]
    Overlap { a_start: usize, a_end: usize, b_start: usize, b_end: usize },
    #[error("two insertions at gap {gap}")]
    DuplicateInsertion { gap: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EditKind {
    Substitution,
    Insertion,
    Deletion,
}

impl EditKind {
    pub fn as_str(self) -> &'static str {
        match self {
            EditKind::Substitution => "substitution",
            EditKind::Insertion => "insertion",
            EditKind::Deletion => "deletion",
        }
    }
}

impl fmt::Display for EditKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Replace the half-open token span `start..end` of a source sentence with
/// `replacement`.
///
/// The kind is a function of the span and replacement, so it cannot drift
/// out of sync with them.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "RawEdit", into = "RawEdit")]
pub struct Edit {
    start: usize,
    end: usize,
    replacement: TokenSeq,
}

#[derive(Serialize, Deserialize)]
struct RawEdit {
    start: usize,
    end: usize,
    replacement: TokenSeq,
}

impl TryFrom<RawEdit> for Edit {
    type Error = EditError;

    fn try_from(raw: RawEdit) -> Result<Self, EditError> {
        Edit::new(raw.start, raw.end, raw.replacement)
    }
}

impl From<Edit> for RawEdit {
    fn from(edit: Edit) -> RawEdit {
        RawEdit { start: edit.start, end: edit.end, replacement: edit.replacement }
    }
}

impl Edit {
    pub fn new(start: usize, end: usize, replacement: TokenSeq) -> Result<Self, EditError> {
        if start > end {
            return Err(EditError::Reversed { start, end });
        }
        if start == end && replacement.is_empty() {
            return Err(EditError::Null { gap: start });
        }
        Ok(Edit { start, end, replacement })
    }

    pub fn start(&self) -> usize {
        self.start
    }

    pub fn end(&self) -> usize {
        self.end
    }

    pub fn span_len(&self) -> usize {
        self.end - self.start
    }

    pub fn replacement(&self) -> &TokenSeq {
        &self.replacement
    }

    pub fn kind(&self) -> EditKind {
        match (self.start == self.end, self.replacement.is_empty()) {
            (true, _) => EditKind::Insertion,
            (false, true) => EditKind::Deletion,
            (false, false) => EditKind::Substitution,
        }
    }

    /// Change in sentence length caused by applying this edit.
    pub fn delta(&self) -> isize {
        self.replacement.len() as isize - self.span_len() as isize
    }

    /// The same edit with its span moved by `offset` tokens.
    pub fn shifted(&self, offset: isize) -> Edit {
        let shift = |i: usize| usize::try_from(i as isize + offset).expect("shifted edit index went negative");
        Edit { start: shift(self.start), end: shift(self.end), replacement: self.replacement.clone() }
    }

    pub fn same_span(&self, other: &Edit) -> bool {
        self.start == other.start && self.end == other.end
    }
}

impl fmt::Display for Edit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}) -> {:?}", self.start, self.end, self.replacement.join())
    }
}

/// A position-sorted set of non-overlapping edits.
///
/// Edits may touch at a boundary and at most one insertion may occupy any
/// gap. An insertion at gap `g` sorts before a span starting at `g`.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<Edit>", into = "Vec<Edit>")]
pub struct EditSet(Vec<Edit>);

impl EditSet {
    pub fn new(mut edits: Vec<Edit>) -> Result<Self, EditError> {
        edits.sort_by_key(|e| (e.start, e.end));
        for pair in edits.windows(2) {
            let (a, b) = (&pair[0], &pair[1]);
            if b.start < a.end {
                return Err(EditError::Overlap { a_start: a.start, a_end: a.end, b_start: b.start, b_end: b.end });
            }
            if a.kind() == EditKind::Insertion && b.kind() == EditKind::Insertion && a.start == b.start {
                return Err(EditError::DuplicateInsertion { gap: a.start });
            }
        }
        Ok(EditSet(edits))
    }

    pub fn empty() -> Self {
        EditSet(Vec::new())
    }

    pub fn single(edit: Edit) -> Self {
        EditSet(vec![edit])
    }

    pub fn as_slice(&self) -> &[Edit] {
        &self.0
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Edit> {
        self.0.iter()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Checks every span against a sentence of `len` tokens.
    pub fn check_range(&self, len: usize) -> Result<(), EditError> {
        match self.0.iter().position(|e| e.end > len) {
            Some(index) => {
                let e = &self.0[index];
                Err(EditError::OutOfRange { index, start: e.start, end: e.end, len })
            }
            None => Ok(()),
        }
    }

    /// A new set without the edit at `index`.
    pub fn without(&self, index: usize) -> EditSet {
        let mut edits = self.0.clone();
        edits.remove(index);
        EditSet(edits)
    }
}

impl TryFrom<Vec<Edit>> for EditSet {
    type Error = EditError;

    fn try_from(edits: Vec<Edit>) -> Result<Self, EditError> {
        EditSet::new(edits)
    }
}

impl From<EditSet> for Vec<Edit> {
    fn from(set: EditSet) -> Vec<Edit> {
        set.0
    }
}

impl<'a> IntoIterator for &'a EditSet {
    type Item = &'a Edit;
    type IntoIter = std::slice::Iter<'a, Edit>;

    fn into_iter(self) -> Self::IntoIter {
        self.0.iter()
    }
}

/// Applies `edits` to `source` left to right.
///
/// Output length is `len(source) + sum(len(replacement) - span_len)`.
pub fn apply_edits(source: &TokenSeq, edits: &EditSet) -> Result<TokenSeq, EditError> {
    edits.check_range(source.len())?;
    let mut out: Vec<String> = Vec::with_capacity(source.len());
    let mut cursor = 0;
    for edit in edits {
        out.extend_from_slice(&source[cursor..edit.start]);
        out.extend(edit.replacement.iter().cloned());
        cursor = edit.end;
    }
    out.extend_from_slice(&source[cursor..]);
    Ok(TokenSeq::from_valid(out))
}

/// One annotator's gold corrections for a source sentence.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnnotatedSentence {
    pub source: TokenSeq,
    pub gold: EditSet,
    pub annotator_id: u32,
}

impl AnnotatedSentence {
    pub fn new(source: TokenSeq, gold: EditSet, annotator_id: u32) -> Result<Self, EditError> {
        gold.check_range(source.len())?;
        Ok(AnnotatedSentence { source, gold, annotator_id })
    }

    /// The fully corrected sentence.
    pub fn corrected(&self) -> TokenSeq {
        apply_edits(&self.source, &self.gold).expect("gold edits are range-checked on construction")
    }
}
