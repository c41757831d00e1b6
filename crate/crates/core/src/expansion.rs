//! Single-edit dataset expansion.
//!
//! A sentence with `n` gold edits is turned into sentences carrying exactly one
//! residual error: every other correction is applied and the remaining edit is
//! re-indexed onto the partially corrected sentence.

use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::edit::{apply_edits, AnnotatedSentence, Edit, EditError, EditKind, EditSet};
use crate::token::TokenSeq;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Scheme {
    #[serde(rename = "each-edit")]
    EachEdit,
    #[serde(rename = "last-edit")]
    LastEdit,
}

impl Scheme {
    pub const ALL: [Scheme; 2] = [Scheme::EachEdit, Scheme::LastEdit];

    pub fn as_str(self) -> &'static str {
        match self {
            Scheme::EachEdit => "each-edit",
            Scheme::LastEdit => "last-edit",
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Scheme {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "each-edit" | "each" => Ok(Scheme::EachEdit),
            "last-edit" | "last" => Ok(Scheme::LastEdit),
            other => Err(format!("unknown scheme {other:?} (expected each-edit or last-edit)")),
        }
    }
}

/// A sentence with exactly one remaining gold error.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SingleEditInstance {
    pub instance_id: String,
    pub origin_sentence_id: String,
    pub scheme: Scheme,
    pub source: TokenSeq,
    pub residual: Edit,
}

impl SingleEditInstance {
    pub fn new(
        instance_id: String,
        origin_sentence_id: String,
        scheme: Scheme,
        source: TokenSeq,
        residual: Edit,
    ) -> Result<Self, EditError> {
        EditSet::single(residual.clone()).check_range(source.len())?;
        Ok(SingleEditInstance { instance_id, origin_sentence_id, scheme, source, residual })
    }

    pub fn gold(&self) -> EditSet {
        EditSet::single(self.residual.clone())
    }

    /// The fully corrected sentence.
    pub fn reference(&self) -> TokenSeq {
        apply_edits(&self.source, &self.gold()).expect("residual is range-checked on construction")
    }

    /// Deletions need no model prediction and are skipped by default during
    /// evaluation.
    pub fn is_deletion(&self) -> bool {
        self.residual.kind() == EditKind::Deletion
    }
}

/// Applies every gold edit except the one at `index` and re-indexes it.
fn isolate(sentence: &AnnotatedSentence, index: usize) -> (TokenSeq, Edit) {
    let edits = sentence.gold.as_slice();
    let offset: isize = edits[..index].iter().map(Edit::delta).sum();
    let source = apply_edits(&sentence.source, &sentence.gold.without(index))
        .expect("gold edits are range-checked on construction");
    (source, edits[index].shifted(offset))
}

/// One instance per gold edit; instance `i` leaves only edit `i` uncorrected.
pub fn expand_each_edit(sentence: &AnnotatedSentence, origin_id: &str) -> Vec<SingleEditInstance> {
    (0..sentence.gold.len())
        .map(|i| {
            let (source, residual) = isolate(sentence, i);
            SingleEditInstance {
                instance_id: format!("{origin_id}-e{i}"),
                origin_sentence_id: origin_id.to_owned(),
                scheme: Scheme::EachEdit,
                source,
                residual,
            }
        })
        .collect()
}

/// The instance that leaves only the last edit uncorrected, where "last" is the
/// greatest start position (ties: greatest end). `None` without gold edits.
pub fn expand_last_edit(sentence: &AnnotatedSentence, origin_id: &str) -> Option<SingleEditInstance> {
    let last = sentence.gold.iter().enumerate().max_by_key(|(_, e)| (e.start(), e.end())).map(|(i, _)| i)?;
    let (source, residual) = isolate(sentence, last);
    Some(SingleEditInstance {
        instance_id: format!("{origin_id}-last"),
        origin_sentence_id: origin_id.to_owned(),
        scheme: Scheme::LastEdit,
        source,
        residual,
    })
}

/// Expands a parsed corpus under `scheme`.
///
/// Only annotator 0 is used and sentences without edits are skipped. The
/// origin id of a sentence is `s<index>` with its position in `sentences`.
pub fn expand_corpus(sentences: &[AnnotatedSentence], scheme: Scheme) -> Vec<SingleEditInstance> {
    let mut out = Vec::new();
    for (index, sentence) in sentences.iter().enumerate() {
        if sentence.annotator_id != 0 || sentence.gold.is_empty() {
            continue;
        }
        let origin = format!("s{index}");
        match scheme {
            Scheme::EachEdit => out.extend(expand_each_edit(sentence, &origin)),
            Scheme::LastEdit => out.extend(expand_last_edit(sentence, &origin)),
        }
    }
    out
}

/// One line of an instance file.
///
/// ```json
/// {"instance_id":"s3-e1","origin_sentence_id":"s3","scheme":"each-edit",
///  "tokens":["a","b"],"start":1,"end":2,"replacement":["c"],"kind":"substitution"}
/// ```
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InstanceRecord {
    pub instance_id: String,
    pub origin_sentence_id: String,
    pub scheme: Scheme,
    pub tokens: TokenSeq,
    pub start: usize,
    pub end: usize,
    pub replacement: TokenSeq,
    pub kind: EditKind,
}

#[derive(Debug, Error)]
pub enum RecordError {
    #[error("line {line}: {source}")]
    Json { line: usize, source: serde_json::Error },
    #[error("line {line}: {source}")]
    Edit { line: usize, source: EditError },
    #[error("line {line}: kind {stated} does not match the span and replacement ({actual})")]
    KindMismatch { line: usize, stated: EditKind, actual: EditKind },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl From<&SingleEditInstance> for InstanceRecord {
    fn from(inst: &SingleEditInstance) -> Self {
        InstanceRecord {
            instance_id: inst.instance_id.clone(),
            origin_sentence_id: inst.origin_sentence_id.clone(),
            scheme: inst.scheme,
            tokens: inst.source.clone(),
            start: inst.residual.start(),
            end: inst.residual.end(),
            replacement: inst.residual.replacement().clone(),
            kind: inst.residual.kind(),
        }
    }
}

impl InstanceRecord {
    fn into_instance(self, line: usize) -> Result<SingleEditInstance, RecordError> {
        let residual =
            Edit::new(self.start, self.end, self.replacement).map_err(|source| RecordError::Edit { line, source })?;
        if residual.kind() != self.kind {
            return Err(RecordError::KindMismatch { line, stated: self.kind, actual: residual.kind() });
        }
        SingleEditInstance::new(self.instance_id, self.origin_sentence_id, self.scheme, self.tokens, residual)
            .map_err(|source| RecordError::Edit { line, source })
    }
}

pub fn write_instances<W: Write>(mut writer: W, instances: &[SingleEditInstance]) -> std::io::Result<()> {
    for inst in instances {
        serde_json::to_writer(&mut writer, &InstanceRecord::from(inst))?;
        writer.write_all(b"\n")?;
    }
    Ok(())
}

/// Reads an instance file. Blank lines are ignored.
pub fn read_instances<R: BufRead>(reader: R) -> Result<Vec<SingleEditInstance>, RecordError> {
    let mut out = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let record: InstanceRecord =
            serde_json::from_str(&line).map_err(|source| RecordError::Json { line: line_no, source })?;
        out.push(record.into_instance(line_no)?);
    }
    Ok(out)
}
