//! Reading and writing the M2 annotation format.
//!
//! A block is an `S` line with the tokenized source, zero or more `A` lines,
//! and a terminating blank line:
//!
//! ```text
//! S The aim of this report is to recomend you
//! A 7 8|||R:SPELL|||recommend|||REQUIRED|||-NONE-|||0
//!
//! ```
//!
//! Each annotator in a block becomes its own [`AnnotatedSentence`]. A `noop`
//! annotation (`A -1 -1|||noop|||-NONE-|||...`) records that the annotator
//! saw the sentence and made no change. The error-type field is not kept;
//! on output it is written as `R:OTHER`, `M:OTHER` or `U:OTHER` according
//! to the edit kind.

use std::fmt::Write as _;
use std::io::Read;

use thiserror::Error;

use crate::edit::{AnnotatedSentence, Edit, EditError, EditKind, EditSet};
use crate::token::TokenSeq;

const NONE: &str = "-NONE-";
const SEP: &str = "|||";

#[derive(Debug, Error)]
pub enum M2Error {
    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error("line {line}: {source}")]
    Invalid { line: usize, source: EditError },
    #[error("block starting at line {line}: {source}")]
    Validation { line: usize, source: EditError },
    #[error("input is not valid UTF-8")]
    Utf8(#[from] std::string::FromUtf8Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn malformed(line: usize, message: impl Into<String>) -> M2Error {
    M2Error::Malformed { line, message: message.into() }
}

struct AnnotatorEdits {
    id: u32,
    edits: Vec<Edit>,
}

struct Block {
    line: usize,
    source: TokenSeq,
    annotators: Vec<AnnotatorEdits>,
}

impl Block {
    fn annotator(&mut self, id: u32) -> &mut AnnotatorEdits {
        let pos = match self.annotators.iter().position(|a| a.id == id) {
            Some(pos) => pos,
            None => {
                self.annotators.push(AnnotatorEdits { id, edits: Vec::new() });
                self.annotators.len() - 1
            }
        };
        &mut self.annotators[pos]
    }

    fn finish(self, out: &mut Vec<AnnotatedSentence>) -> Result<(), M2Error> {
        let line = self.line;
        if self.annotators.is_empty() {
            out.push(AnnotatedSentence { source: self.source, gold: EditSet::empty(), annotator_id: 0 });
            return Ok(());
        }
        for annotator in self.annotators {
            let gold = EditSet::new(annotator.edits).map_err(|source| M2Error::Validation { line, source })?;
            let sentence = AnnotatedSentence::new(self.source.clone(), gold, annotator.id)
                .map_err(|source| M2Error::Validation { line, source })?;
            out.push(sentence);
        }
        Ok(())
    }
}

enum Annotation {
    Noop { annotator: u32 },
    Edit { annotator: u32, edit: Edit },
}

fn parse_annotation(body: &str, line: usize) -> Result<Annotation, M2Error> {
    let fields: Vec<&str> = body.split(SEP).collect();
    if fields.len() != 6 {
        return Err(malformed(line, format!("expected 6 '|||'-separated fields, found {}", fields.len())));
    }
    let annotator =
        fields[5].trim().parse::<u32>().map_err(|_| malformed(line, format!("bad annotator id {:?}", fields[5])))?;
    let mut span = fields[0].split_whitespace();
    let (start, end) = match (span.next(), span.next(), span.next()) {
        (Some(s), Some(e), None) => (s, e),
        _ => return Err(malformed(line, format!("bad span {:?}", fields[0]))),
    };
    if fields[1] == "noop" || (start == "-1" && end == "-1") {
        return Ok(Annotation::Noop { annotator });
    }
    let parse_index = |s: &str| s.parse::<usize>().map_err(|_| malformed(line, format!("bad token index {s:?}")));
    let (start, end) = (parse_index(start)?, parse_index(end)?);
    let replacement = match fields[2].trim() {
        NONE | "" => TokenSeq::empty(),
        text => TokenSeq::from_whitespace(text),
    };
    let edit = Edit::new(start, end, replacement).map_err(|source| M2Error::Invalid { line, source })?;
    Ok(Annotation::Edit { annotator, edit })
}

/// Parses an M2 document into one [`AnnotatedSentence`] per block and
/// annotator, in file order. Annotators within a block appear in order of
/// their first `A` line.
///
/// Two insertions at the same gap from one annotator are merged by
/// concatenating their replacements in file order.
pub fn parse_m2(text: &str) -> Result<Vec<AnnotatedSentence>, M2Error> {
    let mut out = Vec::new();
    let mut block: Option<Block> = None;
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let raw = raw.strip_suffix('\r').unwrap_or(raw);
        if raw.trim().is_empty() {
            if let Some(b) = block.take() {
                b.finish(&mut out)?;
            }
        } else if raw == "S" || raw.starts_with("S ") {
            if let Some(b) = block.take() {
                b.finish(&mut out)?;
            }
            block = Some(Block { line, source: TokenSeq::from_whitespace(&raw[1..]), annotators: Vec::new() });
        } else if let Some(body) = raw.strip_prefix("A ") {
            let Some(b) = block.as_mut() else {
                return Err(malformed(line, "annotation before any S line"));
            };
            match parse_annotation(body, line)? {
                Annotation::Noop { annotator } => {
                    b.annotator(annotator);
                }
                Annotation::Edit { annotator, edit } => {
                    let edits = &mut b.annotator(annotator).edits;
                    let same_gap = edits.iter_mut().find(|e| {
                        e.kind() == EditKind::Insertion
                            && edit.kind() == EditKind::Insertion
                            && e.start() == edit.start()
                    });
                    match same_gap {
                        Some(existing) => {
                            let mut merged = existing.replacement().to_vec();
                            merged.extend(edit.replacement().iter().cloned());
                            *existing = Edit::new(edit.start(), edit.end(), TokenSeq::from_valid(merged))
                                .expect("merged insertion is nonempty");
                        }
                        None => edits.push(edit),
                    }
                }
            }
        } else {
            let shown: String = raw.chars().take(40).collect();
            return Err(malformed(line, format!("unrecognized line {shown:?}")));
        }
    }
    if let Some(b) = block.take() {
        b.finish(&mut out)?;
    }
    Ok(out)
}

/// Reads and parses a UTF-8 M2 stream.
pub fn read_m2<R: Read>(mut reader: R) -> Result<Vec<AnnotatedSentence>, M2Error> {
    let mut bytes = Vec::new();
    reader.read_to_end(&mut bytes)?;
    parse_m2(&String::from_utf8(bytes)?)
}

fn type_code(kind: EditKind) -> &'static str {
    match kind {
        EditKind::Substitution => "R:OTHER",
        EditKind::Insertion => "M:OTHER",
        EditKind::Deletion => "U:OTHER",
    }
}

fn write_edit(out: &mut String, edit: &Edit, annotator: u32) {
    let replacement = if edit.replacement().is_empty() { NONE.to_owned() } else { edit.replacement().join() };
    let _ = writeln!(
        out,
        "A {} {}{SEP}{}{SEP}{}{SEP}REQUIRED{SEP}{NONE}{SEP}{}",
        edit.start(),
        edit.end(),
        type_code(edit.kind()),
        replacement,
        annotator
    );
}

/// Writes sentences as M2 blocks.
///
/// Consecutive sentences sharing a source and carrying distinct annotator
/// ids are grouped into one block, so `parse_m2(&serialize_m2(x)) == x`.
pub fn serialize_m2(sentences: &[AnnotatedSentence]) -> String {
    let mut out = String::new();
    let mut i = 0;
    while i < sentences.len() {
        let source = &sentences[i].source;
        let mut j = i + 1;
        while j < sentences.len()
            && &sentences[j].source == source
            && !sentences[i..j].iter().any(|s| s.annotator_id == sentences[j].annotator_id)
        {
            j += 1;
        }
        let block = &sentences[i..j];
        out.push('S');
        for token in source {
            out.push(' ');
            out.push_str(token);
        }
        out.push('\n');
        let bare = block.len() == 1 && block[0].annotator_id == 0;
        for sentence in block {
            if sentence.gold.is_empty() {
                if !bare {
                    let _ = writeln!(
                        out,
                        "A -1 -1{SEP}noop{SEP}{NONE}{SEP}REQUIRED{SEP}{NONE}{SEP}{}",
                        sentence.annotator_id
                    );
                }
            } else {
                for edit in &sentence.gold {
                    write_edit(&mut out, edit, sentence.annotator_id);
                }
            }
        }
        out.push('\n');
        i = j;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn seq(s: &str) -> TokenSeq {
        TokenSeq::from_whitespace(s)
    }

    #[test]
    fn block_without_annotations() {
        let parsed = parse_m2("S a b c\n").unwrap();
        assert_eq!(parsed.len(), 1);
        assert_eq!(parsed[0].source, seq("a b c"));
        assert!(parsed[0].gold.is_empty());
        assert_eq!(parsed[0].annotator_id, 0);
    }

    #[test]
    fn substitution_line() {
        let text = "S a b c\nA 1 2|||R:OTHER|||x|||REQUIRED|||-NONE-|||0\n";
        let parsed = parse_m2(text).unwrap();
        let edit = &parsed[0].gold.as_slice()[0];
        assert_eq!((edit.start(), edit.end()), (1, 2));
        assert_eq!(edit.replacement(), &seq("x"));
        assert_eq!(edit.kind(), EditKind::Substitution);
        // already in canonical form, so the text round-trips exactly
        assert_eq!(serialize_m2(&parsed), format!("{text}\n"));
    }

    #[test]
    fn insertion_and_deletion_lines() {
        let parsed = parse_m2("S a b\nA 1 1|||M:PUNCT|||,|||REQUIRED|||-NONE-|||0\n").unwrap();
        let edit = &parsed[0].gold.as_slice()[0];
        assert_eq!((edit.start(), edit.end(), edit.kind()), (1, 1, EditKind::Insertion));
        assert_eq!(edit.replacement(), &seq(","));

        let parsed = parse_m2("S a b\nA 0 1|||U:DET|||-NONE-|||REQUIRED|||-NONE-|||0\n").unwrap();
        assert_eq!(parsed[0].gold.as_slice()[0].kind(), EditKind::Deletion);
    }

    #[test]
    fn annotators_split_and_noop() {
        let text = "S a b c\n\
                    A 0 1|||R:OTHER|||x|||REQUIRED|||-NONE-|||0\n\
                    A -1 -1|||noop|||-NONE-|||REQUIRED|||-NONE-|||1\n\
                    A 2 3|||R:OTHER|||z|||REQUIRED|||-NONE-|||2\n\n\
                    S d e\n\n";
        let parsed = parse_m2(text).unwrap();
        assert_eq!(parsed.len(), 4);
        assert_eq!(parsed.iter().map(|s| s.annotator_id).collect::<Vec<_>>(), vec![0, 1, 2, 0]);
        assert!(parsed[1].gold.is_empty());
        assert_eq!(parse_m2(&serialize_m2(&parsed)).unwrap(), parsed);
    }

    #[test]
    fn same_gap_insertions_merge_in_file_order() {
        let text = "S a b\n\
                    A 1 1|||M:OTHER|||x|||REQUIRED|||-NONE-|||0\n\
                    A 1 1|||M:OTHER|||y z|||REQUIRED|||-NONE-|||0\n";
        let parsed = parse_m2(text).unwrap();
        assert_eq!(parsed[0].gold.len(), 1);
        assert_eq!(parsed[0].gold.as_slice()[0].replacement(), &seq("x y z"));
    }

    #[test]
    fn malformed_lines_report_line_numbers() {
        let err = parse_m2("S a b\nA 0 1|||R:OTHER|||x\n").unwrap_err();
        assert!(matches!(err, M2Error::Malformed { line: 2, .. }), "{err}");
        let err = parse_m2("A 0 1|||R:OTHER|||x|||REQUIRED|||-NONE-|||0\n").unwrap_err();
        assert!(matches!(err, M2Error::Malformed { line: 1, .. }));
        let err = parse_m2("S a\n\nbogus\n").unwrap_err();
        assert!(matches!(err, M2Error::Malformed { line: 3, .. }));
        let err = parse_m2("S a b\nA x 1|||R:OTHER|||x|||REQUIRED|||-NONE-|||0\n").unwrap_err();
        assert!(matches!(err, M2Error::Malformed { line: 2, .. }));
        let err = parse_m2("S a b\nA 1 1|||M:OTHER|||-NONE-|||REQUIRED|||-NONE-|||0\n").unwrap_err();
        assert!(matches!(err, M2Error::Invalid { line: 2, source: EditError::Null { gap: 1 } }));
    }

    #[test]
    fn overlap_and_range_are_validation_errors() {
        let text = "S a b c\n\
                    A 0 2|||R:OTHER|||x|||REQUIRED|||-NONE-|||0\n\
                    A 1 3|||R:OTHER|||y|||REQUIRED|||-NONE-|||0\n";
        assert!(matches!(
            parse_m2(text).unwrap_err(),
            M2Error::Validation { line: 1, source: EditError::Overlap { .. } }
        ));
        let text = "S a\nA 0 2|||R:OTHER|||x|||REQUIRED|||-NONE-|||0\n";
        assert!(matches!(
            parse_m2(text).unwrap_err(),
            M2Error::Validation { source: EditError::OutOfRange { .. }, .. }
        ));
    }

    #[test]
    fn serialize_edge_cases() {
        assert_eq!(serialize_m2(&[]), "");
        let s = AnnotatedSentence::new(seq("a b c"), EditSet::empty(), 0).unwrap();
        assert_eq!(serialize_m2(&[s]), "S a b c\n\n");
        let s = AnnotatedSentence::new(seq("a b c"), EditSet::empty(), 3).unwrap();
        let text = serialize_m2(std::slice::from_ref(&s));
        assert_eq!(text, "S a b c\nA -1 -1|||noop|||-NONE-|||REQUIRED|||-NONE-|||3\n\n");
        assert_eq!(parse_m2(&text).unwrap(), vec![s]);
    }

    #[test]
    fn crlf_and_invalid_utf8() {
        let parsed = parse_m2("S a b\r\nA 0 1|||R:OTHER|||x|||REQUIRED|||-NONE-|||0\r\n\r\n").unwrap();
        assert_eq!(parsed[0].gold.len(), 1);
        assert!(matches!(read_m2(&b"S \xff\n"[..]), Err(M2Error::Utf8(_))));
    }
}
