//! Token-level alignment and edit extraction between a source sentence and a
//! corrected sentence.
//!
//! Alignment is weighted Levenshtein over whole tokens. A substitution between
//! tokens that differ only in case is slightly cheaper than a general one, which
//! pulls case fixes into aligned pairs. Costs are kept in tenths so the DP stays
//! in integers.

use crate::edit::{Edit, EditSet};
use crate::token::TokenSeq;

pub const MATCH_COST: u32 = 0;
pub const SUBSTITUTE_COST: u32 = 10;
pub const CASE_SUBSTITUTE_COST: u32 = 9;
pub const INSERT_COST: u32 = 10;
pub const DELETE_COST: u32 = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AlignmentOp {
    Match { src: usize, tgt: usize },
    Substitute { src: usize, tgt: usize },
    Delete { src: usize },
    Insert { tgt: usize },
}

impl AlignmentOp {
    pub fn src_index(self) -> Option<usize> {
        match self {
            AlignmentOp::Match { src, .. } | AlignmentOp::Substitute { src, .. } | AlignmentOp::Delete { src } => {
                Some(src)
            }
            AlignmentOp::Insert { .. } => None,
        }
    }

    pub fn tgt_index(self) -> Option<usize> {
        match self {
            AlignmentOp::Match { tgt, .. } | AlignmentOp::Substitute { tgt, .. } | AlignmentOp::Insert { tgt } => {
                Some(tgt)
            }
            AlignmentOp::Delete { .. } => None,
        }
    }

    pub fn is_match(self) -> bool {
        matches!(self, AlignmentOp::Match { .. })
    }
}

fn substitute_cost(a: &str, b: &str) -> u32 {
    if a == b {
        MATCH_COST
    } else if a.to_lowercase() == b.to_lowercase() {
        CASE_SUBSTITUTE_COST
    } else {
        SUBSTITUTE_COST
    }
}

/// Cost of one operation in tenths.
pub fn op_cost(op: AlignmentOp, source: &[String], target: &[String]) -> u32 {
    match op {
        AlignmentOp::Match { .. } => MATCH_COST,
        AlignmentOp::Substitute { src, tgt } => substitute_cost(&source[src], &target[tgt]),
        AlignmentOp::Delete { .. } => DELETE_COST,
        AlignmentOp::Insert { .. } => INSERT_COST,
    }
}

/// Total cost of a script in tenths.
pub fn script_cost(ops: &[AlignmentOp], source: &[String], target: &[String]) -> u32 {
    ops.iter().map(|&op| op_cost(op, source, target)).sum()
}

/// Prefix distance table: `table[i][j]` is the cheapest script turning
/// `source[..i]` into `target[..j]`.
pub fn distance_table(source: &[String], target: &[String]) -> Vec<Vec<u32>> {
    let (n, m) = (source.len(), target.len());
    let mut table = vec![vec![0u32; m + 1]; n + 1];
    for i in 1..=n {
        table[i][0] = table[i - 1][0] + DELETE_COST;
    }
    for j in 1..=m {
        table[0][j] = table[0][j - 1] + INSERT_COST;
    }
    for i in 1..=n {
        for j in 1..=m {
            let diagonal = table[i - 1][j - 1] + substitute_cost(&source[i - 1], &target[j - 1]);
            let delete = table[i - 1][j] + DELETE_COST;
            let insert = table[i][j - 1] + INSERT_COST;
            table[i][j] = diagonal.min(delete).min(insert);
        }
    }
    table
}

/// Minimum-cost alignment of `source` to `target`.
///
/// Ties are broken during the backtrace by preferring match, then
/// substitute, then delete, then insert.
pub fn align(source: &[String], target: &[String]) -> Vec<AlignmentOp> {
    let table = distance_table(source, target);
    let (mut i, mut j) = (source.len(), target.len());
    let mut ops = Vec::with_capacity(i.max(j));
    while i > 0 || j > 0 {
        let here = table[i][j];
        if i > 0 && j > 0 {
            let sub = substitute_cost(&source[i - 1], &target[j - 1]);
            if table[i - 1][j - 1] + sub == here {
                let (src, tgt) = (i - 1, j - 1);
                ops.push(if sub == MATCH_COST {
                    AlignmentOp::Match { src, tgt }
                } else {
                    AlignmentOp::Substitute { src, tgt }
                });
                i -= 1;
                j -= 1;
                continue;
            }
        }
        if i > 0 && table[i - 1][j] + DELETE_COST == here {
            ops.push(AlignmentOp::Delete { src: i - 1 });
            i -= 1;
        } else {
            ops.push(AlignmentOp::Insert { tgt: j - 1 });
            j -= 1;
        }
    }
    ops.reverse();
    ops
}

/// Collapses an alignment into edits: every maximal run of non-match
/// operations becomes one edit over the source tokens it consumes, replaced by
/// the target tokens it produces.
pub fn ops_to_edits(ops: &[AlignmentOp], source: &TokenSeq, target: &TokenSeq) -> EditSet {
    let mut edits = Vec::new();
    let (mut src_pos, mut tgt_pos) = (0usize, 0usize);
    let mut run: Option<(usize, usize)> = None;

    let mut close = |run: &mut Option<(usize, usize)>, src_pos: usize, tgt_pos: usize| {
        if let Some((src_start, tgt_start)) = run.take() {
            let replacement = TokenSeq::from_valid(target[tgt_start..tgt_pos].to_vec());
            edits.push(Edit::new(src_start, src_pos, replacement).expect("a non-match run changes something"));
        }
    };

    for &op in ops {
        if op.is_match() {
            close(&mut run, src_pos, tgt_pos);
        } else if run.is_none() {
            run = Some((src_pos, tgt_pos));
        }
        if op.src_index().is_some() {
            src_pos += 1;
        }
        if op.tgt_index().is_some() {
            tgt_pos += 1;
        }
    }
    close(&mut run, src_pos, tgt_pos);
    debug_assert_eq!((src_pos, tgt_pos), (source.len(), target.len()));
    EditSet::new(edits).expect("runs are separated by matches and cannot overlap")
}

/// `ops_to_edits(align(source, target))`.
pub fn extract_edits(source: &TokenSeq, target: &TokenSeq) -> EditSet {
    ops_to_edits(&align(source, target), source, target)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::edit::{apply_edits, EditKind};
    use AlignmentOp::*;

    fn seq(s: &str) -> TokenSeq {
        TokenSeq::from_whitespace(s)
    }

    #[test]
    fn identity_is_all_matches() {
        let s = seq("a b c");
        assert_eq!(align(&s, &s), vec![Match { src: 0, tgt: 0 }, Match { src: 1, tgt: 1 }, Match { src: 2, tgt: 2 }]);
        assert!(extract_edits(&s, &s).is_empty());
    }

    #[test]
    fn single_substitution() {
        let (s, t) = (seq("a b c"), seq("a x c"));
        let ops = align(&s, &t);
        assert_eq!(ops, vec![Match { src: 0, tgt: 0 }, Substitute { src: 1, tgt: 1 }, Match { src: 2, tgt: 2 }]);
        let edits = ops_to_edits(&ops, &s, &t);
        assert_eq!(edits.as_slice(), &[Edit::new(1, 2, seq("x")).unwrap()]);
    }

    #[test]
    fn reordered_phrase_is_delete_and_insert() {
        let (s, t) = (seq("bus number 8"), seq("number 8 bus"));
        assert_eq!(
            align(&s, &t),
            vec![Delete { src: 0 }, Match { src: 1, tgt: 0 }, Match { src: 2, tgt: 1 }, Insert { tgt: 2 }]
        );
        let edits = extract_edits(&s, &t);
        assert_eq!(edits.len(), 2);
        assert_eq!(edits.as_slice()[0].kind(), EditKind::Deletion);
        assert_eq!(edits.as_slice()[1].kind(), EditKind::Insertion);
        assert_eq!(apply_edits(&s, &edits).unwrap(), t);
    }

    #[test]
    fn substitute_insert_run_merges() {
        let (s, t) = (seq("a b c"), seq("a x y c"));
        let ops =
            vec![Match { src: 0, tgt: 0 }, Substitute { src: 1, tgt: 1 }, Insert { tgt: 2 }, Match { src: 2, tgt: 3 }];
        let edits = ops_to_edits(&ops, &s, &t);
        assert_eq!(edits.as_slice(), &[Edit::new(1, 2, seq("x y")).unwrap()]);
        assert_eq!(apply_edits(&s, &edits).unwrap(), t);
    }

    #[test]
    fn case_discount_prefers_pairing() {
        // "the" -> "The" pairs up rather than being deleted and re-inserted elsewhere
        let (s, t) = (seq("the cat"), seq("The cat"));
        assert_eq!(align(&s, &t)[0], Substitute { src: 0, tgt: 0 });
        assert_eq!(script_cost(&align(&s, &t), &s, &t), CASE_SUBSTITUTE_COST);
    }

    #[test]
    fn empty_sides() {
        let (e, s) = (TokenSeq::empty(), seq("a b"));
        assert_eq!(align(&e, &s), vec![Insert { tgt: 0 }, Insert { tgt: 1 }]);
        assert_eq!(align(&s, &e), vec![Delete { src: 0 }, Delete { src: 1 }]);
        assert_eq!(extract_edits(&e, &s).as_slice(), &[Edit::new(0, 0, s.clone()).unwrap()]);
        assert!(align(&e, &e).is_empty());
    }
}
