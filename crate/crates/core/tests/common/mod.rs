//! Shared helpers for the integration tests: the seeded synthetic corpus
//! generator and small constructors.
#![allow(dead_code)]

use gecmf_core::{AnnotatedSentence, Edit, EditSet, TokenSeq};
use rand::rngs::StdRng;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};

pub const SYNTHETIC_SEED: u64 = 20_191_104;
pub const SYNTHETIC_SENTENCES: usize = 60;
pub const SYNTHETIC_PATH: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/tests/data/synthetic.m2");
pub const ERROR_CASES_PATH: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/tests/data/error_cases.m2");

const SOURCE_WORDS: &[&str] = &[
    "the", "a", "of", "to", "in", "and", "is", "was", "it", "for", "on", "with", "he", "she", "they", "we", "at", "by",
    "this", "that", "from", "or", "but", "not", "are", "be", "have", "had", "his", "her", "an", "were", "which",
    "there", "their", "been", "one", "all", "would", "when", ",", ".", "so", "if", "my", "our", "very", "some",
];

// Disjoint from SOURCE_WORDS; long entries split into several mock pieces.
const REPLACEMENT_WORDS: &[&str] = &[
    "recommend",
    "adequate",
    "accommodation",
    "unfortunately",
    "environment",
    "museum",
    "hotel",
    "bus",
    "stop",
    "number",
    "visit",
    "suitable",
    "every",
    "hour",
    "course",
    "report",
    "aim",
    "front",
    "leaves",
    "half",
    "because",
    "although",
    "especially",
    "necessary",
    "opportunity",
    "experience",
    "restaurant",
    "beautiful",
    "friends",
    "weekend",
    "morning",
    "station",
    "ticket",
    "quickly",
    "really",
    "probably",
    "festival",
    "teacher",
    "weather",
    "holiday",
];

/// Draws one annotated sentence with 1 to 3 edits. Source tokens within a
/// sentence are distinct, replacement words never occur in the source or in
/// another edit, and edits are separated by at least two untouched tokens, so
/// re-aligning the corrected sentence recovers every gold edit exactly.
pub fn synthetic_sentence(rng: &mut StdRng) -> AnnotatedSentence {
    let n = rng.gen_range(6..=14);
    let source: Vec<String> = SOURCE_WORDS.choose_multiple(rng, n).map(|w| w.to_string()).collect();
    let mut fresh: Vec<&str> = REPLACEMENT_WORDS.to_vec();
    fresh.shuffle(rng);
    let wanted = rng.gen_range(1..=3);
    let mut edits: Vec<Edit> = Vec::new();
    for _ in 0..40 {
        if edits.len() == wanted {
            break;
        }
        let roll = rng.gen_range(0..10);
        let (start, end, repl_len) = if roll < 5 {
            let len = rng.gen_range(1..=2);
            let start = rng.gen_range(0..=n - len);
            (start, start + len, len)
        } else if roll < 8 {
            let gap = rng.gen_range(0..=n);
            (gap, gap, 1)
        } else {
            let len = rng.gen_range(1..=2);
            let start = rng.gen_range(0..=n - len);
            (start, start + len, 0)
        };
        let clear = edits.iter().all(|e| end + 1 < e.start() || start > e.end() + 1);
        if !clear {
            continue;
        }
        let replacement: Vec<String> = fresh.drain(..repl_len).map(str::to_string).collect();
        edits.push(Edit::new(start, end, TokenSeq::new(replacement).unwrap()).unwrap());
    }
    let source = TokenSeq::new(source).unwrap();
    AnnotatedSentence::new(source, EditSet::new(edits).unwrap(), 0).unwrap()
}

pub fn synthetic_corpus(seed: u64, count: usize) -> Vec<AnnotatedSentence> {
    let mut rng = StdRng::seed_from_u64(seed);
    (0..count).map(|_| synthetic_sentence(&mut rng)).collect()
}

pub fn toks(s: &str) -> TokenSeq {
    TokenSeq::from_whitespace(s)
}

const SMALL_VOCAB: &[&str] = &["a", "b", "c", "d", "e", "f"];

fn small_words(rng: &mut StdRng, vocab: usize, len: usize) -> Vec<String> {
    (0..len).map(|_| SMALL_VOCAB[rng.gen_range(0..vocab)].to_string()).collect()
}

/// An arbitrary valid edit set over `n` tokens: adjacent edits, an insertion
/// in front of a span at the same gap, and replacements that reuse source
/// words all occur.
pub fn random_edits(rng: &mut StdRng, n: usize, vocab: usize) -> EditSet {
    let mut edits = Vec::new();
    let mut i = 0;
    while i <= n {
        if rng.gen_bool(0.2) {
            let len = rng.gen_range(1..=2);
            edits.push(Edit::new(i, i, TokenSeq::new(small_words(rng, vocab, len)).unwrap()).unwrap());
        }
        if i < n && rng.gen_bool(0.35) {
            let span = rng.gen_range(1..=(n - i).min(3));
            let len = rng.gen_range(0..=2);
            edits.push(Edit::new(i, i + span, TokenSeq::new(small_words(rng, vocab, len)).unwrap()).unwrap());
            i += span;
            // a span may be followed directly by an insertion at its end gap
            continue;
        }
        i += 1;
    }
    EditSet::new(edits).unwrap()
}

pub fn random_sentence(rng: &mut StdRng, max_len: usize, vocab: usize, annotator_id: u32) -> AnnotatedSentence {
    let n = rng.gen_range(0..=max_len);
    let source = TokenSeq::new(small_words(rng, vocab, n)).unwrap();
    let gold = random_edits(rng, n, vocab);
    AnnotatedSentence::new(source, gold, annotator_id).unwrap()
}

pub fn rng(seed: u64) -> StdRng {
    StdRng::seed_from_u64(seed)
}

/// Edit distance by memoized suffix recursion, written independently of the
/// library's prefix table. Costs in tenths: match 0, case-only substitution
/// 9, other substitution 10, insertion 10, deletion 10.
pub fn oracle_distance(source: &[String], target: &[String]) -> u32 {
    fn go(s: &[String], t: &[String], i: usize, j: usize, memo: &mut Vec<Vec<Option<u32>>>) -> u32 {
        if let Some(v) = memo[i][j] {
            return v;
        }
        let v = if i == s.len() {
            10 * (t.len() - j) as u32
        } else if j == t.len() {
            10 * (s.len() - i) as u32
        } else {
            let pair = if s[i] == t[j] {
                0
            } else if s[i].to_lowercase() == t[j].to_lowercase() {
                9
            } else {
                10
            };
            (pair + go(s, t, i + 1, j + 1, memo)).min(10 + go(s, t, i + 1, j, memo)).min(10 + go(s, t, i, j + 1, memo))
        };
        memo[i][j] = Some(v);
        v
    }
    let mut memo = vec![vec![None; target.len() + 1]; source.len() + 1];
    go(source, target, 0, 0, &mut memo)
}

/// Cost of an edit set read as a script: each edit pays its cheapest
/// in-span alignment, bounded below by the oracle on the span alone.
pub fn edit_set_cost(source: &TokenSeq, edits: &EditSet) -> u32 {
    edits.iter().map(|e| oracle_distance(&source[e.start()..e.end()], e.replacement())).sum()
}

/// Every sequence over `vocab` of length at most `max_len`.
pub fn all_sequences(vocab: &[&str], max_len: usize) -> Vec<Vec<String>> {
    let mut out = vec![Vec::new()];
    let mut frontier: Vec<Vec<String>> = vec![Vec::new()];
    for _ in 0..max_len {
        let mut next = Vec::new();
        for seq in &frontier {
            for w in vocab {
                let mut s = seq.clone();
                s.push(w.to_string());
                next.push(s);
            }
        }
        out.extend(next.iter().cloned());
        frontier = next;
    }
    out
}
