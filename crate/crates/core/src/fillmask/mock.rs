//! Offline fill models.

use super::{Candidate, FillError, FillModel, PieceTokenizer, PredictionSet, CONTINUATION};
use crate::masking::MaskedInstance;
use crate::token::TokenSeq;

/// Deterministic stand-in for a WordPiece vocabulary: words longer than
/// `max_whole` characters are cut into `chunk`-character pieces.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MockWordPiece {
    pub max_whole: usize,
    pub chunk: usize,
}

impl Default for MockWordPiece {
    fn default() -> Self {
        MockWordPiece { max_whole: 6, chunk: 4 }
    }
}

impl MockWordPiece {
    pub fn word_pieces(&self, word: &str) -> Vec<String> {
        let chars: Vec<char> = word.chars().collect();
        if chars.len() <= self.max_whole {
            return vec![word.to_owned()];
        }
        chars
            .chunks(self.chunk.max(1))
            .enumerate()
            .map(|(i, c)| {
                let s: String = c.iter().collect();
                if i == 0 {
                    s
                } else {
                    format!("{CONTINUATION}{s}")
                }
            })
            .collect()
    }
}

impl PieceTokenizer for MockWordPiece {
    fn pieces(&self, tokens: &TokenSeq) -> Result<Vec<String>, FillError> {
        Ok(tokens.iter().flat_map(|w| self.word_pieces(w)).collect())
    }
}

/// Segments `words` into exactly `n` pieces that merge back to `words`,
/// splitting the longest piece in half until the count is reached.
/// `None` when `n` is below the word count or above the character count.
pub fn fit_pieces(words: &[String], n: usize) -> Option<Vec<String>> {
    if n < words.len() {
        return None;
    }
    let mut pieces: Vec<String> = words.to_vec();
    let content = |p: &str| p.strip_prefix(CONTINUATION).unwrap_or(p).chars().count();
    while pieces.len() < n {
        let (at, len) = pieces.iter().enumerate().map(|(i, p)| (i, content(p))).fold((0, 0), |best, cur| {
            if cur.1 > best.1 {
                cur
            } else {
                best
            }
        });
        if len < 2 {
            return None;
        }
        let piece = pieces[at].clone();
        let (prefix, body) = match piece.strip_prefix(CONTINUATION) {
            Some(rest) => (CONTINUATION, rest),
            None => ("", piece.as_str()),
        };
        let split = body.char_indices().nth(len / 2).map(|(b, _)| b).expect("len >= 2");
        pieces[at] = format!("{prefix}{}", &body[..split]);
        pieces.insert(at + 1, format!("{CONTINUATION}{}", &body[split..]));
    }
    Some(pieces)
}

/// Oracle model that places the gold answer at a fixed rank.
///
/// The answer for mask `i` is the `i`-th gold piece when the masks were sized
/// from gold pieces; otherwise the gold words re-segmented to fit the mask
/// count with [`fit_pieces`]; with fewer masks than words, the first words.
/// Every other rank holds a filler piece.
#[derive(Debug, Clone)]
pub struct GoldMock {
    gold_rank: usize,
    tokenizer: MockWordPiece,
}

impl Default for GoldMock {
    fn default() -> Self {
        GoldMock { gold_rank: 1, tokenizer: MockWordPiece::default() }
    }
}

impl GoldMock {
    /// `gold_rank` is 1-based.
    pub fn with_rank(gold_rank: usize) -> Result<Self, FillError> {
        if gold_rank == 0 {
            return Err(FillError::Config("gold rank is 1-based".into()));
        }
        Ok(GoldMock { gold_rank, ..GoldMock::default() })
    }

    pub fn gold_rank(&self) -> usize {
        self.gold_rank
    }

    /// The piece the mock treats as correct for each mask.
    pub fn gold_targets(masked: &MaskedInstance) -> Vec<String> {
        let n = masked.mask_count();
        if let Some(pieces) = masked.gold_pieces.as_ref().filter(|p| p.len() == n) {
            return pieces.clone();
        }
        let words = masked.gold_replacement.as_slice();
        fit_pieces(words, n).unwrap_or_else(|| {
            let mut targets: Vec<String> = words.iter().take(n).cloned().collect();
            let filler = targets.last().cloned().unwrap_or_else(|| "[UNK]".to_owned());
            targets.resize(n, filler);
            targets
        })
    }
}

impl PieceTokenizer for GoldMock {
    fn pieces(&self, tokens: &TokenSeq) -> Result<Vec<String>, FillError> {
        self.tokenizer.pieces(tokens)
    }
}

impl FillModel for GoldMock {
    fn model_id(&self) -> String {
        format!("gold-mock@{}", self.gold_rank)
    }

    fn predict(&self, masked: &MaskedInstance, k: usize) -> Result<PredictionSet, FillError> {
        let per_mask = Self::gold_targets(masked)
            .into_iter()
            .map(|gold| {
                let mut filler = (0..).map(|j| format!("[unused{j}]")).filter(|f| *f != gold);
                (1..=k)
                    .map(|rank| {
                        let piece =
                            if rank == self.gold_rank { gold.clone() } else { filler.next().expect("infinite") };
                        Candidate::new(piece, -(rank as f64))
                    })
                    .collect::<Result<Vec<_>, _>>()
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(PredictionSet::ranked(per_mask, k))
    }
}

const BUNDLED_LEXICON: &[(&str, u32)] = &[
    ("the", 5000),
    (",", 4800),
    (".", 4500),
    ("of", 2600),
    ("and", 2500),
    ("to", 2300),
    ("a", 2100),
    ("in", 1700),
    ("is", 1000),
    ("it", 900),
    ("that", 850),
    ("for", 800),
    ("was", 700),
    ("on", 650),
    ("with", 600),
    ("he", 550),
    ("as", 520),
    ("you", 500),
    ("at", 450),
    ("be", 430),
];

/// Frequency-table model: every mask gets the `k` most frequent lexicon
/// entries, scored by their relative frequency, whatever the context.
#[derive(Debug, Clone)]
pub struct LexiconMock {
    ranked: Vec<Candidate>,
    tokenizer: MockWordPiece,
}

impl LexiconMock {
    pub fn bundled() -> Self {
        LexiconMock::new(BUNDLED_LEXICON.iter().map(|&(w, c)| (w.to_owned(), c))).expect("bundled lexicon is valid")
    }

    pub fn new(entries: impl IntoIterator<Item = (String, u32)>) -> Result<Self, FillError> {
        let entries: Vec<(String, u32)> = entries.into_iter().filter(|(_, c)| *c > 0).collect();
        if entries.is_empty() {
            return Err(FillError::Config("lexicon has no entries with a positive count".into()));
        }
        let total: f64 = entries.iter().map(|(_, c)| f64::from(*c)).sum();
        let candidates = entries
            .into_iter()
            .map(|(w, c)| Candidate::new(w, (f64::from(c) / total).ln()))
            .collect::<Result<Vec<_>, _>>()?;
        let ranked = PredictionSet::ranked(vec![candidates], usize::MAX).per_mask()[0].clone();
        Ok(LexiconMock { ranked, tokenizer: MockWordPiece::default() })
    }

    pub fn entries(&self) -> &[Candidate] {
        &self.ranked
    }
}

impl PieceTokenizer for LexiconMock {
    fn pieces(&self, tokens: &TokenSeq) -> Result<Vec<String>, FillError> {
        self.tokenizer.pieces(tokens)
    }
}

impl FillModel for LexiconMock {
    fn model_id(&self) -> String {
        "lexicon-mock".to_owned()
    }

    fn predict(&self, masked: &MaskedInstance, k: usize) -> Result<PredictionSet, FillError> {
        let top: Vec<Candidate> = self.ranked.iter().take(k).cloned().collect();
        Ok(PredictionSet::ranked(vec![top; masked.mask_count()], k))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fillmask::{fill, merge_pieces};
    use crate::masking::MaskStrategy;

    fn masked(n: usize, gold: &str, pieces: Option<Vec<&str>>) -> MaskedInstance {
        let mut tokens = vec!["a".to_owned()];
        tokens.extend(std::iter::repeat_n("[MASK]".to_owned(), n));
        MaskedInstance {
            instance_id: "i".into(),
            strategy: MaskStrategy::OriginSpan,
            tokens: TokenSeq::new(tokens).unwrap(),
            mask_positions: (1..=n).collect(),
            gold_replacement: TokenSeq::from_whitespace(gold),
            gold_pieces: pieces.map(|p| p.into_iter().map(String::from).collect()),
        }
    }

    fn top(set: &PredictionSet) -> Vec<&str> {
        set.per_mask().iter().map(|l| l[0].piece.as_str()).collect()
    }

    #[test]
    fn wordpiece_mock_round_trips() {
        let wp = MockWordPiece::default();
        assert_eq!(wp.word_pieces("recommend"), vec!["reco", "##mmen", "##d"]);
        assert_eq!(wp.word_pieces("allow"), vec!["allow"]);
        let words = TokenSeq::from_whitespace("an adequate recommendation");
        assert_eq!(merge_pieces(&wp.pieces(&words).unwrap()).unwrap(), words);
    }

    #[test]
    fn fit_pieces_cases() {
        let w = |s: &str| TokenSeq::from_whitespace(s).into_inner();
        assert_eq!(fit_pieces(&w("number 8 bus"), 3).unwrap(), vec!["number", "8", "bus"]);
        assert_eq!(fit_pieces(&w("bus"), 2).unwrap(), vec!["b", "##us"]);
        assert_eq!(fit_pieces(&w("abcd"), 4).unwrap(), vec!["a", "##b", "##c", "##d"]);
        assert_eq!(fit_pieces(&w("ab"), 3), None);
        assert_eq!(fit_pieces(&w("x y"), 1), None);
        for n in 2..=9 {
            let pieces = fit_pieces(&w("recommend it"), n).unwrap();
            assert_eq!(pieces.len(), n);
            assert_eq!(merge_pieces(&pieces).unwrap(), TokenSeq::from_whitespace("recommend it"));
        }
    }

    #[test]
    fn gold_at_rank_one() {
        let set = fill(&GoldMock::default(), &masked(2, "ad", Some(vec!["a", "##d"])), 5).unwrap();
        assert_eq!(top(&set), vec!["a", "##d"]);
        assert!(set.per_mask().iter().all(|l| l.len() == 5));
    }

    #[test]
    fn gold_at_rank_three() {
        let mock = GoldMock::with_rank(3).unwrap();
        let m = masked(1, "recommend", None);
        let set = fill(&mock, &m, 5).unwrap();
        assert_eq!(set.per_mask()[0][2].piece, "recommend");
        let set = fill(&mock, &m, 1).unwrap();
        assert!(set.per_mask()[0].iter().all(|c| c.piece != "recommend"));
        assert!(GoldMock::with_rank(0).is_err());
    }

    #[test]
    fn fewer_masks_than_words_uses_leading_words() {
        assert_eq!(GoldMock::gold_targets(&masked(1, "number 8 bus", None)), vec!["number"]);
        assert_eq!(GoldMock::gold_targets(&masked(3, "number 8 bus", None)), vec!["number", "8", "bus"]);
    }

    #[test]
    fn lexicon_mock_is_context_free() {
        let lex = LexiconMock::bundled();
        let set = fill(&lex, &masked(2, "recommend", None), 3).unwrap();
        for list in set.per_mask() {
            assert_eq!(list.iter().map(|c| c.piece.as_str()).collect::<Vec<_>>(), vec!["the", ",", "."]);
            assert!(list.windows(2).all(|w| w[0].log_prob >= w[1].log_prob));
        }
        assert!(LexiconMock::new(vec![("x".to_owned(), 0)]).is_err());
    }
}
