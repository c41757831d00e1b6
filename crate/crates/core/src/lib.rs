//! Grammatical error correction by masking and filling.
//!
//! The pipeline takes an M2 corpus, expands it into sentences with a single
//! residual error, masks that error's span, asks a masked language model for
//! candidates, rebuilds the sentence and scores it:
//!
//! ```text
//! m2 -> expansion -> masking -> fillmask -> evaluation
//!                        ^                      |
//!                      labels             align (edit extraction)
//! ```

pub mod align;
pub mod edit;
pub mod evaluation;
pub mod expansion;
pub mod fillmask;
pub mod labels;
pub mod m2;
pub mod masking;
pub mod token;

pub use align::{align, extract_edits, ops_to_edits, AlignmentOp};
pub use edit::{apply_edits, AnnotatedSentence, Edit, EditError, EditKind, EditSet};
pub use evaluation::{
    evaluate_corpus, mask_accuracy, prf, rerank, score_sentence, Counts, EvalConfig, EvalError, EvalReport, MatchMode,
    RerankMode,
};
pub use expansion::{expand_corpus, expand_each_edit, expand_last_edit, Scheme, SingleEditInstance};
pub use fillmask::{
    assemble_hypothesis, fill, merge_pieces, Candidate, FillError, FillModel, PieceTokenizer, PredictionSet,
};
pub use m2::{parse_m2, serialize_m2, M2Error};
pub use masking::{apply_deletion, mask_instance, MaskStrategy, MaskedInstance, MASK_TOKEN};
pub use token::{TokenError, TokenSeq};
