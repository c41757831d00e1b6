//! Sentence-level span scoring, mask-level accuracy, reranking and corpus
//! evaluation.

use std::collections::{BTreeMap, HashSet};
use std::fmt::{self, Write as _};
use std::ops::{Add, AddAssign};
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::align::extract_edits;
use crate::edit::{apply_edits, Edit, EditSet};
use crate::expansion::{Scheme, SingleEditInstance};
use crate::fillmask::{assemble_hypothesis, fill, AssembleError, Candidate, FillError, FillModel, PredictionSet};
use crate::masking::{apply_deletion, mask_instance, MaskError, MaskStrategy, MaskedInstance};
use crate::token::TokenSeq;

pub const DEFAULT_BETA: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MatchMode {
    /// Span and replacement must both be equal.
    Exact,
    /// Spans must agree and the replacements share at least one token.
    AnyToken,
}

impl MatchMode {
    /// Exact for the sized strategies, any-token for the single mask.
    pub fn default_for(strategy: MaskStrategy) -> MatchMode {
        match strategy {
            MaskStrategy::Single => MatchMode::AnyToken,
            MaskStrategy::OriginSpan | MaskStrategy::TargetLength => MatchMode::Exact,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            MatchMode::Exact => "exact",
            MatchMode::AnyToken => "any-token",
        }
    }
}

impl fmt::Display for MatchMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for MatchMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "exact" => Ok(MatchMode::Exact),
            "any-token" | "any_token" => Ok(MatchMode::AnyToken),
            other => Err(format!("unknown match mode {other:?} (expected exact or any-token)")),
        }
    }
}

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("beta must be positive and finite, got {0}")]
    InvalidBeta(f64),
    #[error("gold pieces are empty")]
    EmptyGold,
    #[error("k must be at least 1")]
    ZeroK,
    #[error("k = {k} exceeds the prediction depth {depth}")]
    DepthExceeded { k: usize, depth: usize },
    #[error("instance {instance_id}: {source}")]
    Fill { instance_id: String, source: FillError },
    #[error(transparent)]
    Mask(#[from] MaskError),
    #[error("instance {instance_id}: {source}")]
    Assemble { instance_id: String, source: AssembleError },
}

/// Edit-level match counts. Adding counts is associative and commutative,
/// so corpus totals do not depend on evaluation order.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counts {
    pub tp: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
}

impl Add for Counts {
    type Output = Counts;

    fn add(self, o: Counts) -> Counts {
        Counts { tp: self.tp + o.tp, fp: self.fp + o.fp, fn_: self.fn_ + o.fn_ }
    }
}

impl AddAssign for Counts {
    fn add_assign(&mut self, o: Counts) {
        *self = *self + o;
    }
}

fn shares_token(a: &TokenSeq, b: &TokenSeq) -> bool {
    let set: HashSet<&String> = a.iter().collect();
    b.iter().any(|t| set.contains(t))
}

/// Scores a hypothesis against gold edits.
///
/// System edits are re-extracted from `(source, hypothesis)`. In exact mode a
/// system edit matches a gold edit when span and replacement agree. Any-token
/// mode first takes the exact matches, then lets each remaining gold edit claim
/// the unmatched system edits lying inside its span (insertions at its
/// boundaries included): together they amount to one system edit over the gold
/// span, which matches if its replacement shares a token with the gold one.
pub fn score_sentence(source: &TokenSeq, hypothesis: &TokenSeq, gold: &EditSet, mode: MatchMode) -> Counts {
    let system = extract_edits(source, hypothesis);
    let sys = system.as_slice();
    let golds = gold.as_slice();
    let mut sys_used = vec![false; sys.len()];
    let mut gold_used = vec![false; golds.len()];
    let mut tp = 0;

    for (gi, g) in golds.iter().enumerate() {
        if let Some(si) = (0..sys.len()).find(|&si| !sys_used[si] && sys[si] == *g) {
            sys_used[si] = true;
            gold_used[gi] = true;
            tp += 1;
        }
    }

    if mode == MatchMode::AnyToken {
        for (gi, g) in golds.iter().enumerate() {
            if gold_used[gi] {
                continue;
            }
            let inside: Vec<usize> = (0..sys.len())
                .filter(|&si| !sys_used[si] && g.start() <= sys[si].start() && sys[si].end() <= g.end())
                .collect();
            if inside.is_empty() {
                continue;
            }
            if shares_token(&span_rewrite(source, g, inside.iter().map(|&si| &sys[si])), g.replacement()) {
                for si in inside {
                    sys_used[si] = true;
                }
                gold_used[gi] = true;
                tp += 1;
            }
        }
    }

    Counts {
        tp,
        fp: sys_used.iter().filter(|u| !**u).count() as u64,
        fn_: gold_used.iter().filter(|u| !**u).count() as u64,
    }
}

/// What the system edits turn `source[span.start..span.end]` into.
fn span_rewrite<'a>(source: &TokenSeq, span: &Edit, edits: impl Iterator<Item = &'a Edit>) -> TokenSeq {
    let region = TokenSeq::from_valid(source[span.start()..span.end()].to_vec());
    let local: Vec<Edit> = edits.map(|e| e.shifted(-(span.start() as isize))).collect();
    let local = EditSet::new(local).expect("subset of a valid edit set");
    apply_edits(&region, &local).expect("edits lie inside the span")
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Prf {
    pub precision: f64,
    pub recall: f64,
    pub f_beta: f64,
}

/// F-beta from precision and recall; zero when both are zero.
pub fn f_beta(precision: f64, recall: f64, beta: f64) -> Result<f64, EvalError> {
    if !(beta.is_finite() && beta > 0.0) {
        return Err(EvalError::InvalidBeta(beta));
    }
    let b2 = beta * beta;
    let denom = b2 * precision + recall;
    Ok(if denom == 0.0 { 0.0 } else { (1.0 + b2) * precision * recall / denom })
}

/// Precision, recall and F-beta from counts. An empty denominator counts as
/// perfect: P = 1 with no system edits, R = 1 with no gold edits.
pub fn prf(counts: Counts, beta: f64) -> Result<Prf, EvalError> {
    let ratio = |num: u64, den: u64| if den == 0 { 1.0 } else { num as f64 / den as f64 };
    let precision = ratio(counts.tp, counts.tp + counts.fp);
    let recall = ratio(counts.tp, counts.tp + counts.fn_);
    Ok(Prf { precision, recall, f_beta: f_beta(precision, recall, beta)? })
}

fn in_top_k(list: &[Candidate], k: usize, piece: &str) -> bool {
    list.iter().take(k).any(|c| c.piece == piece)
}

/// `(correct, total)` mask counts behind [`mask_accuracy`].
pub fn mask_hits(
    predictions: &PredictionSet,
    gold_pieces: &[String],
    k: usize,
    mode: MatchMode,
) -> Result<(usize, usize), EvalError> {
    if gold_pieces.is_empty() {
        return Err(EvalError::EmptyGold);
    }
    if k == 0 {
        return Err(EvalError::ZeroK);
    }
    if k > predictions.k() {
        return Err(EvalError::DepthExceeded { k, depth: predictions.k() });
    }
    let lists = predictions.per_mask();
    Ok(match mode {
        MatchMode::Exact => {
            let correct = lists.iter().zip(gold_pieces).filter(|(list, gold)| in_top_k(list, k, gold)).count();
            (correct, lists.len().max(gold_pieces.len()))
        }
        MatchMode::AnyToken => {
            let correct = lists.iter().filter(|list| gold_pieces.iter().any(|gold| in_top_k(list, k, gold))).count();
            (correct, lists.len())
        }
    })
}

/// Fraction of masks whose gold appears among the top `k` candidates.
///
/// Exact mode pairs mask `i` with gold piece `i`; masks and gold pieces
/// without a partner count as misses. Any-token mode accepts any gold piece.
pub fn mask_accuracy(
    predictions: &PredictionSet,
    gold_pieces: &[String],
    k: usize,
    mode: MatchMode,
) -> Result<f64, EvalError> {
    let (correct, total) = mask_hits(predictions, gold_pieces, k, mode)?;
    Ok(if total == 0 { 0.0 } else { correct as f64 / total as f64 })
}

/// Reorders candidate lists. Must return a permutation of `0..candidates.len()`.
pub trait Reranker {
    fn reorder(&self, mask_index: usize, candidates: &[Candidate]) -> Vec<usize>;
}

#[derive(Debug, Clone, Copy, Default)]
pub struct IdentityReranker;

impl Reranker for IdentityReranker {
    fn reorder(&self, _mask_index: usize, candidates: &[Candidate]) -> Vec<usize> {
        (0..candidates.len()).collect()
    }
}

/// Moves the gold piece to the front when it is among the candidates.
#[derive(Debug, Clone)]
pub struct OracleReranker {
    gold: Vec<String>,
    mode: MatchMode,
}

impl OracleReranker {
    pub fn new(gold: Vec<String>, mode: MatchMode) -> Self {
        OracleReranker { gold, mode }
    }

    pub fn for_instance(masked: &MaskedInstance, mode: MatchMode) -> Self {
        OracleReranker::new(masked.mask_gold(), mode)
    }
}

impl Reranker for OracleReranker {
    fn reorder(&self, mask_index: usize, candidates: &[Candidate]) -> Vec<usize> {
        let hit = match self.mode {
            MatchMode::Exact => self.gold.get(mask_index).and_then(|g| candidates.iter().position(|c| &c.piece == g)),
            MatchMode::AnyToken => candidates.iter().position(|c| self.gold.contains(&c.piece)),
        };
        let mut order: Vec<usize> = (0..candidates.len()).collect();
        if let Some(p) = hit {
            order[..=p].rotate_right(1);
        }
        order
    }
}

pub fn rerank(predictions: &PredictionSet, reranker: &dyn Reranker) -> PredictionSet {
    predictions.permuted(|mask, list| {
        let order = reranker.reorder(mask, list);
        let mut seen = vec![false; list.len()];
        assert!(
            order.len() == list.len()
                && order.iter().all(|&i| i < list.len() && !std::mem::replace(&mut seen[i], true)),
            "reranker returned {order:?}, not a permutation of {} candidates",
            list.len()
        );
        order
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RerankMode {
    #[default]
    None,
    Oracle,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalConfig {
    pub strategy: MaskStrategy,
    pub k: usize,
    /// Defaults to [`MatchMode::default_for`] the strategy.
    pub mode: Option<MatchMode>,
    pub include_deletions: bool,
    pub beta: f64,
    pub rerank: RerankMode,
}

impl EvalConfig {
    pub fn new(strategy: MaskStrategy) -> Self {
        EvalConfig {
            strategy,
            k: 5,
            mode: None,
            include_deletions: false,
            beta: DEFAULT_BETA,
            rerank: RerankMode::None,
        }
    }

    pub fn match_mode(&self) -> MatchMode {
        self.mode.unwrap_or_else(|| MatchMode::default_for(self.strategy))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub scheme: Option<Scheme>,
    pub strategy: MaskStrategy,
    pub mode: MatchMode,
    pub k: usize,
    pub tp: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
    pub precision: f64,
    pub recall: f64,
    pub f_beta: f64,
    pub beta: f64,
    /// Mask-level accuracy for every depth `1..=k`, measured on the
    /// predictions after reranking.
    pub acc_at: BTreeMap<usize, f64>,
    pub masks: u64,
    pub n_instances: u64,
    pub excluded_deletions: u64,
}

/// Per-instance outcome of [`evaluate_corpus`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceResult {
    pub instance_id: String,
    pub hypothesis: Option<TokenSeq>,
    pub counts: Counts,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub predictions: Option<PredictionSet>,
    /// Correct masks at depth `1..=k`, index 0 being depth 1.
    #[serde(skip)]
    mask_correct: Vec<usize>,
    #[serde(skip)]
    mask_total: usize,
}

fn evaluate_one(
    instance: &SingleEditInstance,
    config: &EvalConfig,
    mode: MatchMode,
    model: &dyn FillModel,
) -> Result<InstanceResult, EvalError> {
    let instance_id = instance.instance_id.clone();
    if instance.is_deletion() {
        if !config.include_deletions {
            return Ok(InstanceResult {
                instance_id,
                hypothesis: None,
                counts: Counts::default(),
                predictions: None,
                mask_correct: Vec::new(),
                mask_total: 0,
            });
        }
        let hypothesis = apply_deletion(instance)?;
        let counts = score_sentence(&instance.source, &hypothesis, &instance.gold(), mode);
        return Ok(InstanceResult {
            instance_id,
            hypothesis: Some(hypothesis),
            counts,
            predictions: None,
            mask_correct: vec![0; config.k],
            mask_total: 0,
        });
    }

    let masked = mask_instance(instance, config.strategy, Some(model))?;
    let raw = fill(model, &masked, config.k)
        .map_err(|source| EvalError::Fill { instance_id: instance_id.clone(), source })?;
    let predictions = match config.rerank {
        RerankMode::None => raw,
        RerankMode::Oracle => rerank(&raw, &OracleReranker::for_instance(&masked, mode)),
    };
    let hypothesis = assemble_hypothesis(&masked, &predictions, 1)
        .map_err(|source| EvalError::Assemble { instance_id: instance_id.clone(), source })?;
    let counts = score_sentence(&instance.source, &hypothesis, &instance.gold(), mode);

    let gold = masked.mask_gold();
    let mut mask_correct = Vec::with_capacity(config.k);
    let mut mask_total = 0;
    for depth in 1..=config.k {
        let (correct, total) = mask_hits(&predictions, &gold, depth, mode)?;
        mask_correct.push(correct);
        mask_total = total;
    }
    Ok(InstanceResult {
        instance_id,
        hypothesis: Some(hypothesis),
        counts,
        predictions: Some(predictions),
        mask_correct,
        mask_total,
    })
}

/// Mask, fill, assemble and score every instance, then micro-average.
///
/// Instances are processed in parallel on the current rayon pool. Deletion
/// residuals are skipped unless `include_deletions` is set, in which case they
/// are applied directly and scored like any other hypothesis. On failure the
/// error of the earliest failing instance is returned.
pub fn evaluate_corpus(
    instances: &[SingleEditInstance],
    config: &EvalConfig,
    model: &dyn FillModel,
) -> Result<(EvalReport, Vec<InstanceResult>), EvalError> {
    if config.k == 0 {
        return Err(EvalError::ZeroK);
    }
    f_beta(0.0, 0.0, config.beta)?;
    let mode = config.match_mode();
    let outcomes: Vec<Result<InstanceResult, EvalError>> =
        instances.par_iter().map(|inst| evaluate_one(inst, config, mode, model)).collect();
    let results = outcomes.into_iter().collect::<Result<Vec<_>, _>>()?;

    let mut counts = Counts::default();
    let mut correct = vec![0usize; config.k];
    let mut masks = 0usize;
    let mut excluded = 0u64;
    for r in &results {
        if r.hypothesis.is_none() {
            excluded += 1;
            continue;
        }
        counts += r.counts;
        masks += r.mask_total;
        for (slot, c) in correct.iter_mut().zip(&r.mask_correct) {
            *slot += c;
        }
    }
    let scores = prf(counts, config.beta)?;
    let acc_at = if masks == 0 {
        BTreeMap::new()
    } else {
        correct.iter().enumerate().map(|(i, &c)| (i + 1, c as f64 / masks as f64)).collect()
    };
    let report = EvalReport {
        scheme: instances.first().map(|i| i.scheme),
        strategy: config.strategy,
        mode,
        k: config.k,
        tp: counts.tp,
        fp: counts.fp,
        fn_: counts.fn_,
        precision: scores.precision,
        recall: scores.recall,
        f_beta: scores.f_beta,
        beta: config.beta,
        acc_at,
        masks: masks as u64,
        n_instances: (results.len() as u64) - excluded,
        excluded_deletions: excluded,
    };
    Ok((report, results))
}

fn strategy_label(strategy: MaskStrategy) -> &'static str {
    match strategy {
        MaskStrategy::OriginSpan => "# origin",
        MaskStrategy::TargetLength => "# target",
        MaskStrategy::Single => "single",
    }
}

/// Renders reports as two strategy-by-scheme tables: sentence-level P/R/F at
/// rank 1, and mask-level Acc@1 / Acc@k.
pub fn render_tables(reports: &[EvalReport]) -> String {
    let mut schemes: Vec<Option<Scheme>> = reports.iter().map(|r| r.scheme).collect();
    schemes.sort();
    schemes.dedup();
    let mut strategies: Vec<MaskStrategy> = reports.iter().map(|r| r.strategy).collect();
    strategies.sort();
    strategies.dedup();
    let find = |st: MaskStrategy, sc: Option<Scheme>| reports.iter().find(|r| r.strategy == st && r.scheme == sc);
    let scheme_name = |sc: Option<Scheme>| sc.map_or("all", Scheme::as_str);
    let beta = reports.first().map_or(DEFAULT_BETA, |r| r.beta);
    let k = reports.iter().map(|r| r.k).max().unwrap_or(1);

    let mut out = String::new();
    let _ = writeln!(out, "Sentence-level evaluation");
    let _ = write!(out, "{:<10}", "strategy");
    for &sc in &schemes {
        let _ = write!(out, " | {:<26}", scheme_name(sc));
    }
    out.push('\n');
    let _ = write!(out, "{:<10}", "");
    for _ in &schemes {
        let _ = write!(out, " | {:>8}{:>8}{:>10}", "P@1", "R@1", format!("F{beta}@1"));
    }
    out.push('\n');
    for &st in &strategies {
        let _ = write!(out, "{:<10}", strategy_label(st));
        for &sc in &schemes {
            match find(st, sc) {
                Some(r) => {
                    let _ = write!(out, " | {:>8.3}{:>8.3}{:>10.3}", r.precision, r.recall, r.f_beta);
                }
                None => {
                    let _ = write!(out, " | {:>8}{:>8}{:>10}", "-", "-", "-");
                }
            }
        }
        out.push('\n');
    }

    out.push('\n');
    let _ = writeln!(out, "Mask-level evaluation");
    let _ = write!(out, "{:<10}", "strategy");
    for &sc in &schemes {
        let _ = write!(out, " | {:<16}", scheme_name(sc));
    }
    out.push('\n');
    let _ = write!(out, "{:<10}", "");
    for _ in &schemes {
        let _ = write!(out, " | {:>8}{:>8}", "Acc@1", format!("Acc@{k}"));
    }
    out.push('\n');
    for &st in &strategies {
        let _ = write!(out, "{:<10}", strategy_label(st));
        for &sc in &schemes {
            let cell = find(st, sc).and_then(|r| Some((r.acc_at.get(&1)?, r.acc_at.get(&r.k)?)));
            match cell {
                Some((a1, ak)) => {
                    let _ = write!(out, " | {a1:>8.3}{ak:>8.3}");
                }
                None => {
                    let _ = write!(out, " | {:>8}{:>8}", "-", "-");
                }
            }
        }
        out.push('\n');
    }
    out
}
