//! End-to-end runs over the bundled corpora with the mock models.

mod common;

use common::*;
use gecmf_core::evaluation::RerankMode;
use gecmf_core::fillmask::{GoldMock, LexiconMock};
use gecmf_core::{evaluate_corpus, expand_corpus, parse_m2, EvalConfig, MaskStrategy, MatchMode, Scheme};

fn synthetic(scheme: Scheme) -> Vec<gecmf_core::SingleEditInstance> {
    expand_corpus(&parse_m2(&std::fs::read_to_string(SYNTHETIC_PATH).unwrap()).unwrap(), scheme)
}

#[test]
fn misplaced_gold_is_found_only_at_depth() {
    let instances = synthetic(Scheme::EachEdit);
    let model = GoldMock::with_rank(3).unwrap();
    let (report, _) = evaluate_corpus(&instances, &EvalConfig::new(MaskStrategy::OriginSpan), &model).unwrap();
    assert_eq!(report.tp, 0);
    assert!(report.precision < 1.0 && report.recall < 1.0);
    assert_eq!(report.acc_at[&1], 0.0);
    assert_eq!(report.acc_at[&2], 0.0);
    assert_eq!(report.acc_at[&3], 1.0);
    assert_eq!(report.acc_at[&5], 1.0);

    let oracle = EvalConfig { rerank: RerankMode::Oracle, ..EvalConfig::new(MaskStrategy::OriginSpan) };
    let (reranked, _) = evaluate_corpus(&instances, &oracle, &model).unwrap();
    assert_eq!((reranked.precision, reranked.recall), (1.0, 1.0));
}

#[test]
fn gold_beyond_depth_is_never_found() {
    let instances = synthetic(Scheme::LastEdit);
    let model = GoldMock::with_rank(9).unwrap();
    let config = EvalConfig { rerank: RerankMode::Oracle, ..EvalConfig::new(MaskStrategy::Single) };
    let (report, _) = evaluate_corpus(&instances, &config, &model).unwrap();
    assert_eq!(report.tp, 0);
    assert!(report.acc_at.values().all(|&a| a == 0.0));
}

#[test]
fn deletions_are_counted_apart_unless_included() {
    let instances = synthetic(Scheme::EachEdit);
    let deletions = instances.iter().filter(|i| i.is_deletion()).count() as u64;
    assert!(deletions > 0);
    let model = GoldMock::default();
    let (skip, results) = evaluate_corpus(&instances, &EvalConfig::new(MaskStrategy::Single), &model).unwrap();
    assert_eq!(skip.excluded_deletions, deletions);
    assert_eq!(skip.n_instances + deletions, instances.len() as u64);
    assert_eq!(results.len(), instances.len());
    assert_eq!(results.iter().filter(|r| r.hypothesis.is_none()).count() as u64, deletions);

    let config = EvalConfig { include_deletions: true, ..EvalConfig::new(MaskStrategy::Single) };
    let (with, _) = evaluate_corpus(&instances, &config, &model).unwrap();
    assert_eq!(with.excluded_deletions, 0);
    assert_eq!(with.tp, skip.tp + deletions);
}

#[test]
fn single_mask_needs_any_token_matching_for_multiword_gold() {
    let instances = synthetic(Scheme::EachEdit);
    let model = GoldMock::default();
    let exact = EvalConfig { mode: Some(MatchMode::Exact), ..EvalConfig::new(MaskStrategy::Single) };
    let (strict, _) = evaluate_corpus(&instances, &exact, &model).unwrap();
    let (loose, _) = evaluate_corpus(&instances, &EvalConfig::new(MaskStrategy::Single), &model).unwrap();
    assert_eq!(loose.mode, MatchMode::AnyToken);
    assert!(strict.tp < loose.tp);
    assert_eq!(loose.f_beta, 1.0);
}

#[test]
fn lexicon_mock_runs_every_strategy_deterministically() {
    let instances = synthetic(Scheme::EachEdit);
    let model = LexiconMock::bundled();
    for strategy in MaskStrategy::ALL {
        let config = EvalConfig::new(strategy);
        let first = evaluate_corpus(&instances, &config, &model).unwrap();
        let second = evaluate_corpus(&instances, &config, &model).unwrap();
        assert_eq!(first, second);
        assert_eq!(first.0.tp, 0, "bundled words never occur as synthetic replacements");
        assert!(first.0.fp > 0);
        assert_eq!(first.0.precision, 0.0);
    }
}

#[test]
fn error_cases_through_the_pipeline() {
    let corpus = parse_m2(&std::fs::read_to_string(ERROR_CASES_PATH).unwrap()).unwrap();
    let instances = expand_corpus(&corpus, Scheme::EachEdit);
    let model = GoldMock::default();
    for strategy in MaskStrategy::ALL {
        let (report, results) = evaluate_corpus(&instances, &EvalConfig::new(strategy), &model).unwrap();
        assert_eq!(report.excluded_deletions, 1, "{strategy}");
        let counts = |id: &str| results.iter().find(|r| r.instance_id == id).unwrap().counts;
        assert_eq!(counts("s0-e0").tp, 1, "{strategy}");
        assert_eq!(counts("s1-e0").tp, 1, "{strategy}");
        let spelling = results.iter().find(|r| r.instance_id == "s1-e0").unwrap();
        assert!(spelling.hypothesis.as_ref().unwrap().join().contains("to recommend you"));

        // The reordering re-aligns as a deletion plus an insertion, so only
        // any-token matching credits it.
        let reorder = counts("s3-e0");
        match report.mode {
            MatchMode::Exact => assert_eq!((reorder.tp, reorder.fp, reorder.fn_), (0, 2, 1), "{strategy}"),
            MatchMode::AnyToken => assert_eq!((reorder.tp, reorder.fp, reorder.fn_), (1, 0, 0), "{strategy}"),
        }
    }
}
