//! CASH search contracts: oracle equivalence on a discretized space, warm
//! starts, budget handling, ensembling, and refit semantics.

use std::collections::BTreeMap;

use driftml::learners::{HpValue, LearnerKind, LearnerSpec};
use driftml::search::{
    build_ensemble, evo_search, incumbent_of, random_search_stack, refit, run_search,
    smbo_search, EnsembleMethod, Paradigm, ScoredModel, SearchBudget, StackerKind,
};
use driftml::space::{
    HyperparamDomain, LearnerDef, PipelineConfig, PreprocChoices, SearchSpace,
};
use driftml::stream::{Instance, Row, StreamSchema, TrainView};
use driftml::{rng, Error};
use rand::Rng;

/// Discretized 64-config space over deterministic learners (tree, knn), so
/// holdout scores do not depend on the evaluation path.
fn space64() -> SearchSpace {
    SearchSpace {
        learners: vec![
            LearnerDef {
                kind: LearnerKind::DecisionTree,
                domains: vec![HyperparamDomain::integer("depth", 1, 8)],
            },
            LearnerDef {
                kind: LearnerKind::Knn,
                domains: vec![HyperparamDomain::integer("k", 1, 8)],
            },
        ],
        preprocs: PreprocChoices {
            standardize: vec![true, false],
            variance_thresholds: vec![0.0, 1e-4],
            one_hot: vec![false],
        },
        restricted_incremental: false,
    }
}

fn view_from(x: Vec<Vec<f64>>, y: Vec<usize>) -> TrainView {
    TrainView {
        rows: x
            .into_iter()
            .zip(y)
            .enumerate()
            .map(|(i, (features, label))| Row {
                id: (0, i),
                instance: Instance { features, label },
            })
            .collect(),
    }
}

/// Noisy two-moon-ish task; depth and k genuinely matter.
fn task(seed: u64, n: usize) -> (StreamSchema, TrainView) {
    let mut r = rng::derive(seed, "task", 0);
    let mut x = Vec::with_capacity(n);
    let mut y = Vec::with_capacity(n);
    for _ in 0..n {
        let a: f64 = r.gen_range(-2.0..2.0);
        let b: f64 = r.gen_range(-2.0..2.0);
        let label = usize::from(a * a + 0.5 * b > 1.0);
        let label = if r.gen::<f64>() < 0.08 { 1 - label } else { label };
        x.push(vec![a, b]);
        y.push(label);
    }
    (StreamSchema::numeric(2, 2), view_from(x, y))
}

/// Brute-force holdout scores for every config in a discretized space,
/// using the same temporal split as the searches. Valid as an oracle only
/// for deterministic learner kinds.
fn brute_force_scores(
    space: &SearchSpace,
    schema: &StreamSchema,
    data: &TrainView,
) -> Vec<(PipelineConfig, f64)> {
    let (train, holdout) = data.split_holdout(0.25);
    let holdout_x: Vec<Vec<f64>> = holdout
        .rows
        .iter()
        .map(|r| r.instance.features.clone())
        .collect();
    let holdout_y: Vec<usize> = holdout.rows.iter().map(|r| r.instance.label).collect();
    space
        .enumerate()
        .expect("space must be discretized")
        .into_iter()
        .map(|config| {
            let model = driftml::learners::fit_pipeline(&config, &train, schema, 0).unwrap();
            let (preds, _) = model.predict_rows(&holdout_x);
            let acc = preds
                .iter()
                .zip(&holdout_y)
                .filter(|(p, l)| p == l)
                .count() as f64
                / holdout_y.len() as f64;
            (config, acc)
        })
        .collect()
}

/// Brute-force argmax over the 64-config space. Configs that are twins by
/// construction tie exactly (standardization cannot change a tree's splits,
/// and the variance filter is inert without near-constant columns), so the
/// oracle is the argmax *set* plus the unique maximal score.
fn brute_force_argmax(
    schema: &StreamSchema,
    data: &TrainView,
) -> (f64, std::collections::BTreeSet<String>, PipelineConfig) {
    let space = space64();
    let scores = brute_force_scores(&space, schema, data);
    let best = scores
        .iter()
        .map(|(_, s)| *s)
        .fold(f64::NEG_INFINITY, f64::max);
    let set: std::collections::BTreeSet<String> = scores
        .iter()
        .filter(|(_, s)| *s == best)
        .map(|(c, _)| c.stable_hash())
        .collect();
    let first = scores
        .iter()
        .find(|(_, s)| *s == best)
        .map(|(c, _)| c.clone())
        .unwrap();
    (best, set, first)
}

#[test]
fn all_three_paradigms_match_brute_force_on_64_space() {
    let space = space64();
    let (schema, data) = task(1, 320);
    let (best_score, argmax_set, _) = brute_force_argmax(&schema, &data);
    let budget = SearchBudget::evaluations(64);
    for seed in [1u64, 2] {
        for paradigm in [Paradigm::RandomStack, Paradigm::Smbo, Paradigm::Evo] {
            let fitted = run_search(
                paradigm,
                &space,
                &schema,
                &data,
                &budget,
                StackerKind::Linear,
                seed,
                &[],
            )
            .unwrap();
            assert_eq!(fitted.history.len(), 64, "{paradigm:?} must enumerate the space");
            let incumbent_score = fitted
                .history
                .iter()
                .map(|r| r.holdout_score)
                .fold(f64::NEG_INFINITY, f64::max);
            assert_eq!(incumbent_score, best_score, "{paradigm:?} seed {seed}");
            assert!(
                argmax_set.contains(&fitted.incumbent.stable_hash()),
                "{paradigm:?} seed {seed}: incumbent not a brute-force argmax"
            );
        }
    }
}

#[test]
fn single_evaluation_budget_yields_single_member_ensemble() {
    let (schema, data) = task(3, 200);
    let space = SearchSpace::default_space(false, false);
    let fitted = random_search_stack(
        &space,
        &schema,
        &data,
        &SearchBudget::evaluations(1),
        StackerKind::Linear,
        7,
        &[],
    )
    .unwrap();
    assert_eq!(fitted.history.len(), 1);
    assert_eq!(fitted.ensemble.members.len(), 1);
    assert!(fitted.ensemble.stacker_fallback);
    assert_eq!(
        fitted.incumbent.stable_hash(),
        fitted.history[0].config.stable_hash()
    );
}

#[test]
fn zero_evaluation_budget_is_an_error() {
    let (schema, data) = task(4, 200);
    let space = SearchSpace::default_space(false, false);
    let err = random_search_stack(
        &space,
        &schema,
        &data,
        &SearchBudget::evaluations(0),
        StackerKind::Linear,
        7,
        &[],
    )
    .unwrap_err();
    assert!(matches!(err, Error::BudgetBeforeFirstEval));
}

#[test]
fn warm_configs_evaluated_first_and_optimum_becomes_incumbent() {
    let space = space64();
    let (schema, data) = task(1, 320);
    let (best_score, argmax_set, first_best) = brute_force_argmax(&schema, &data);
    for paradigm in [Paradigm::RandomStack, Paradigm::Smbo, Paradigm::Evo] {
        let fitted = run_search(
            paradigm,
            &space,
            &schema,
            &data,
            &SearchBudget::evaluations(8),
            StackerKind::Linear,
            9,
            std::slice::from_ref(&first_best),
        )
        .unwrap();
        assert_eq!(
            fitted.history[0].config.stable_hash(),
            first_best.stable_hash(),
            "{paradigm:?}: warm config must be evaluated first"
        );
        assert_eq!(fitted.history[0].holdout_score, best_score, "{paradigm:?}");
        assert!(
            argmax_set.contains(&fitted.incumbent.stable_hash()),
            "{paradigm:?}: warm optimum must remain the incumbent"
        );
        // ties go to the earliest evaluation, which is the warm config
        assert_eq!(
            fitted.incumbent.stable_hash(),
            first_best.stable_hash(),
            "{paradigm:?}"
        );
    }
}

#[test]
fn smbo_with_init_only_budget_returns_best_of_init() {
    let (schema, data) = task(5, 240);
    let space = SearchSpace::default_space(false, false);
    let fitted = smbo_search(&space, &schema, &data, &SearchBudget::evaluations(5), 11, &[])
        .unwrap();
    assert_eq!(fitted.history.len(), 5);
    assert_eq!(
        fitted.incumbent.stable_hash(),
        incumbent_of(&fitted.history).stable_hash()
    );
    let best = fitted
        .history
        .iter()
        .map(|r| r.holdout_score)
        .fold(f64::NEG_INFINITY, f64::max);
    assert_eq!(
        fitted
            .history
            .iter()
            .find(|r| r.holdout_score == best)
            .unwrap()
            .config
            .stable_hash(),
        fitted.incumbent.stable_hash()
    );
}

#[test]
fn evo_handles_single_config_space() {
    // one learner, one effectively-degenerate domain: mutation can only
    // flip between two configs; search must terminate on budget
    let space = SearchSpace {
        learners: vec![LearnerDef {
            kind: LearnerKind::DecisionTree,
            domains: vec![HyperparamDomain::integer("depth", 1, 2)],
        }],
        preprocs: PreprocChoices {
            standardize: vec![false],
            variance_thresholds: vec![0.0],
            one_hot: vec![false],
        },
        restricted_incremental: false,
    };
    let (schema, data) = task(6, 200);
    let fitted = evo_search(&space, &schema, &data, &SearchBudget::evaluations(30), 3, &[])
        .unwrap();
    assert!(fitted.history.len() <= 2, "only two distinct configs exist");
}

#[test]
fn evo_reaches_bayes_gap_on_noisy_linear_task() {
    // 1000-instance threshold task with 10% label noise: Bayes accuracy is
    // 0.90; the search should come within 5 points on the holdout
    let mut r = rng::derive(8, "sea-batch", 0);
    let mut x = Vec::new();
    let mut y = Vec::new();
    for _ in 0..1000 {
        let row = vec![
            r.gen_range(0.0..10.0),
            r.gen_range(0.0..10.0),
            r.gen_range(0.0..10.0),
        ];
        let label = usize::from(row[0] + row[1] <= 8.0);
        let label = if r.gen::<f64>() < 0.10 { 1 - label } else { label };
        x.push(row);
        y.push(label);
    }
    let schema = StreamSchema::numeric(3, 2);
    let data = view_from(x, y);
    let space = SearchSpace::default_space(false, false);
    let fitted = evo_search(&space, &schema, &data, &SearchBudget::evaluations(40), 5, &[])
        .unwrap();
    let best = fitted
        .history
        .iter()
        .map(|r| r.holdout_score)
        .fold(f64::NEG_INFINITY, f64::max);
    assert!(best >= 0.85, "incumbent holdout accuracy {best}");
}

#[test]
fn wall_clock_budget_stops_new_evaluations_at_search_deadline() {
    let (schema, data) = task(9, 400);
    let space = SearchSpace::default_space(false, false);
    let budget = SearchBudget::seconds(1.0).unwrap();
    let fitted = random_search_stack(
        &space,
        &schema,
        &data,
        &budget,
        StackerKind::Linear,
        13,
        &[],
    )
    .unwrap();
    assert!(!fitted.history.is_empty());
    // the last fifth of the budget is reserved for ensemble construction
    for (i, start) in fitted.eval_start_offsets.iter().enumerate() {
        assert!(*start < 0.8, "evaluation {i} started at {start}s of a 1s budget");
    }
}

#[test]
fn greedy_selection_combines_anticorrelated_members() {
    // model A is right on 90% of the holdout; models B and C are right on
    // complementary halves (50% each, anti-correlated errors); greedy must
    // reach >= 0.9 regardless of the junk members
    let n = 20;
    let holdout_x: Vec<Vec<f64>> = (0..n).map(|i| vec![i as f64]).collect();
    let holdout_y: Vec<usize> = (0..n).map(|i| i % 2).collect();
    // kNN k=1 memorizes its training set, so prescribed predictions are
    // arranged by training each "model" on relabeled copies of the holdout
    let schema = StreamSchema::numeric(1, 2);
    let make_model = |labels: Vec<usize>, score: f64| {
        let view = view_from(holdout_x.clone(), labels);
        let mut hp = BTreeMap::new();
        hp.insert("k".to_string(), HpValue::Int(1));
        let config = PipelineConfig::assemble(
            LearnerSpec::new(LearnerKind::Knn, hp),
            false,
            false,
            0.0,
        );
        ScoredModel {
            model: driftml::learners::fit_pipeline(&config, &view, &schema, 0).unwrap(),
            holdout_score: score,
        }
    };
    let a_labels: Vec<usize> = (0..n).map(|i| if i < 2 { 1 - i % 2 } else { i % 2 }).collect();
    let b_labels: Vec<usize> = (0..n).map(|i| if i < n / 2 { i % 2 } else { 1 - i % 2 }).collect();
    let c_labels: Vec<usize> = (0..n).map(|i| if i >= n / 2 { i % 2 } else { 1 - i % 2 }).collect();
    let candidates = vec![
        make_model(a_labels, 0.9),
        make_model(b_labels, 0.5),
        make_model(c_labels, 0.5),
    ];
    let holdout = view_from(holdout_x.clone(), holdout_y.clone());
    let ensemble = build_ensemble(
        candidates,
        &holdout,
        &EnsembleMethod::Greedy { size: 10 },
        0,
    )
    .unwrap();
    let (preds, _) = ensemble.predict_rows(&holdout_x);
    let acc = preds
        .iter()
        .zip(&holdout_y)
        .filter(|(p, l)| p == l)
        .count() as f64
        / n as f64;
    assert!(acc >= 0.9, "greedy ensemble holdout accuracy {acc}");
}

#[test]
fn weighted_vote_of_identical_models_matches_single_member() {
    let (schema, data) = task(10, 200);
    let mut hp = BTreeMap::new();
    hp.insert("depth".to_string(), HpValue::Int(4));
    let config = PipelineConfig::assemble(
        LearnerSpec::new(LearnerKind::DecisionTree, hp),
        false,
        false,
        0.0,
    );
    let model = driftml::learners::fit_pipeline(&config, &data, &schema, 0).unwrap();
    let probe: Vec<Vec<f64>> = data.rows.iter().map(|r| r.instance.features.clone()).collect();
    let single = model.predict_rows(&probe).0;
    let twin = build_ensemble(
        vec![
            ScoredModel { model: model.clone(), holdout_score: 0.8 },
            ScoredModel { model: model.clone(), holdout_score: 0.8 },
        ],
        &data,
        &EnsembleMethod::TopKVote { k: 2 },
        0,
    )
    .unwrap();
    assert_eq!(twin.predict_rows(&probe).0, single);
}

#[test]
fn refit_keeps_configs_and_recomputes_members() {
    let (schema, data) = task(11, 300);
    let space = SearchSpace::default_space(false, false);
    let fitted = evo_search(&space, &schema, &data, &SearchBudget::evaluations(8), 21, &[])
        .unwrap();
    let hashes_before = fitted.ensemble.member_hashes();
    let (schema2, data2) = task(12, 300);
    assert_eq!(schema, schema2);
    let refitted = refit(&fitted, &data2, &schema, 22).unwrap();
    assert_eq!(refitted.ensemble.member_hashes(), hashes_before);
    assert_eq!(
        refitted.incumbent.stable_hash(),
        fitted.incumbent.stable_hash()
    );
    // refit on empty data is an error
    let empty = TrainView { rows: vec![] };
    assert!(refit(&fitted, &empty, &schema, 23).is_err());
}

#[test]
fn refit_on_single_class_data_yields_flagged_degenerate_members() {
    let (schema, data) = task(13, 200);
    let space = SearchSpace::default_space(false, false);
    let fitted = evo_search(&space, &schema, &data, &SearchBudget::evaluations(6), 31, &[])
        .unwrap();
    let constant = view_from(
        (0..100).map(|i| vec![i as f64, 0.0]).collect(),
        vec![1; 100],
    );
    let refitted = refit(&fitted, &constant, &schema, 24).unwrap();
    assert!(refitted.ensemble.members.iter().all(|m| m.model.degenerate));
    let (preds, probs) = refitted.ensemble.predict_rows(&[vec![5.0, 5.0]]);
    assert_eq!(preds[0], 1);
    assert!((probs[0][1] - 1.0).abs() < 1e-9);
}

#[test]
fn histories_are_reproducible_under_evaluation_budgets() {
    let (schema, data) = task(14, 300);
    let space = SearchSpace::default_space(false, false);
    for paradigm in [Paradigm::RandomStack, Paradigm::Smbo, Paradigm::Evo] {
        let a = run_search(
            paradigm,
            &space,
            &schema,
            &data,
            &SearchBudget::evaluations(10),
            StackerKind::Linear,
            41,
            &[],
        )
        .unwrap();
        let b = run_search(
            paradigm,
            &space,
            &schema,
            &data,
            &SearchBudget::evaluations(10),
            StackerKind::Linear,
            41,
            &[],
        )
        .unwrap();
        let ha: Vec<(String, f64)> = a
            .history
            .iter()
            .map(|r| (r.config.stable_hash(), r.holdout_score))
            .collect();
        let hb: Vec<(String, f64)> = b
            .history
            .iter()
            .map(|r| (r.config.stable_hash(), r.holdout_score))
            .collect();
        assert_eq!(ha, hb, "{paradigm:?}");
    }
}
