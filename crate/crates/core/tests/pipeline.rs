//! Pipeline-level contracts: fit/predict/partial_fit semantics checked
//! against independent oracles.

use std::collections::BTreeMap;

use driftml::generators::{abrupt_spec, generate_stream, Family, NoiseSpec};
use driftml::learners::{
    fit_pipeline, partial_fit, predict_batch, HpValue, LearnerKind, LearnerSpec,
};
use driftml::rng;
use driftml::space::PipelineConfig;
use driftml::stream::{batchify, Instance, Row, StreamSchema, TrainView};
use driftml::Error;
use rand::Rng;

fn plain_config(kind: LearnerKind, hp: Vec<(&str, HpValue)>) -> PipelineConfig {
    let mut map = BTreeMap::new();
    for (k, v) in hp {
        map.insert(k.to_string(), v);
    }
    PipelineConfig::assemble(LearnerSpec::new(kind, map), false, false, 0.0)
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

/// Accuracy of the best single-feature threshold split, found by exhaustive
/// search over every midpoint and both polarities.
fn exhaustive_stump_accuracy(x: &[Vec<f64>], y: &[usize]) -> f64 {
    let n = x.len();
    let d = x[0].len();
    let mut best = 0.0f64;
    for f in 0..d {
        let mut values: Vec<f64> = x.iter().map(|r| r[f]).collect();
        values.sort_by(f64::total_cmp);
        values.dedup();
        for w in values.windows(2) {
            let threshold = 0.5 * (w[0] + w[1]);
            let mut left_as_one = 0usize;
            let mut left_as_zero = 0usize;
            for (xi, &yi) in x.iter().zip(y) {
                let left = xi[f] <= threshold;
                if (left && yi == 1) || (!left && yi == 0) {
                    left_as_one += 1;
                } else {
                    left_as_zero += 1;
                }
            }
            best = best.max(left_as_one.max(left_as_zero) as f64 / n as f64);
        }
    }
    best
}

#[test]
fn depth_one_tree_matches_exhaustive_stump_on_separable_blobs() {
    let mut r = rng::derive(61, "blobs", 0);
    let mut x = Vec::new();
    let mut y = Vec::new();
    for i in 0..200 {
        let c = i % 2;
        let center = if c == 0 { 0.0 } else { 4.0 };
        x.push(vec![center + r.gen_range(-1.0..1.0), r.gen_range(-1.0..1.0)]);
        y.push(c);
    }
    let oracle = exhaustive_stump_accuracy(&x, &y);
    assert!(oracle >= 0.95, "blob task is stump-separable: {oracle}");
    let config = plain_config(LearnerKind::DecisionTree, vec![("depth", HpValue::Int(1))]);
    let schema = StreamSchema::numeric(2, 2);
    let view = view_from(x.clone(), y.clone());
    let model = fit_pipeline(&config, &view, &schema, 0).unwrap();
    let (preds, _) = model.predict_rows(&x);
    let acc = preds.iter().zip(&y).filter(|(p, l)| p == l).count() as f64 / y.len() as f64;
    assert!(acc >= 0.95, "stump training accuracy {acc}");
    assert!(
        acc >= oracle - 0.02,
        "gini stump {acc} far below exhaustive oracle {oracle}"
    );
}

#[test]
fn gbm_reaches_bayes_gap_on_noisy_sea_batch() {
    // 1000-instance SEA batch with 10% label noise: Bayes accuracy 0.90
    let spec = driftml::generators::DriftSpec::none(driftml::generators::Concept::Sea(
        driftml::generators::SeaConcept::new(8.0),
    ));
    let (schema, instances, _) = generate_stream(2_000, &spec, &NoiseSpec::new(0.10), 62).unwrap();
    let train = view_from(
        instances[..1_000].iter().map(|i| i.features.clone()).collect(),
        instances[..1_000].iter().map(|i| i.label).collect(),
    );
    let config = plain_config(
        LearnerKind::GradientBoostedTrees,
        vec![
            ("n_trees", HpValue::Int(50)),
            ("learning_rate", HpValue::Real(0.1)),
            ("depth", HpValue::Int(3)),
        ],
    );
    let model = fit_pipeline(&config, &train, &schema, 0).unwrap();
    let holdout: Vec<Vec<f64>> = instances[1_000..].iter().map(|i| i.features.clone()).collect();
    let labels: Vec<usize> = instances[1_000..].iter().map(|i| i.label).collect();
    let (preds, probs) = model.predict_rows(&holdout);
    let acc =
        preds.iter().zip(&labels).filter(|(p, l)| p == l).count() as f64 / labels.len() as f64;
    assert!(acc >= 0.85, "gbm holdout accuracy {acc} (bayes 0.90)");
    for p in probs.iter().take(50) {
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-9);
    }
}

#[test]
fn constant_label_data_yields_flagged_constant_model() {
    let view = view_from((0..50).map(|i| vec![i as f64]).collect(), vec![1; 50]);
    let schema = StreamSchema::numeric(1, 2);
    let config = plain_config(LearnerKind::DecisionTree, vec![("depth", HpValue::Int(3))]);
    let model = fit_pipeline(&config, &view, &schema, 0).unwrap();
    assert!(model.degenerate);
    let batch = driftml::stream::Batch {
        index: 1,
        instances: (0..10)
            .map(|i| Instance { features: vec![i as f64 * 100.0], label: 0 })
            .collect(),
    };
    let (preds, probs) = predict_batch(&model, &batch).unwrap();
    assert!(preds.iter().all(|p| *p == 1));
    assert!(probs.iter().all(|p| p[1] == 1.0));
}

#[test]
fn predict_batch_rejects_schema_mismatch() {
    let view = view_from(
        (0..50).map(|i| vec![i as f64, 1.0]).collect(),
        (0..50).map(|i| i % 2).collect(),
    );
    let schema = StreamSchema::numeric(2, 2);
    let config = plain_config(LearnerKind::DecisionTree, vec![("depth", HpValue::Int(2))]);
    let model = fit_pipeline(&config, &view, &schema, 0).unwrap();
    let bad = driftml::stream::Batch {
        index: 0,
        instances: vec![Instance { features: vec![1.0], label: 0 }],
    };
    assert!(matches!(
        predict_batch(&model, &bad),
        Err(Error::DimensionMismatch { .. })
    ));
}

#[test]
fn partial_fit_contracts() {
    let view = view_from(
        (0..200).map(|i| vec![(i % 17) as f64, (i % 5) as f64]).collect(),
        (0..200).map(|i| usize::from(i % 17 > 8)).collect(),
    );
    let schema = StreamSchema::numeric(2, 2);
    // empty data: model unchanged
    let config = plain_config(
        LearnerKind::RandomForest,
        vec![("n_trees", HpValue::Int(20)), ("depth", HpValue::Int(4))],
    );
    let model = fit_pipeline(&config, &view, &schema, 1).unwrap();
    let empty = TrainView { rows: vec![] };
    let updated = partial_fit(&model, &empty, 2).unwrap();
    let probe = vec![vec![3.0, 1.0], vec![12.0, 2.0]];
    assert_eq!(model.predict_rows(&probe), updated.predict_rows(&probe));
    // non-incremental learners refuse partial_fit
    let knn = plain_config(LearnerKind::Knn, vec![("k", HpValue::Int(3))]);
    let knn_model = fit_pipeline(&knn, &view, &schema, 1).unwrap();
    assert!(matches!(
        partial_fit(&knn_model, &view, 2),
        Err(Error::NotIncremental(_))
    ));
}

#[test]
fn partial_fit_after_drift_beats_frozen_model_in_most_seeds() {
    let mut improved = 0;
    let seeds = 10;
    for seed in 0..seeds {
        let spec = abrupt_spec(Family::Sea, 5_000, 4);
        let (schema, instances, _) =
            generate_stream(12_000, &spec, &NoiseSpec::new(0.10), 70 + seed).unwrap();
        let batches = batchify(instances, 1000).unwrap();
        let config = plain_config(
            LearnerKind::GradientBoostedTrees,
            vec![
                ("n_trees", HpValue::Int(60)),
                ("learning_rate", HpValue::Real(0.15)),
                ("depth", HpValue::Int(3)),
            ],
        );
        // fit on pre-drift data
        let pre_view = TrainView::from_batch(&batches[0]);
        let frozen = fit_pipeline(&config, &pre_view, &schema, seed).unwrap();
        // partial_fit on three post-drift batches
        let mut post_rows = Vec::new();
        for batch in &batches[5..8] {
            post_rows.extend(TrainView::from_batch(batch).rows);
        }
        let adapted = partial_fit(&frozen, &TrainView { rows: post_rows }, seed).unwrap();
        // compare on later post-drift batches
        let probe: Vec<Vec<f64>> = batches[8..12]
            .iter()
            .flat_map(|b| b.instances.iter().map(|i| i.features.clone()))
            .collect();
        let labels: Vec<usize> = batches[8..12]
            .iter()
            .flat_map(|b| b.instances.iter().map(|i| i.label))
            .collect();
        let acc = |m: &driftml::learners::TrainedModel| {
            let (preds, _) = m.predict_rows(&probe);
            preds.iter().zip(&labels).filter(|(p, l)| p == l).count() as f64
                / labels.len() as f64
        };
        if acc(&adapted) > acc(&frozen) {
            improved += 1;
        }
    }
    assert!(
        improved > seeds / 2,
        "partial_fit improved post-drift accuracy in only {improved}/{seeds} seeds"
    );
}

#[test]
fn search_history_exports_as_csv() {
    let view = view_from(
        (0..200).map(|i| vec![(i % 13) as f64, (i % 7) as f64]).collect(),
        (0..200).map(|i| usize::from(i % 13 > 6)).collect(),
    );
    let schema = StreamSchema::numeric(2, 2);
    let space = driftml::space::SearchSpace::default_space(false, false);
    let fitted = driftml::search::evo_search(
        &space,
        &schema,
        &view,
        &driftml::search::SearchBudget::evaluations(6),
        77,
        &[],
    )
    .unwrap();
    let csv = fitted.history_csv();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "config_hash,learner,holdout_score,fit_seconds");
    assert_eq!(lines.len(), 1 + fitted.history.len());
    assert!(lines[1].split(',').count() == 4);
}
