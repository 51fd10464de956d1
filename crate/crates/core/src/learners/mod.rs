//! The learner and preprocessor zoo over which pipelines are built, with a
//! uniform fit / predict / incremental-update contract.
//!
//! Six learner kinds are available: decision tree, random forest, gradient
//! boosted trees, Gaussian naive Bayes, logistic SGD, and k-NN. Random
//! forests, boosted trees, and logistic SGD are incremental-capable: forests
//! and boosters append trees fitted on new data (existing trees untouched),
//! SGD continues gradient steps from its current weights. Preprocessors are
//! fitted on training data only and their statistics merge new data by
//! running-mean updates.

pub mod bayes;
pub mod dataset;
pub mod forest;
pub mod gbm;
pub mod knn;
pub mod linear;
pub mod preproc;
pub mod tree;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::audit;
use crate::error::{Error, Result};
use crate::rng;
use crate::space::PipelineConfig;
use crate::stream::{Batch, StreamSchema, TrainView};

use bayes::GaussianNb;
use dataset::Dataset;
use forest::RandomForest;
use gbm::Gbm;
use knn::Knn;
use linear::LogisticSgd;
use preproc::{FilterState, FittedPreproc, ImputeState, OneHotState, StandardizeState};
use tree::DecisionTree;

/// A hyperparameter value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum HpValue {
    Int(i64),
    Real(f64),
    Cat(String),
}

impl HpValue {
    pub fn as_int(&self) -> Option<i64> {
        match self {
            HpValue::Int(v) => Some(*v),
            _ => None,
        }
    }

    pub fn as_real(&self) -> Option<f64> {
        match self {
            HpValue::Real(v) => Some(*v),
            HpValue::Int(v) => Some(*v as f64),
            _ => None,
        }
    }

    pub fn as_cat(&self) -> Option<&str> {
        match self {
            HpValue::Cat(v) => Some(v),
            _ => None,
        }
    }

    /// Canonical text form used for stable hashing (reals by bit pattern).
    pub fn canonical(&self) -> String {
        match self {
            HpValue::Int(v) => format!("i{v}"),
            HpValue::Real(v) => format!("r{:016x}", v.to_bits()),
            HpValue::Cat(v) => format!("c{v}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LearnerKind {
    DecisionTree,
    RandomForest,
    GradientBoostedTrees,
    GaussianNaiveBayes,
    LogisticSgd,
    Knn,
}

pub const ALL_LEARNERS: [LearnerKind; 6] = [
    LearnerKind::DecisionTree,
    LearnerKind::RandomForest,
    LearnerKind::GradientBoostedTrees,
    LearnerKind::GaussianNaiveBayes,
    LearnerKind::LogisticSgd,
    LearnerKind::Knn,
];

/// Learners that support partial_fit.
pub const INCREMENTAL_LEARNERS: [LearnerKind; 3] = [
    LearnerKind::RandomForest,
    LearnerKind::GradientBoostedTrees,
    LearnerKind::LogisticSgd,
];

impl LearnerKind {
    pub fn is_incremental(&self) -> bool {
        INCREMENTAL_LEARNERS.contains(self)
    }

    pub fn name(&self) -> &'static str {
        match self {
            LearnerKind::DecisionTree => "decision_tree",
            LearnerKind::RandomForest => "random_forest",
            LearnerKind::GradientBoostedTrees => "gradient_boosted_trees",
            LearnerKind::GaussianNaiveBayes => "gaussian_naive_bayes",
            LearnerKind::LogisticSgd => "logistic_sgd",
            LearnerKind::Knn => "knn",
        }
    }
}

/// A learner choice plus its hyperparameter assignment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LearnerSpec {
    pub kind: LearnerKind,
    pub hyperparams: BTreeMap<String, HpValue>,
}

impl LearnerSpec {
    pub fn new(kind: LearnerKind, hyperparams: BTreeMap<String, HpValue>) -> Self {
        LearnerSpec { kind, hyperparams }
    }

    /// Library-default hyperparameters, used by the baselines.
    pub fn default_for(kind: LearnerKind) -> Self {
        let mut hp = BTreeMap::new();
        match kind {
            LearnerKind::DecisionTree => {
                hp.insert("depth".into(), HpValue::Int(6));
            }
            LearnerKind::RandomForest => {
                hp.insert("n_trees".into(), HpValue::Int(50));
                hp.insert("depth".into(), HpValue::Int(10));
            }
            LearnerKind::GradientBoostedTrees => {
                hp.insert("n_trees".into(), HpValue::Int(100));
                hp.insert("learning_rate".into(), HpValue::Real(0.1));
                hp.insert("depth".into(), HpValue::Int(3));
            }
            LearnerKind::GaussianNaiveBayes => {
                hp.insert("var_smoothing".into(), HpValue::Real(1e-9));
            }
            LearnerKind::LogisticSgd => {
                hp.insert("step".into(), HpValue::Real(0.01));
                hp.insert("reg".into(), HpValue::Real(1e-4));
            }
            LearnerKind::Knn => {
                hp.insert("k".into(), HpValue::Int(5));
            }
        }
        LearnerSpec { kind, hyperparams: hp }
    }

    fn int(&self, name: &str) -> i64 {
        self.hyperparams
            .get(name)
            .and_then(HpValue::as_int)
            .unwrap_or_else(|| panic!("{} missing integer hyperparameter {name}", self.kind.name()))
    }

    fn real(&self, name: &str) -> f64 {
        self.hyperparams
            .get(name)
            .and_then(HpValue::as_real)
            .unwrap_or_else(|| panic!("{} missing real hyperparameter {name}", self.kind.name()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PreprocKind {
    ImputeMean,
    OneHot,
    Standardize,
    VarianceFilter,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PreprocSpec {
    pub kind: PreprocKind,
    pub params: BTreeMap<String, HpValue>,
}

impl PreprocSpec {
    pub fn new(kind: PreprocKind) -> Self {
        PreprocSpec {
            kind,
            params: BTreeMap::new(),
        }
    }

    pub fn variance_filter(threshold: f64) -> Self {
        let mut params = BTreeMap::new();
        params.insert("threshold".into(), HpValue::Real(threshold));
        PreprocSpec {
            kind: PreprocKind::VarianceFilter,
            params,
        }
    }
}

/// SGD epochs are fixed; the step size and regularization are searched.
const SGD_EPOCHS: usize = 10;
/// Fraction of the configured tree/stage count grown per partial_fit call.
const INCREMENT_FRACTION: f64 = 0.2;

#[derive(Debug, Clone, Serialize, Deserialize)]
enum FittedLearner {
    Constant { class: usize },
    Tree(DecisionTree),
    Forest(RandomForest),
    Gbm(Gbm),
    Bayes(GaussianNb),
    Sgd(LogisticSgd),
    Knn(Knn),
}

impl FittedLearner {
    fn predict_proba(&self, x: &[f64], n_classes: usize) -> Vec<f64> {
        match self {
            FittedLearner::Constant { class } => {
                let mut p = vec![0.0; n_classes];
                p[*class] = 1.0;
                p
            }
            FittedLearner::Tree(m) => m.predict_dist(x).to_vec(),
            FittedLearner::Forest(m) => m.predict_proba(x),
            FittedLearner::Gbm(m) => m.predict_proba(x),
            FittedLearner::Bayes(m) => m.predict_proba(x),
            FittedLearner::Sgd(m) => m.predict_proba(x),
            FittedLearner::Knn(m) => m.predict_proba(x),
        }
    }
}

/// A fitted pipeline: preprocessor states plus a fitted learner. Immutable
/// after fit except through [`partial_fit`]; predictions are deterministic.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainedModel {
    pub config: PipelineConfig,
    pub n_features: usize,
    pub n_classes: usize,
    /// Instances seen across fit and partial_fit calls.
    pub n_trained: usize,
    /// True when the training data contained a single class and the model
    /// predicts that class everywhere.
    pub degenerate: bool,
    preprocs: Vec<FittedPreproc>,
    learner: FittedLearner,
}

fn argmax_lowest(p: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in p.iter().enumerate().skip(1) {
        if *v > p[best] {
            best = i;
        }
    }
    best
}

impl TrainedModel {
    pub fn kind(&self) -> LearnerKind {
        self.config.learner.kind
    }

    fn transform(&self, rows: &[Vec<f64>]) -> Vec<Vec<f64>> {
        let mut out = rows.to_vec();
        for p in &self.preprocs {
            p.transform(&mut out);
        }
        out
    }

    /// Predict raw feature rows: (class predictions, probability vectors).
    /// Probabilities are normalized; predictions are the argmax with the
    /// lowest class index winning ties.
    pub fn predict_rows(&self, rows: &[Vec<f64>]) -> (Vec<usize>, Vec<Vec<f64>>) {
        let transformed = self.transform(rows);
        let mut preds = Vec::with_capacity(rows.len());
        let mut probs = Vec::with_capacity(rows.len());
        for row in &transformed {
            let mut p = self.learner.predict_proba(row, self.n_classes);
            let sum: f64 = p.iter().sum();
            if sum > 0.0 {
                for v in p.iter_mut() {
                    *v /= sum;
                }
            } else {
                p = vec![1.0 / self.n_classes as f64; self.n_classes];
            }
            preds.push(argmax_lowest(&p));
            probs.push(p);
        }
        (preds, probs)
    }
}

fn fit_learner(spec: &LearnerSpec, data: &Dataset, seed: u64) -> FittedLearner {
    let idx: Vec<usize> = (0..data.len()).collect();
    match spec.kind {
        LearnerKind::DecisionTree => FittedLearner::Tree(DecisionTree::fit(
            &data.x,
            &data.y,
            data.n_classes,
            spec.int("depth") as usize,
            None,
            None,
            &idx,
        )),
        LearnerKind::RandomForest => FittedLearner::Forest(RandomForest::fit(
            &data.x,
            &data.y,
            data.n_classes,
            spec.int("n_trees") as usize,
            spec.int("depth") as usize,
            seed,
        )),
        LearnerKind::GradientBoostedTrees => FittedLearner::Gbm(Gbm::fit(
            &data.x,
            &data.y,
            data.n_classes,
            spec.int("n_trees") as usize,
            spec.real("learning_rate"),
            spec.int("depth") as usize,
        )),
        LearnerKind::GaussianNaiveBayes => FittedLearner::Bayes(GaussianNb::fit(
            &data.x,
            &data.y,
            data.n_classes,
            spec.real("var_smoothing"),
        )),
        LearnerKind::LogisticSgd => {
            let mut fit_rng = rng::derive(seed, "sgd-fit", 0);
            FittedLearner::Sgd(LogisticSgd::fit(
                &data.x,
                &data.y,
                data.n_classes,
                spec.real("step"),
                spec.real("reg"),
                SGD_EPOCHS,
                &mut fit_rng,
            ))
        }
        LearnerKind::Knn => FittedLearner::Knn(Knn::fit(
            &data.x,
            &data.y,
            data.n_classes,
            spec.int("k") as usize,
        )),
    }
}

/// Fit a pipeline on a training view: preprocessors are fitted on the
/// training data only (in config order), then the learner is fitted on the
/// transformed data. Single-class data yields a degenerate constant model
/// rather than an error.
pub fn fit_pipeline(
    config: &PipelineConfig,
    view: &TrainView,
    schema: &StreamSchema,
    seed: u64,
) -> Result<TrainedModel> {
    if view.is_empty() {
        return Err(Error::EmptyTrainingData);
    }
    audit::record(audit::FitKind::Member, view.row_ids());
    let mut data = Dataset::from_view(view, schema.n_classes);
    let mut fitted_preprocs = Vec::with_capacity(config.preprocs.len());
    for p in &config.preprocs {
        let fitted = match p.kind {
            PreprocKind::ImputeMean => FittedPreproc::Impute(ImputeState::fit(&data.x)),
            PreprocKind::OneHot => FittedPreproc::OneHot(OneHotState::from_schema(schema)),
            PreprocKind::Standardize => {
                FittedPreproc::Standardize(StandardizeState::fit(&data.x))
            }
            PreprocKind::VarianceFilter => {
                let threshold = p
                    .params
                    .get("threshold")
                    .and_then(HpValue::as_real)
                    .unwrap_or(0.0);
                FittedPreproc::VarianceFilter(FilterState::fit(&data.x, threshold))
            }
        };
        fitted.transform(&mut data.x);
        fitted_preprocs.push(fitted);
    }

    let present = data.present_classes();
    let (learner, degenerate) = if present.len() < 2 {
        (FittedLearner::Constant { class: present[0] }, true)
    } else {
        (fit_learner(&config.learner, &data, seed), false)
    };
    Ok(TrainedModel {
        config: config.clone(),
        n_features: schema.n_features,
        n_classes: schema.n_classes,
        n_trained: view.len(),
        degenerate,
        preprocs: fitted_preprocs,
        learner,
    })
}

/// Predict a batch with a trained model. The batch must conform to the
/// model's training schema.
pub fn predict_batch(
    model: &TrainedModel,
    batch: &Batch,
) -> Result<(Vec<usize>, Vec<Vec<f64>>)> {
    for inst in &batch.instances {
        if inst.features.len() != model.n_features {
            return Err(Error::DimensionMismatch {
                expected: model.n_features,
                found: inst.features.len(),
            });
        }
    }
    let rows: Vec<Vec<f64>> = batch
        .instances
        .iter()
        .map(|i| i.features.clone())
        .collect();
    Ok(model.predict_rows(&rows))
}

/// Incrementally update a model on new data. Forests and boosters append
/// ceil(0.2 x configured tree count) new trees fitted on the new data;
/// logistic SGD continues gradient steps. Hyperparameters are unchanged.
/// Empty data returns the model unchanged.
pub fn partial_fit(model: &TrainedModel, view: &TrainView, seed: u64) -> Result<TrainedModel> {
    if !model.kind().is_incremental() {
        return Err(Error::NotIncremental(model.kind().name().to_string()));
    }
    let mut updated = model.clone();
    if view.is_empty() {
        return Ok(updated);
    }
    audit::record(audit::FitKind::Member, view.row_ids());
    let mut data = Dataset::from_view(view, model.n_classes);
    for p in updated.preprocs.iter_mut() {
        p.update(&data.x);
        p.transform(&mut data.x);
    }
    updated.n_trained += view.len();
    if updated.degenerate {
        // a degenerate constant model cannot be extended tree-wise; refit
        // whole if the new data has class diversity
        let present = data.present_classes();
        if present.len() >= 2 {
            updated.learner = fit_learner(&model.config.learner, &data, seed);
            updated.degenerate = false;
        }
        return Ok(updated);
    }
    let increment = |configured: i64| -> usize {
        ((configured as f64 * INCREMENT_FRACTION).ceil() as usize).max(1)
    };
    match &mut updated.learner {
        FittedLearner::Forest(f) => {
            let n_new = increment(model.config.learner.int("n_trees"));
            f.grow(&data.x, &data.y, n_new);
        }
        FittedLearner::Gbm(g) => {
            let n_new = increment(model.config.learner.int("n_trees"));
            g.continue_fit(&data.x, &data.y, n_new);
        }
        FittedLearner::Sgd(s) => {
            let mut fit_rng = rng::derive(seed, "sgd-partial", updated.n_trained as u64);
            s.continue_fit(&data.x, &data.y, &mut fit_rng);
        }
        _ => unreachable!("incremental kinds are forest, gbm, sgd"),
    }
    Ok(updated)
}
