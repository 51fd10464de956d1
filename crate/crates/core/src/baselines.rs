//! Online-learning reference methods: Oza bagging with Poisson(1) updates,
//! BLAST-style heterogeneous selection, and gradient boosting refit on
//! detected drift. All respect the same test-then-train discipline as the
//! AutoML strategies and emit the same run-log schema.

use std::time::Instant;

use rand_distr::{Distribution, Poisson};

use crate::detect::{EddmConfig, EddmState, Signal};
use crate::error::{Error, Result};
use crate::eval::{RunLog, RunMeta, RunRow};
use crate::learners::{
    fit_pipeline, linear::LogisticSgd, partial_fit, LearnerKind, LearnerSpec, TrainedModel,
    ALL_LEARNERS,
};
use crate::rng;
use crate::search::norm_cdf;
use crate::space::PipelineConfig;
use crate::stream::{Batch, StreamSchema, TrainView};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BaselineKind {
    OzaBagging,
    Blast,
    GbmDetect,
}

impl BaselineKind {
    pub fn code(&self) -> &'static str {
        match self {
            BaselineKind::OzaBagging => "OZA",
            BaselineKind::Blast => "BLAST",
            BaselineKind::GbmDetect => "GBM",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "OZA" | "oza" => Ok(BaselineKind::OzaBagging),
            "BLAST" | "blast" => Ok(BaselineKind::Blast),
            "GBM" | "gbm" => Ok(BaselineKind::GbmDetect),
            other => Err(Error::InvalidConfig(format!("unknown baseline {other:?}"))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct BaselineConfig {
    pub seed: u64,
    pub detector: EddmConfig,
    pub preset_drifts: Option<Vec<usize>>,
    pub run_id: String,
    pub stream_description: String,
}

#[derive(Debug, Clone)]
struct GaussStats {
    count: f64,
    mean: f64,
    m2: f64,
}

impl GaussStats {
    fn new() -> Self {
        GaussStats { count: 0.0, mean: 0.0, m2: 0.0 }
    }

    fn push(&mut self, v: f64) {
        self.count += 1.0;
        let delta = v - self.mean;
        self.mean += delta / self.count;
        self.m2 += delta * (v - self.mean);
    }

    fn std(&self) -> f64 {
        if self.count < 2.0 {
            0.0
        } else {
            (self.m2 / self.count).sqrt()
        }
    }
}

#[derive(Debug, Clone)]
struct LeafStats {
    class_counts: Vec<f64>,
    feats: Vec<Vec<GaussStats>>, // [class][feature]
    n_since_attempt: usize,
}

impl LeafStats {
    fn new(n_classes: usize, n_features: usize, prior: Vec<f64>) -> Self {
        LeafStats {
            class_counts: prior,
            feats: (0..n_classes)
                .map(|_| (0..n_features).map(|_| GaussStats::new()).collect())
                .collect(),
            n_since_attempt: 0,
        }
    }
}

#[derive(Debug, Clone)]
enum IncNode {
    Leaf { stats: LeafStats, depth: usize },
    Split { feature: usize, threshold: f64, left: Box<IncNode>, right: Box<IncNode> },
}

/// Shallow incremental tree with per-leaf Gaussian class statistics. A leaf
/// splits once enough instances accumulate and one feature separates the
/// two majority classes well; children inherit the parent's class counts
/// apportioned by Gaussian mass so predictions stay calibrated.
#[derive(Debug, Clone)]
pub struct IncrementalTree {
    root: IncNode,
    n_classes: usize,
    n_features: usize,
    max_depth: usize,
    grace: usize,
}

const INC_TREE_DEPTH: usize = 3;
const INC_TREE_GRACE: usize = 200;
const INC_TREE_MIN_SCORE: f64 = 0.3;

impl IncrementalTree {
    pub fn new(n_classes: usize, n_features: usize) -> Self {
        IncrementalTree {
            root: IncNode::Leaf {
                stats: LeafStats::new(n_classes, n_features, vec![0.0; n_classes]),
                depth: 0,
            },
            n_classes,
            n_features,
            max_depth: INC_TREE_DEPTH,
            grace: INC_TREE_GRACE,
        }
    }

    pub fn update(&mut self, x: &[f64], y: usize) {
        let n_classes = self.n_classes;
        let n_features = self.n_features;
        let max_depth = self.max_depth;
        let grace = self.grace;
        let mut node = &mut self.root;
        loop {
            match node {
                IncNode::Split { feature, threshold, left, right } => {
                    node = if x[*feature] <= *threshold { left } else { right };
                }
                IncNode::Leaf { stats, depth } => {
                    stats.class_counts[y] += 1.0;
                    for (j, &v) in x.iter().enumerate() {
                        stats.feats[y][j].push(v);
                    }
                    stats.n_since_attempt += 1;
                    if stats.n_since_attempt >= grace && *depth < max_depth {
                        if let Some((feature, threshold)) = best_split(stats, n_classes) {
                            let (lc, rc) = apportion(stats, feature, threshold, n_classes);
                            let depth = *depth;
                            *node = IncNode::Split {
                                feature,
                                threshold,
                                left: Box::new(IncNode::Leaf {
                                    stats: LeafStats::new(n_classes, n_features, lc),
                                    depth: depth + 1,
                                }),
                                right: Box::new(IncNode::Leaf {
                                    stats: LeafStats::new(n_classes, n_features, rc),
                                    depth: depth + 1,
                                }),
                            };
                        } else {
                            stats.n_since_attempt = 0;
                        }
                    }
                    return;
                }
            }
        }
    }

    pub fn predict_proba(&self, x: &[f64]) -> Vec<f64> {
        let mut node = &self.root;
        loop {
            match node {
                IncNode::Split { feature, threshold, left, right } => {
                    node = if x[*feature] <= *threshold { left } else { right };
                }
                IncNode::Leaf { stats, .. } => {
                    let total: f64 = stats.class_counts.iter().sum();
                    if total <= 0.0 {
                        return vec![1.0 / self.n_classes as f64; self.n_classes];
                    }
                    return stats.class_counts.iter().map(|c| c / total).collect();
                }
            }
        }
    }
}

/// Fisher-style separation score between the two majority classes.
fn best_split(stats: &LeafStats, n_classes: usize) -> Option<(usize, f64)> {
    let mut order: Vec<usize> = (0..n_classes).collect();
    order.sort_by(|&a, &b| stats.class_counts[b].total_cmp(&stats.class_counts[a]));
    let (a, b) = (order[0], order[1]);
    if stats.class_counts[b] < 10.0 {
        return None;
    }
    let mut best: Option<(f64, usize, f64)> = None;
    for j in 0..stats.feats[a].len() {
        let (sa, sb) = (&stats.feats[a][j], &stats.feats[b][j]);
        let spread = sa.std() + sb.std();
        if spread <= 1e-12 {
            continue;
        }
        let score = (sa.mean - sb.mean).abs() / spread;
        if best.is_none_or(|(s, _, _)| score > s) {
            best = Some((score, j, 0.5 * (sa.mean + sb.mean)));
        }
    }
    match best {
        Some((score, j, thr)) if score >= INC_TREE_MIN_SCORE => Some((j, thr)),
        _ => None,
    }
}

/// Split the leaf's class counts between children by Gaussian mass.
fn apportion(
    stats: &LeafStats,
    feature: usize,
    threshold: f64,
    n_classes: usize,
) -> (Vec<f64>, Vec<f64>) {
    let mut left = vec![0.0; n_classes];
    let mut right = vec![0.0; n_classes];
    for c in 0..n_classes {
        let g = &stats.feats[c][feature];
        let p_left = if g.count < 2.0 || g.std() <= 1e-12 {
            if g.mean <= threshold { 1.0 } else { 0.0 }
        } else {
            norm_cdf((threshold - g.mean) / g.std())
        };
        left[c] = stats.class_counts[c] * p_left;
        right[c] = stats.class_counts[c] * (1.0 - p_left);
    }
    (left, right)
}

#[derive(Debug, Clone)]
enum OzaMember {
    Tree(IncrementalTree),
    Sgd(LogisticSgd),
}

impl OzaMember {
    fn update(&mut self, x: &[f64], y: usize, rng: &mut rand_chacha::ChaCha8Rng) {
        match self {
            OzaMember::Tree(t) => t.update(x, y),
            OzaMember::Sgd(s) => s.continue_fit(&[x.to_vec()], &[y], rng),
        }
    }

    fn predict(&self, x: &[f64]) -> usize {
        let p = match self {
            OzaMember::Tree(t) => t.predict_proba(x),
            OzaMember::Sgd(s) => s.predict_proba(x),
        };
        let mut best = 0;
        for (i, v) in p.iter().enumerate().skip(1) {
            if *v > p[best] {
                best = i;
            }
        }
        best
    }
}

/// Online bagging: each arriving instance trains each member k times with
/// k ~ Poisson(1), seeded by (run seed, member, instance index) so update
/// counts are independent of wall-clock or processing order.
#[derive(Debug, Clone)]
pub struct OzaEnsemble {
    members: Vec<OzaMember>,
    seed: u64,
    n_classes: usize,
}

pub const OZA_MEMBERS: usize = 10;

impl OzaEnsemble {
    pub fn new(schema: &StreamSchema, seed: u64) -> Self {
        let members = (0..OZA_MEMBERS)
            .map(|i| {
                if i % 2 == 0 {
                    OzaMember::Tree(IncrementalTree::new(schema.n_classes, schema.n_features))
                } else {
                    OzaMember::Sgd(LogisticSgd::new_zeroed(
                        schema.n_classes,
                        schema.n_features,
                        0.05,
                        1e-4,
                        1,
                    ))
                }
            })
            .collect();
        OzaEnsemble {
            members,
            seed,
            n_classes: schema.n_classes,
        }
    }

    /// Number of Poisson(1) training repetitions for (member, instance).
    pub fn poisson_k(&self, member: usize, instance_index: usize) -> usize {
        let mut r = rng::derive(
            self.seed,
            "oza-poisson",
            ((member as u64) << 40) | instance_index as u64,
        );
        let poisson = Poisson::new(1.0).unwrap();
        poisson.sample(&mut r) as usize
    }

    /// Majority vote over the members (ties to the lowest class index).
    pub fn predict(&self, x: &[f64]) -> usize {
        let mut votes = vec![0usize; self.n_classes];
        for m in &self.members {
            votes[m.predict(x)] += 1;
        }
        let mut best = 0;
        for (i, v) in votes.iter().enumerate().skip(1) {
            if *v > votes[best] {
                best = i;
            }
        }
        best
    }

    /// Test-then-train on one batch: predictions first, then Poisson-
    /// weighted member updates. `base_index` is the stream position of the
    /// batch's first instance.
    pub fn step(&mut self, batch: &Batch, base_index: usize) -> Vec<usize> {
        let preds: Vec<usize> = batch
            .instances
            .iter()
            .map(|inst| self.predict(&inst.features))
            .collect();
        self.train(batch, base_index);
        preds
    }

    fn train(&mut self, batch: &Batch, base_index: usize) {
        for (offset, inst) in batch.instances.iter().enumerate() {
            let idx = base_index + offset;
            for m in 0..self.members.len() {
                let k = self.poisson_k(m, idx);
                if k == 0 {
                    continue;
                }
                let mut update_rng = rng::derive(
                    self.seed,
                    "oza-update",
                    ((m as u64) << 40) | idx as u64,
                );
                for _ in 0..k {
                    self.members[m].update(&inst.features, inst.label, &mut update_rng);
                }
            }
        }
    }
}

/// Heterogeneous pool with per-batch selection: predictions come from the
/// member that scored best on the previous batch.
#[derive(Debug)]
pub struct BlastPool {
    members: Vec<TrainedModel>,
    prev_accuracy: Vec<f64>,
    pub active: usize,
    schema: StreamSchema,
    seed: u64,
    steps: u64,
}

impl BlastPool {
    /// One member per learner kind with default hyperparameters, pretrained
    /// on the given batch; initial accuracies are measured on that batch.
    pub fn pretrain(batch: &Batch, schema: &StreamSchema, seed: u64) -> Result<Self> {
        let view = TrainView::from_batch(batch);
        let mut members = Vec::new();
        for (i, kind) in ALL_LEARNERS.iter().enumerate() {
            let config = PipelineConfig::assemble(
                LearnerSpec::default_for(*kind),
                schema.has_categorical(),
                false,
                0.0,
            );
            members.push(fit_pipeline(
                &config,
                &view,
                schema,
                rng::mix(seed, "blast-init", i as u64),
            )?);
        }
        let prev_accuracy: Vec<f64> = members
            .iter()
            .map(|m| batch_accuracy(m, batch))
            .collect::<Result<_>>()?;
        let active = argmax_lowest_index(&prev_accuracy);
        Ok(BlastPool {
            members,
            prev_accuracy,
            active,
            schema: schema.clone(),
            seed,
            steps: 0,
        })
    }

    /// Active member for the next batch: argmax of previous-batch accuracy,
    /// ties to the lowest member index.
    pub fn select_active(&mut self) -> usize {
        self.active = argmax_lowest_index(&self.prev_accuracy);
        self.active
    }

    /// Test-then-train: the active member answers, every member is then
    /// scored on this batch (before updating) and updated — incrementally
    /// where supported, otherwise refitted on this one-batch window.
    pub fn step(&mut self, batch: &Batch) -> Result<Vec<usize>> {
        self.select_active();
        let (preds, _) = crate::learners::predict_batch(&self.members[self.active], batch)?;
        for (i, member) in self.members.iter_mut().enumerate() {
            self.prev_accuracy[i] = batch_accuracy(member, batch)?;
        }
        let view = TrainView::from_batch(batch);
        self.steps += 1;
        for (i, member) in self.members.iter_mut().enumerate() {
            let seed = rng::mix(self.seed, "blast-update", self.steps * 64 + i as u64);
            *member = if member.kind().is_incremental() {
                partial_fit(member, &view, seed)?
            } else {
                fit_pipeline(&member.config, &view, &self.schema, seed)?
            };
        }
        Ok(preds)
    }
}

fn batch_accuracy(model: &TrainedModel, batch: &Batch) -> Result<f64> {
    let (preds, _) = crate::learners::predict_batch(model, batch)?;
    Ok(preds
        .iter()
        .zip(&batch.instances)
        .filter(|(p, inst)| **p == inst.label)
        .count() as f64
        / batch.len() as f64)
}

fn argmax_lowest_index(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate().skip(1) {
        if *v > values[best] {
            best = i;
        }
    }
    best
}

/// Gradient boosting with default hyperparameters, refitted from scratch on
/// the current one-batch window whenever the detector fires.
#[derive(Debug)]
pub struct GbmBaseline {
    model: TrainedModel,
    pub detector: EddmState,
    schema: StreamSchema,
    seed: u64,
    pub refit_count: usize,
}

impl GbmBaseline {
    pub fn pretrain(batch: &Batch, schema: &StreamSchema, detector: EddmConfig, seed: u64) -> Result<Self> {
        let config = PipelineConfig::assemble(
            LearnerSpec::default_for(LearnerKind::GradientBoostedTrees),
            schema.has_categorical(),
            false,
            0.0,
        );
        let model = fit_pipeline(
            &config,
            &TrainView::from_batch(batch),
            schema,
            rng::mix(seed, "gbm-init", 0),
        )?;
        Ok(GbmBaseline {
            model,
            detector: EddmState::new(detector),
            schema: schema.clone(),
            seed,
            refit_count: 0,
        })
    }

    /// Test, feed the detector (or a forced flag), refit on drift. Returns
    /// (predictions, drift flag, refit happened).
    pub fn step(
        &mut self,
        batch: &Batch,
        base_index: usize,
        forced_drift: Option<bool>,
    ) -> Result<(Vec<usize>, bool, bool)> {
        let (preds, _) = crate::learners::predict_batch(&self.model, batch)?;
        let drift = match forced_drift {
            Some(flag) => flag,
            None => {
                let mut fired = false;
                for (offset, inst) in batch.instances.iter().enumerate() {
                    let correct = preds[offset] == inst.label;
                    if self.detector.update(correct, base_index + offset)? == Signal::Drift {
                        fired = true;
                    }
                }
                fired
            }
        };
        let mut refitted = false;
        if drift {
            self.refit_count += 1;
            self.model = fit_pipeline(
                &self.model.config,
                &TrainView::from_batch(batch),
                &self.schema,
                rng::mix(self.seed, "gbm-refit", self.refit_count as u64),
            )?;
            refitted = true;
        }
        Ok((preds, drift, refitted))
    }
}

/// Run a baseline over a batch stream, emitting the standard run-log schema
/// (strategy column carries the baseline code, paradigm is "baseline").
pub fn run_baseline(
    batches: &[Batch],
    schema: &StreamSchema,
    kind: BaselineKind,
    cfg: &BaselineConfig,
) -> Result<RunLog> {
    if batches.len() < 2 {
        return Err(Error::InvalidConfig(
            "need at least 2 batches (pretrain batch plus one test batch)".into(),
        ));
    }
    schema.validate()?;
    enum Runner {
        Oza(Box<OzaEnsemble>),
        Blast(Box<BlastPool>),
        Gbm(Box<GbmBaseline>),
    }
    let t0 = Instant::now();
    let mut runner = match kind {
        BaselineKind::OzaBagging => {
            let mut e = OzaEnsemble::new(schema, cfg.seed);
            e.train(&batches[0], 0);
            Runner::Oza(Box::new(e))
        }
        BaselineKind::Blast => {
            Runner::Blast(Box::new(BlastPool::pretrain(&batches[0], schema, cfg.seed)?))
        }
        BaselineKind::GbmDetect => Runner::Gbm(Box::new(GbmBaseline::pretrain(
            &batches[0],
            schema,
            cfg.detector,
            cfg.seed,
        )?)),
    };
    let pretrain_seconds = t0.elapsed().as_secs_f64();

    let mut rows = Vec::with_capacity(batches.len() - 1);
    let mut base_index = batches[0].len();
    let mut drift_total = 0;
    let mut retrain_total = 0;
    for (i, batch) in batches[1..].iter().enumerate() {
        let t_predict = Instant::now();
        let (preds, drift, retrained, fit_seconds) = match &mut runner {
            Runner::Oza(e) => (e.step(batch, base_index), false, true, 0.0),
            Runner::Blast(p) => (p.step(batch)?, false, true, 0.0),
            Runner::Gbm(g) => {
                let forced = cfg
                    .preset_drifts
                    .as_ref()
                    .map(|preset| preset.contains(&batch.index));
                let t_fit = Instant::now();
                let (preds, drift, refitted) = g.step(batch, base_index, forced)?;
                (preds, drift, refitted, t_fit.elapsed().as_secs_f64())
            }
        };
        let predict_seconds = t_predict.elapsed().as_secs_f64();
        let accuracy = preds
            .iter()
            .zip(&batch.instances)
            .filter(|(p, inst)| **p == inst.label)
            .count() as f64
            / batch.len() as f64;
        drift_total += usize::from(drift);
        retrain_total += usize::from(retrained);
        rows.push(RunRow {
            run_id: cfg.run_id.clone(),
            strategy: kind.code().to_string(),
            paradigm: "baseline".to_string(),
            seed: cfg.seed,
            batch_index: batch.index,
            accuracy,
            drift_detected: drift,
            retrained,
            pipeline_changed: false,
            fit_seconds: if i == 0 { fit_seconds + pretrain_seconds } else { fit_seconds },
            predict_seconds,
        });
        base_index += batch.len();
    }
    Ok(RunLog {
        rows,
        meta: RunMeta {
            run_id: cfg.run_id.clone(),
            strategy: kind.code().to_string(),
            paradigm: "baseline".to_string(),
            seed: cfg.seed,
            stream: cfg.stream_description.clone(),
            budget: "-".to_string(),
            software_version: env!("CARGO_PKG_VERSION").to_string(),
            retrain_count: retrain_total,
            drift_count: drift_total,
            pipeline_changes: 0,
        },
    })
}
