//! Three miniature AutoML optimizers over the pipeline space — random search
//! with stacked ensembles, sequential model-based optimization with greedy
//! ensemble selection, and steady-state evolution — plus ensembling, refit,
//! warm starts, and budget handling.
//!
//! Every search splits its training window temporally: the most recent 25%
//! is the holdout used for scoring candidates and combining members, never
//! for fitting them. Wall-clock budgets reserve their last fifth for
//! ensemble construction; evaluation-count budgets spend all evaluations on
//! search. The "asynchronous" evolution contract is an ordering-tolerance
//! property, satisfied here by a sequential loop.

use std::collections::BTreeSet;
use std::time::{Duration, Instant};

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::audit;
use crate::error::{Error, Result};
use crate::learners::{fit_pipeline, gbm::Gbm, linear::LogisticSgd, TrainedModel};
use crate::rng;
use crate::space::{
    crossover_config_rng, encode_config, mutate_config_rng, sample_config_rng, PipelineConfig,
    SearchSpace,
};
use crate::stream::{Batch, StreamSchema, TrainView};

/// Most recent fraction of the window held out for scoring and combining.
pub const HOLDOUT_FRAC: f64 = 0.25;
/// Fraction of a wall-clock budget reserved for ensemble construction.
const ENSEMBLE_RESERVE: f64 = 0.2;
/// Candidate models kept alive for ensembling.
const MODEL_POOL: usize = 20;
const STACK_TOP_K: usize = 5;
const GREEDY_SIZE: usize = 10;
const SMBO_INIT: usize = 5;
const SMBO_CANDIDATES: usize = 500;
const SMBO_XI: f64 = 0.01;
const EVO_POPULATION: usize = 20;
const EVO_CROSSOVER_PROB: f64 = 0.3;
const DRAW_ATTEMPTS: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchBudget {
    wall_clock: Option<Duration>,
    max_evaluations: Option<usize>,
}

impl SearchBudget {
    pub fn new(wall_clock_seconds: Option<f64>, max_evaluations: Option<usize>) -> Result<Self> {
        if wall_clock_seconds.is_none() && max_evaluations.is_none() {
            return Err(Error::InvalidBudget("at least one limit must be set".into()));
        }
        if let Some(s) = wall_clock_seconds {
            if !s.is_finite() || s <= 0.0 {
                return Err(Error::InvalidBudget(format!("seconds must be > 0, got {s}")));
            }
        }
        Ok(SearchBudget {
            wall_clock: wall_clock_seconds.map(Duration::from_secs_f64),
            max_evaluations,
        })
    }

    pub fn seconds(s: f64) -> Result<Self> {
        Self::new(Some(s), None)
    }

    pub fn evaluations(n: usize) -> Self {
        SearchBudget {
            wall_clock: None,
            max_evaluations: Some(n),
        }
    }

    pub fn wall_clock_seconds(&self) -> Option<f64> {
        self.wall_clock.map(|d| d.as_secs_f64())
    }

    pub fn max_evaluations(&self) -> Option<usize> {
        self.max_evaluations
    }

    pub fn describe(&self) -> String {
        match (self.wall_clock, self.max_evaluations) {
            (Some(w), Some(n)) => format!("{}s/{}evals", w.as_secs_f64(), n),
            (Some(w), None) => format!("{}s", w.as_secs_f64()),
            (None, Some(n)) => format!("{n}evals"),
            (None, None) => unreachable!(),
        }
    }
}

/// One completed candidate evaluation.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EvalRecord {
    pub config: PipelineConfig,
    /// Accuracy on the holdout split.
    pub holdout_score: f64,
    pub fit_seconds: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StackerKind {
    Linear,
    Gbm,
}

impl StackerKind {
    pub fn name(&self) -> &'static str {
        match self {
            StackerKind::Linear => "linear",
            StackerKind::Gbm => "gbm",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "linear" => Ok(StackerKind::Linear),
            "gbm" => Ok(StackerKind::Gbm),
            other => Err(Error::InvalidConfig(format!("unknown stacker {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Paradigm {
    RandomStack,
    Smbo,
    Evo,
}

impl Paradigm {
    pub fn name(&self) -> &'static str {
        match self {
            Paradigm::RandomStack => "random_stack",
            Paradigm::Smbo => "smbo",
            Paradigm::Evo => "evo",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "random_stack" | "random" => Ok(Paradigm::RandomStack),
            "smbo" => Ok(Paradigm::Smbo),
            "evo" => Ok(Paradigm::Evo),
            other => Err(Error::InvalidConfig(format!("unknown paradigm {other:?}"))),
        }
    }
}

#[derive(Debug, Clone)]
enum MetaModel {
    Linear(LogisticSgd),
    Gbm(Gbm),
}

impl MetaModel {
    fn fit(kind: StackerKind, x: &[Vec<f64>], y: &[usize], n_classes: usize, seed: u64) -> Self {
        match kind {
            StackerKind::Linear => {
                let mut fit_rng = rng::derive(seed, "stacker-linear", 0);
                MetaModel::Linear(LogisticSgd::fit(x, y, n_classes, 0.1, 1e-4, 60, &mut fit_rng))
            }
            StackerKind::Gbm => MetaModel::Gbm(Gbm::fit(x, y, n_classes, 60, 0.1, 2)),
        }
    }

    fn predict_proba(&self, x: &[f64]) -> Vec<f64> {
        match self {
            MetaModel::Linear(m) => m.predict_proba(x),
            MetaModel::Gbm(m) => m.predict_proba(x),
        }
    }
}

#[derive(Debug, Clone)]
enum Combiner {
    WeightedVote,
    Stacker { kind: StackerKind, meta: MetaModel },
}

/// How the final ensemble is assembled from evaluated candidates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EnsembleMethod {
    /// Top-k members, weights proportional to holdout accuracy.
    TopKVote { k: usize },
    /// Greedy selection with replacement minimizing holdout error.
    Greedy { size: usize },
    /// Meta-learner over member holdout probabilities.
    Stacker { kind: StackerKind },
}

#[derive(Debug, Clone)]
pub struct EnsembleMember {
    pub model: TrainedModel,
    pub weight: f64,
}

/// Weighted combination of trained pipelines, optionally through a stacker
/// meta-model.
#[derive(Debug, Clone)]
pub struct EnsembleModel {
    pub members: Vec<EnsembleMember>,
    combiner: Combiner,
    /// Set when a stacker was requested but fewer than two members existed.
    pub stacker_fallback: bool,
}

/// A trained candidate with its holdout score.
#[derive(Debug, Clone)]
pub struct ScoredModel {
    pub model: TrainedModel,
    pub holdout_score: f64,
}

impl EnsembleModel {
    pub fn n_classes(&self) -> usize {
        self.members[0].model.n_classes
    }

    pub fn member_hashes(&self) -> Vec<String> {
        self.members
            .iter()
            .map(|m| m.model.config.stable_hash())
            .collect()
    }

    /// Weighted-average member probabilities (vote) or stacker output.
    pub fn predict_rows(&self, rows: &[Vec<f64>]) -> (Vec<usize>, Vec<Vec<f64>>) {
        let n_classes = self.n_classes();
        let member_probs: Vec<Vec<Vec<f64>>> = self
            .members
            .iter()
            .map(|m| m.model.predict_rows(rows).1)
            .collect();
        match &self.combiner {
            Combiner::WeightedVote => {
                let mut preds = Vec::with_capacity(rows.len());
                let mut probs = Vec::with_capacity(rows.len());
                for i in 0..rows.len() {
                    let mut acc = vec![0.0; n_classes];
                    for (m, mp) in self.members.iter().zip(&member_probs) {
                        for (a, p) in acc.iter_mut().zip(&mp[i]) {
                            *a += m.weight * p;
                        }
                    }
                    let sum: f64 = acc.iter().sum();
                    if sum > 0.0 {
                        for a in acc.iter_mut() {
                            *a /= sum;
                        }
                    }
                    preds.push(argmax_lowest(&acc));
                    probs.push(acc);
                }
                (preds, probs)
            }
            Combiner::Stacker { meta, .. } => {
                let mut preds = Vec::with_capacity(rows.len());
                let mut probs = Vec::with_capacity(rows.len());
                for i in 0..rows.len() {
                    let features = stack_features(&member_probs, i);
                    let mut p = meta.predict_proba(&features);
                    let sum: f64 = p.iter().sum();
                    if sum > 0.0 {
                        for v in p.iter_mut() {
                            *v /= sum;
                        }
                    }
                    preds.push(argmax_lowest(&p));
                    probs.push(p);
                }
                (preds, probs)
            }
        }
    }

    pub fn predict_batch(&self, batch: &Batch) -> Result<(Vec<usize>, Vec<Vec<f64>>)> {
        let expected = self.members[0].model.n_features;
        for inst in &batch.instances {
            if inst.features.len() != expected {
                return Err(Error::DimensionMismatch {
                    expected,
                    found: inst.features.len(),
                });
            }
        }
        let rows: Vec<Vec<f64>> = batch.instances.iter().map(|i| i.features.clone()).collect();
        Ok(self.predict_rows(&rows))
    }

    /// Recompute the combiner on a new holdout: vote weights proportional to
    /// member holdout accuracy, stacker meta refitted on member outputs.
    pub fn recombine(&mut self, holdout: &TrainView, seed: u64) {
        let rows: Vec<Vec<f64>> = holdout
            .rows
            .iter()
            .map(|r| r.instance.features.clone())
            .collect();
        let labels: Vec<usize> = holdout.rows.iter().map(|r| r.instance.label).collect();
        match &mut self.combiner {
            Combiner::WeightedVote => {
                let mut weights = Vec::with_capacity(self.members.len());
                for m in &self.members {
                    let (preds, _) = m.model.predict_rows(&rows);
                    let acc = accuracy(&preds, &labels);
                    weights.push(acc);
                }
                let sum: f64 = weights.iter().sum();
                for (m, w) in self.members.iter_mut().zip(&weights) {
                    m.weight = if sum > 0.0 {
                        w / sum
                    } else {
                        1.0 / weights.len() as f64
                    };
                }
            }
            Combiner::Stacker { kind, meta } => {
                audit::record(audit::FitKind::Meta, holdout.row_ids());
                let member_probs: Vec<Vec<Vec<f64>>> = self
                    .members
                    .iter()
                    .map(|m| m.model.predict_rows(&rows).1)
                    .collect();
                let meta_x: Vec<Vec<f64>> = (0..rows.len())
                    .map(|i| stack_features(&member_probs, i))
                    .collect();
                let n_classes = self.members[0].model.n_classes;
                *meta = MetaModel::fit(*kind, &meta_x, &labels, n_classes, seed);
            }
        }
    }
}

fn stack_features(member_probs: &[Vec<Vec<f64>>], row: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(member_probs.len() * member_probs[0][row].len());
    for mp in member_probs {
        out.extend_from_slice(&mp[row]);
    }
    out
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

fn accuracy(preds: &[usize], labels: &[usize]) -> f64 {
    if preds.is_empty() {
        return 0.0;
    }
    preds
        .iter()
        .zip(labels)
        .filter(|(p, l)| p == l)
        .count() as f64
        / preds.len() as f64
}

/// Result of one search run: the deployed ensemble, the incumbent config,
/// and the full evaluation history.
#[derive(Debug, Clone)]
pub struct FittedAutoML {
    pub ensemble: EnsembleModel,
    pub incumbent: PipelineConfig,
    pub history: Vec<EvalRecord>,
    pub paradigm: Paradigm,
    /// Start offsets (seconds since search start) of every evaluation;
    /// budget compliance is auditable from these.
    pub eval_start_offsets: Vec<f64>,
}

impl FittedAutoML {
    /// Evaluation history as CSV (config hash, learner, score, seconds).
    pub fn history_csv(&self) -> String {
        let mut out = String::from("config_hash,learner,holdout_score,fit_seconds\n");
        for rec in &self.history {
            out.push_str(&format!(
                "{},{},{},{}\n",
                rec.config.stable_hash(),
                rec.config.learner.kind.name(),
                rec.holdout_score,
                rec.fit_seconds
            ));
        }
        out
    }

    /// Best configs seen, by holdout score descending (ties earliest),
    /// deduplicated — the warm-start payload.
    pub fn top_configs(&self, k: usize) -> Vec<PipelineConfig> {
        let mut order: Vec<usize> = (0..self.history.len()).collect();
        order.sort_by(|&a, &b| {
            self.history[b]
                .holdout_score
                .total_cmp(&self.history[a].holdout_score)
                .then(a.cmp(&b))
        });
        let mut seen = BTreeSet::new();
        let mut out = Vec::new();
        for i in order {
            let c = &self.history[i].config;
            if seen.insert(c.stable_hash()) {
                out.push(c.clone());
                if out.len() == k {
                    break;
                }
            }
        }
        out
    }
}

pub fn incumbent_of(history: &[EvalRecord]) -> PipelineConfig {
    let mut best = 0;
    for (i, rec) in history.iter().enumerate().skip(1) {
        if rec.holdout_score > history[best].holdout_score {
            best = i;
        }
    }
    history[best].config.clone()
}

struct Candidate {
    history_idx: usize,
    score: f64,
    model: TrainedModel,
    holdout_probs: Vec<Vec<f64>>,
}

struct SearchCtx<'a> {
    space: &'a SearchSpace,
    schema: &'a StreamSchema,
    train: TrainView,
    holdout: TrainView,
    holdout_rows: Vec<Vec<f64>>,
    holdout_labels: Vec<usize>,
    started: Instant,
    search_deadline: Option<Duration>,
    max_evaluations: Option<usize>,
    history: Vec<EvalRecord>,
    pool: Vec<Candidate>,
    seen: BTreeSet<String>,
    rng: ChaCha8Rng,
    seed: u64,
    eval_start_offsets: Vec<f64>,
}

impl<'a> SearchCtx<'a> {
    fn new(
        space: &'a SearchSpace,
        schema: &'a StreamSchema,
        data: &TrainView,
        budget: &SearchBudget,
        seed: u64,
    ) -> Result<Self> {
        space.validate()?;
        if data.is_empty() {
            return Err(Error::EmptyTrainingData);
        }
        if budget.max_evaluations == Some(0) {
            return Err(Error::BudgetBeforeFirstEval);
        }
        let (train, holdout) = data.split_holdout(HOLDOUT_FRAC);
        audit::enter_search();
        audit::record(audit::FitKind::HoldoutSplit, holdout.row_ids());
        let holdout_rows = holdout
            .rows
            .iter()
            .map(|r| r.instance.features.clone())
            .collect();
        let holdout_labels = holdout.rows.iter().map(|r| r.instance.label).collect();
        let search_deadline = budget
            .wall_clock
            .map(|w| w.mul_f64(1.0 - ENSEMBLE_RESERVE));
        Ok(SearchCtx {
            space,
            schema,
            train,
            holdout,
            holdout_rows,
            holdout_labels,
            started: Instant::now(),
            search_deadline,
            max_evaluations: budget.max_evaluations,
            history: Vec::new(),
            pool: Vec::new(),
            seen: BTreeSet::new(),
            rng: rng::derive(seed, "search", 0),
            seed,
            eval_start_offsets: Vec::new(),
        })
    }

    fn budget_allows_new_eval(&self) -> bool {
        if let Some(max) = self.max_evaluations {
            if self.history.len() >= max {
                return false;
            }
        }
        if let Some(deadline) = self.search_deadline {
            if self.started.elapsed() >= deadline {
                return false;
            }
        }
        true
    }

    /// Evaluate a config unless it was already evaluated. Returns whether an
    /// evaluation actually ran.
    fn evaluate(&mut self, config: PipelineConfig) -> Result<bool> {
        let hash = config.stable_hash();
        if !self.seen.insert(hash) {
            return Ok(false);
        }
        self.eval_start_offsets
            .push(self.started.elapsed().as_secs_f64());
        let fit_seed = rng::mix(self.seed, "eval", self.history.len() as u64);
        let t0 = Instant::now();
        let model = fit_pipeline(&config, &self.train, self.schema, fit_seed)?;
        let fit_seconds = t0.elapsed().as_secs_f64();
        let (preds, probs) = model.predict_rows(&self.holdout_rows);
        let score = accuracy(&preds, &self.holdout_labels);
        self.history.push(EvalRecord {
            config,
            holdout_score: score,
            fit_seconds,
        });
        self.pool.push(Candidate {
            history_idx: self.history.len() - 1,
            score,
            model,
            holdout_probs: probs,
        });
        if self.pool.len() > MODEL_POOL {
            // evict the worst (latest among ties) to keep memory bounded
            let worst = self
                .pool
                .iter()
                .enumerate()
                .min_by(|a, b| {
                    a.1.score
                        .total_cmp(&b.1.score)
                        .then(b.1.history_idx.cmp(&a.1.history_idx))
                })
                .map(|(i, _)| i)
                .unwrap();
            self.pool.remove(worst);
        }
        Ok(true)
    }

    /// Sample an unseen config; `None` once the space looks exhausted.
    fn draw_unseen(&mut self) -> Option<PipelineConfig> {
        for _ in 0..DRAW_ATTEMPTS {
            let c = sample_config_rng(self.space, &mut self.rng);
            if !self.seen.contains(&c.stable_hash()) {
                return Some(c);
            }
        }
        None
    }

    fn best_score(&self) -> f64 {
        self.history
            .iter()
            .map(|r| r.holdout_score)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    fn finish(self, paradigm: Paradigm, method: EnsembleMethod) -> Result<FittedAutoML> {
        if self.history.is_empty() {
            audit::exit_search();
            return Err(Error::BudgetBeforeFirstEval);
        }
        let mut pool = self.pool;
        pool.sort_by_key(|c| c.history_idx);
        let ensemble = assemble_ensemble(
            &pool,
            &self.holdout_labels,
            self.holdout.row_ids(),
            self.schema.n_classes,
            &method,
            self.seed,
        );
        let incumbent = incumbent_of(&self.history);
        audit::exit_search();
        Ok(FittedAutoML {
            ensemble,
            incumbent,
            history: self.history,
            paradigm,
            eval_start_offsets: self.eval_start_offsets,
        })
    }
}

/// Assemble the final ensemble from a candidate pool ordered by evaluation
/// index.
fn assemble_ensemble(
    pool: &[Candidate],
    labels: &[usize],
    holdout_ids: Vec<crate::audit::RowId>,
    n_classes: usize,
    method: &EnsembleMethod,
    seed: u64,
) -> EnsembleModel {
    match method {
        EnsembleMethod::TopKVote { k } => {
            let mut order: Vec<usize> = (0..pool.len()).collect();
            order.sort_by(|&a, &b| {
                pool[b]
                    .score
                    .total_cmp(&pool[a].score)
                    .then(pool[a].history_idx.cmp(&pool[b].history_idx))
            });
            order.truncate(*k);
            let total: f64 = order.iter().map(|&i| pool[i].score).sum();
            let members = order
                .iter()
                .map(|&i| EnsembleMember {
                    model: pool[i].model.clone(),
                    weight: if total > 0.0 {
                        pool[i].score / total
                    } else {
                        1.0 / order.len() as f64
                    },
                })
                .collect();
            EnsembleModel {
                members,
                combiner: Combiner::WeightedVote,
                stacker_fallback: false,
            }
        }
        EnsembleMethod::Greedy { size } => {
            let n = labels.len();
            let mut sum = vec![vec![0.0; n_classes]; n];
            let mut bag: Vec<usize> = Vec::new();
            for _ in 0..*size {
                let mut best: Option<(f64, usize)> = None;
                for (ci, cand) in pool.iter().enumerate() {
                    let mut errors = 0usize;
                    for (i, acc) in sum.iter().enumerate() {
                        let mut tmp = acc.clone();
                        for (t, p) in tmp.iter_mut().zip(&cand.holdout_probs[i]) {
                            *t += p;
                        }
                        if argmax_lowest(&tmp) != labels[i] {
                            errors += 1;
                        }
                    }
                    let err = errors as f64 / n as f64;
                    if best.is_none_or(|(b, _)| err < b) {
                        best = Some((err, ci));
                    }
                }
                let (_, chosen) = best.expect("pool is non-empty");
                for (acc, probs) in sum.iter_mut().zip(&pool[chosen].holdout_probs) {
                    for (t, p) in acc.iter_mut().zip(probs) {
                        *t += p;
                    }
                }
                bag.push(chosen);
            }
            let mut counts: Vec<usize> = vec![0; pool.len()];
            for &c in &bag {
                counts[c] += 1;
            }
            let members = counts
                .iter()
                .enumerate()
                .filter(|(_, &c)| c > 0)
                .map(|(i, &c)| EnsembleMember {
                    model: pool[i].model.clone(),
                    weight: c as f64 / bag.len() as f64,
                })
                .collect();
            EnsembleModel {
                members,
                combiner: Combiner::WeightedVote,
                stacker_fallback: false,
            }
        }
        EnsembleMethod::Stacker { kind } => {
            let mut order: Vec<usize> = (0..pool.len()).collect();
            order.sort_by(|&a, &b| {
                pool[b]
                    .score
                    .total_cmp(&pool[a].score)
                    .then(pool[a].history_idx.cmp(&pool[b].history_idx))
            });
            order.truncate(STACK_TOP_K);
            if order.len() < 2 {
                // fall back to the single best model, flagged
                let members = vec![EnsembleMember {
                    model: pool[order[0]].model.clone(),
                    weight: 1.0,
                }];
                return EnsembleModel {
                    members,
                    combiner: Combiner::WeightedVote,
                    stacker_fallback: true,
                };
            }
            audit::record(audit::FitKind::Meta, holdout_ids);
            let member_probs: Vec<&Vec<Vec<f64>>> =
                order.iter().map(|&i| &pool[i].holdout_probs).collect();
            let n = labels.len();
            let meta_x: Vec<Vec<f64>> = (0..n)
                .map(|i| {
                    let mut f = Vec::with_capacity(order.len() * n_classes);
                    for mp in &member_probs {
                        f.extend_from_slice(&mp[i]);
                    }
                    f
                })
                .collect();
            let meta_seed = rng::mix(seed, "stacker", 0);
            let meta = MetaModel::fit(*kind, &meta_x, labels, n_classes, meta_seed);
            let members = order
                .iter()
                .map(|&i| EnsembleMember {
                    model: pool[i].model.clone(),
                    weight: 1.0 / order.len() as f64,
                })
                .collect();
            EnsembleModel {
                members,
                combiner: Combiner::Stacker { kind: *kind, meta },
                stacker_fallback: false,
            }
        }
    }
}

fn filtered_warm(space: &SearchSpace, warm: &[PipelineConfig]) -> Vec<PipelineConfig> {
    let mut seen = BTreeSet::new();
    warm.iter()
        .filter(|c| c.validate_in(space).is_ok())
        .filter(|c| seen.insert(c.stable_hash()))
        .cloned()
        .collect()
}

/// Random search: warm configs first, then uniform samples until the budget
/// is exhausted; the top five models become a stacked ensemble.
pub fn random_search_stack(
    space: &SearchSpace,
    schema: &StreamSchema,
    data: &TrainView,
    budget: &SearchBudget,
    stacker: StackerKind,
    seed: u64,
    warm: &[PipelineConfig],
) -> Result<FittedAutoML> {
    let mut ctx = SearchCtx::new(space, schema, data, budget, seed)?;
    for config in filtered_warm(space, warm) {
        if !ctx.budget_allows_new_eval() {
            break;
        }
        ctx.evaluate(config)?;
    }
    while ctx.budget_allows_new_eval() {
        match ctx.draw_unseen() {
            Some(config) => {
                ctx.evaluate(config)?;
            }
            None => break, // space exhausted
        }
    }
    ctx.finish(Paradigm::RandomStack, EnsembleMethod::Stacker { kind: stacker })
}

/// Standard normal CDF via the Abramowitz-Stegun erf approximation.
pub(crate) fn norm_cdf(z: f64) -> f64 {
    let x = z / std::f64::consts::SQRT_2;
    let sign = if x < 0.0 { -1.0 } else { 1.0 };
    let x = x.abs();
    let t = 1.0 / (1.0 + 0.3275911 * x);
    let poly = t
        * (0.254829592 + t * (-0.284496736 + t * (1.421413741 + t * (-1.453152027 + t * 1.061405429))));
    let erf = 1.0 - poly * (-x * x).exp();
    0.5 * (1.0 + sign * erf)
}

fn norm_pdf(z: f64) -> f64 {
    (-0.5 * z * z).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

/// Expected improvement over the incumbent for a maximization problem.
fn expected_improvement(mean: f64, var: f64, best: f64, xi: f64) -> f64 {
    let sigma = var.sqrt();
    let gain = mean - best - xi;
    if sigma < 1e-12 {
        return gain.max(0.0);
    }
    let z = gain / sigma;
    gain * norm_cdf(z) + sigma * norm_pdf(z)
}

/// SMBO: random (or warm) initialization, then a random-forest surrogate
/// proposes the expected-improvement maximizer among 500 sampled candidates
/// each round; the final ensemble comes from greedy selection.
pub fn smbo_search(
    space: &SearchSpace,
    schema: &StreamSchema,
    data: &TrainView,
    budget: &SearchBudget,
    seed: u64,
    warm: &[PipelineConfig],
) -> Result<FittedAutoML> {
    let mut ctx = SearchCtx::new(space, schema, data, budget, seed)?;
    let warm = filtered_warm(space, warm);
    if warm.is_empty() {
        for _ in 0..SMBO_INIT {
            if !ctx.budget_allows_new_eval() {
                break;
            }
            match ctx.draw_unseen() {
                Some(c) => {
                    ctx.evaluate(c)?;
                }
                None => break,
            }
        }
    } else {
        for config in warm {
            if !ctx.budget_allows_new_eval() {
                break;
            }
            ctx.evaluate(config)?;
        }
    }
    let mut surrogate_round = 0u64;
    while ctx.budget_allows_new_eval() {
        let next = if ctx.history.len() < 2 {
            ctx.draw_unseen()
        } else {
            let x: Vec<Vec<f64>> = ctx
                .history
                .iter()
                .map(|r| encode_config(&r.config, space))
                .collect();
            let y: Vec<f64> = ctx.history.iter().map(|r| r.holdout_score).collect();
            let surrogate = crate::learners::forest::RegForest::fit(
                &x,
                &y,
                25,
                8,
                rng::mix(seed, "surrogate", surrogate_round),
            );
            surrogate_round += 1;
            let best = ctx.best_score();
            let mut top: Option<(f64, PipelineConfig)> = None;
            for _ in 0..SMBO_CANDIDATES {
                let c = sample_config_rng(ctx.space, &mut ctx.rng);
                if ctx.seen.contains(&c.stable_hash()) {
                    continue;
                }
                let (mean, var) = surrogate.predict_mean_var(&encode_config(&c, space));
                let ei = expected_improvement(mean, var, best, SMBO_XI);
                if top.as_ref().is_none_or(|(t, _)| ei > *t) {
                    top = Some((ei, c));
                }
            }
            top.map(|(_, c)| c).or_else(|| ctx.draw_unseen())
        };
        match next {
            Some(config) => {
                ctx.evaluate(config)?;
            }
            None => break,
        }
    }
    ctx.finish(Paradigm::Smbo, EnsembleMethod::Greedy { size: GREEDY_SIZE })
}

/// Steady-state evolution: binary tournaments pick parents, offspring are
/// crossover (p=0.3) plus mutation, and each evaluated offspring replaces
/// the worst population member if better. Correctness does not depend on
/// evaluation completion order; this loop serializes them.
pub fn evo_search(
    space: &SearchSpace,
    schema: &StreamSchema,
    data: &TrainView,
    budget: &SearchBudget,
    seed: u64,
    warm: &[PipelineConfig],
) -> Result<FittedAutoML> {
    let mut ctx = SearchCtx::new(space, schema, data, budget, seed)?;
    // population of (history index, score)
    let mut population: Vec<(usize, f64)> = Vec::new();
    for config in filtered_warm(space, warm) {
        if population.len() >= EVO_POPULATION || !ctx.budget_allows_new_eval() {
            break;
        }
        if ctx.evaluate(config)? {
            let idx = ctx.history.len() - 1;
            population.push((idx, ctx.history[idx].holdout_score));
        }
    }
    while population.len() < EVO_POPULATION && ctx.budget_allows_new_eval() {
        match ctx.draw_unseen() {
            Some(c) => {
                if ctx.evaluate(c)? {
                    let idx = ctx.history.len() - 1;
                    population.push((idx, ctx.history[idx].holdout_score));
                }
            }
            None => break, // tiny space: population stays partial
        }
    }
    while ctx.budget_allows_new_eval() && !population.is_empty() {
        let offspring = {
            let tournament = |ctx: &mut SearchCtx, pop: &[(usize, f64)]| -> usize {
                let a = ctx.rng.gen_range(0..pop.len());
                let b = ctx.rng.gen_range(0..pop.len());
                if pop[b].1 > pop[a].1 {
                    b
                } else {
                    a
                }
            };
            let p1 = tournament(&mut ctx, &population);
            let parent1 = ctx.history[population[p1].0].config.clone();
            let base = if ctx.rng.gen::<f64>() < EVO_CROSSOVER_PROB {
                let p2 = tournament(&mut ctx, &population);
                let parent2 = ctx.history[population[p2].0].config.clone();
                crossover_config_rng(&parent1, &parent2, &mut ctx.rng)
            } else {
                parent1
            };
            let mut child = mutate_config_rng(&base, ctx.space, &mut ctx.rng);
            let mut attempts = 0;
            while ctx.seen.contains(&child.stable_hash()) && attempts < 50 {
                child = mutate_config_rng(&child, ctx.space, &mut ctx.rng);
                attempts += 1;
            }
            if ctx.seen.contains(&child.stable_hash()) {
                ctx.draw_unseen()
            } else {
                Some(child)
            }
        };
        match offspring {
            Some(config) => {
                if ctx.evaluate(config)? {
                    let idx = ctx.history.len() - 1;
                    let score = ctx.history[idx].holdout_score;
                    let worst = population
                        .iter()
                        .enumerate()
                        .min_by(|a, b| a.1 .1.total_cmp(&b.1 .1).then(a.0.cmp(&b.0)))
                        .map(|(i, _)| i)
                        .unwrap();
                    if score > population[worst].1 {
                        population[worst] = (idx, score);
                    }
                }
            }
            None => break, // space exhausted
        }
    }
    ctx.finish(Paradigm::Evo, EnsembleMethod::TopKVote { k: STACK_TOP_K })
}

/// Dispatch by paradigm with that paradigm's ensembling method.
#[allow(clippy::too_many_arguments)]
pub fn run_search(
    paradigm: Paradigm,
    space: &SearchSpace,
    schema: &StreamSchema,
    data: &TrainView,
    budget: &SearchBudget,
    stacker: StackerKind,
    seed: u64,
    warm: &[PipelineConfig],
) -> Result<FittedAutoML> {
    match paradigm {
        Paradigm::RandomStack => {
            random_search_stack(space, schema, data, budget, stacker, seed, warm)
        }
        Paradigm::Smbo => smbo_search(space, schema, data, budget, seed, warm),
        Paradigm::Evo => evo_search(space, schema, data, budget, seed, warm),
    }
}

/// Build an ensemble from already-scored models, scoring combinations on
/// the given holdout view.
pub fn build_ensemble(
    candidates: Vec<ScoredModel>,
    holdout: &TrainView,
    method: &EnsembleMethod,
    seed: u64,
) -> Result<EnsembleModel> {
    if candidates.is_empty() {
        return Err(Error::EmptyTrainingData);
    }
    let rows: Vec<Vec<f64>> = holdout
        .rows
        .iter()
        .map(|r| r.instance.features.clone())
        .collect();
    let labels: Vec<usize> = holdout.rows.iter().map(|r| r.instance.label).collect();
    let n_classes = candidates[0].model.n_classes;
    let pool: Vec<Candidate> = candidates
        .into_iter()
        .enumerate()
        .map(|(i, s)| {
            let probs = s.model.predict_rows(&rows).1;
            Candidate {
                history_idx: i,
                score: s.holdout_score,
                model: s.model,
                holdout_probs: probs,
            }
        })
        .collect();
    Ok(assemble_ensemble(
        &pool,
        &labels,
        holdout.row_ids(),
        n_classes,
        method,
        seed,
    ))
}

/// Refit every member pipeline from scratch on new data and recompute the
/// combiner on the new holdout. Configs (and the incumbent) are unchanged.
pub fn refit(fitted: &FittedAutoML, data: &TrainView, schema: &StreamSchema, seed: u64) -> Result<FittedAutoML> {
    if data.is_empty() {
        return Err(Error::EmptyTrainingData);
    }
    audit::enter_search();
    let (train, holdout) = data.split_holdout(HOLDOUT_FRAC);
    audit::record(audit::FitKind::HoldoutSplit, holdout.row_ids());
    let mut updated = fitted.clone();
    for (i, member) in updated.ensemble.members.iter_mut().enumerate() {
        let fit_seed = rng::mix(seed, "refit", i as u64);
        member.model = fit_pipeline(&member.model.config, &train, schema, fit_seed)?;
    }
    updated
        .ensemble
        .recombine(&holdout, rng::mix(seed, "refit-combine", 0));
    audit::exit_search();
    Ok(updated)
}
