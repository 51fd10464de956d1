//! The six adaptation strategies as a policy layer over the batch loop:
//! drift detector, CASH optimizer, sliding window, and deployed ensemble.
//!
//! Batch 0 trains the initial ensemble (over the incremental-only space for
//! detect-and-increment). Every later batch is first tested with the
//! deployed model, its per-instance correctness feeds the detector, the
//! batch joins the sliding window, and then the strategy acts: nothing
//! (train once), incremental member updates, member refits, a warm-started
//! re-search, a from-scratch re-search, or an unconditional re-search every
//! batch. Retraining is synchronous: the deployed model answers batch b
//! before any retraining triggered by b.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::audit;
use crate::detect::{EddmConfig, EddmState, Signal};
use crate::error::{Error, Result};
use crate::eval::{evaluate_chunk, RunLog, RunMeta, RunRow};
use crate::learners::partial_fit;
use crate::rng;
use crate::search::{
    refit, run_search, EnsembleMethod, FittedAutoML, Paradigm, SearchBudget, StackerKind,
    HOLDOUT_FRAC,
};
use crate::space::SearchSpace;
use crate::stream::{Batch, SlidingWindow, StreamSchema};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StrategyKind {
    TrainOnce,
    DetectIncrement,
    DetectRetrain,
    DetectWarmstart,
    DetectRestart,
    PeriodicRestart,
}

impl StrategyKind {
    /// Short code used in logs and on the command line.
    pub fn code(&self) -> &'static str {
        match self {
            StrategyKind::TrainOnce => "T1",
            StrategyKind::DetectIncrement => "DI",
            StrategyKind::DetectRetrain => "DRT",
            StrategyKind::DetectWarmstart => "DWS",
            StrategyKind::DetectRestart => "DRS",
            StrategyKind::PeriodicRestart => "PRS",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "T1" | "train_once" => Ok(StrategyKind::TrainOnce),
            "DI" | "detect_increment" => Ok(StrategyKind::DetectIncrement),
            "DRT" | "detect_retrain" => Ok(StrategyKind::DetectRetrain),
            "DWS" | "detect_warmstart" => Ok(StrategyKind::DetectWarmstart),
            "DRS" | "detect_restart" => Ok(StrategyKind::DetectRestart),
            "PRS" | "periodic_restart" => Ok(StrategyKind::PeriodicRestart),
            other => Err(Error::InvalidConfig(format!("unknown strategy {other:?}"))),
        }
    }

    pub fn acts_on_drift(&self) -> bool {
        matches!(
            self,
            StrategyKind::DetectIncrement
                | StrategyKind::DetectRetrain
                | StrategyKind::DetectWarmstart
                | StrategyKind::DetectRestart
        )
    }

    pub const ALL: [StrategyKind; 6] = [
        StrategyKind::TrainOnce,
        StrategyKind::DetectIncrement,
        StrategyKind::DetectRetrain,
        StrategyKind::DetectWarmstart,
        StrategyKind::DetectRestart,
        StrategyKind::PeriodicRestart,
    ];
}

#[derive(Debug, Clone)]
pub struct OrchestratorConfig {
    pub window_capacity: usize,
    pub paradigm: Paradigm,
    pub budget: SearchBudget,
    pub stacker: StackerKind,
    pub seed: u64,
    /// Keep the previous ensemble members alongside the new search's on
    /// warm restarts (off by default: the ensemble is replaced wholesale).
    pub carry_over_members: bool,
    /// Forced drift batches replacing the detector when set.
    pub preset_drifts: Option<Vec<usize>>,
    pub detector: EddmConfig,
    pub run_id: String,
    pub stream_description: String,
}

impl OrchestratorConfig {
    pub fn validate(&self) -> Result<()> {
        if self.window_capacity < 1 {
            return Err(Error::InvalidConfig("window capacity must be >= 1".into()));
        }
        self.detector.validate()
    }
}

/// Mutable state threaded through the batch loop.
pub struct RunState {
    pub deployed: FittedAutoML,
    pub window: SlidingWindow,
    pub detector: EddmState,
    pub retrain_count: usize,
    pub drift_count: usize,
    pub pipeline_changes: usize,
    cash_runs: u64,
}

fn ensemble_method(paradigm: Paradigm, stacker: StackerKind) -> EnsembleMethod {
    match paradigm {
        Paradigm::RandomStack => EnsembleMethod::Stacker { kind: stacker },
        Paradigm::Smbo => EnsembleMethod::Greedy { size: 10 },
        Paradigm::Evo => EnsembleMethod::TopKVote { k: 5 },
    }
}

fn run_cash(
    state_runs: &mut u64,
    space: &SearchSpace,
    schema: &StreamSchema,
    data: &crate::stream::TrainView,
    cfg: &OrchestratorConfig,
    warm: &[crate::space::PipelineConfig],
) -> Result<FittedAutoML> {
    let seed = rng::mix(cfg.seed, "cash", *state_runs);
    *state_runs += 1;
    run_search(
        cfg.paradigm,
        space,
        schema,
        data,
        &cfg.budget,
        cfg.stacker,
        seed,
        warm,
    )
}

/// Apply one strategy step after a batch has been tested and pushed into
/// the window. Returns whether any retraining happened.
pub fn apply_strategy(
    strategy: StrategyKind,
    state: &mut RunState,
    signal: Signal,
    cfg: &OrchestratorConfig,
    schema: &StreamSchema,
    unrestricted_space: &SearchSpace,
) -> Result<bool> {
    match strategy {
        StrategyKind::TrainOnce => Ok(false),
        StrategyKind::PeriodicRestart => {
            state.deployed = run_cash(
                &mut state.cash_runs,
                unrestricted_space,
                schema,
                &state.window.training_view(),
                cfg,
                &[],
            )?;
            state.retrain_count += 1;
            Ok(true)
        }
        _ if signal == Signal::Stable => Ok(false),
        StrategyKind::DetectIncrement => {
            // members keep their configs; each continues training on the
            // window, then the combiner is recomputed on the window holdout
            audit::enter_search();
            let view = state.window.training_view();
            let (train, holdout) = view.split_holdout(HOLDOUT_FRAC);
            audit::record(audit::FitKind::HoldoutSplit, holdout.row_ids());
            let seed = rng::mix(cfg.seed, "increment", state.retrain_count as u64);
            for (i, member) in state.deployed.ensemble.members.iter_mut().enumerate() {
                member.model = partial_fit(&member.model, &train, rng::mix(seed, "member", i as u64))?;
            }
            state
                .deployed
                .ensemble
                .recombine(&holdout, rng::mix(seed, "combine", 0));
            audit::exit_search();
            state.retrain_count += 1;
            Ok(true)
        }
        StrategyKind::DetectRetrain => {
            let seed = rng::mix(cfg.seed, "retrain", state.retrain_count as u64);
            state.deployed = refit(&state.deployed, &state.window.training_view(), schema, seed)?;
            state.retrain_count += 1;
            Ok(true)
        }
        StrategyKind::DetectWarmstart => {
            // re-searching strategies train on the data that arrived since
            // the drift was flagged (the newest window batch); the pipelines
            // they replace were optimized for the old concept, so older
            // window batches straddle the change
            let warm = state.deployed.top_configs(5);
            let previous = if cfg.carry_over_members {
                Some(state.deployed.ensemble.clone())
            } else {
                None
            };
            let mut fresh = run_cash(
                &mut state.cash_runs,
                unrestricted_space,
                schema,
                &state.window.newest_view(),
                cfg,
                &warm,
            )?;
            if let Some(old) = previous {
                // pool old members (as already-fitted candidates) with the
                // new ones and rebuild the combiner on the fresh holdout
                let view = state.window.newest_view();
                let (_, holdout) = view.split_holdout(HOLDOUT_FRAC);
                let holdout_rows: Vec<Vec<f64>> = holdout
                    .rows
                    .iter()
                    .map(|r| r.instance.features.clone())
                    .collect();
                let holdout_labels: Vec<usize> =
                    holdout.rows.iter().map(|r| r.instance.label).collect();
                let mut candidates = Vec::new();
                for member in old.members.into_iter().chain(fresh.ensemble.members.clone()) {
                    let (preds, _) = member.model.predict_rows(&holdout_rows);
                    let score = preds
                        .iter()
                        .zip(&holdout_labels)
                        .filter(|(p, l)| p == l)
                        .count() as f64
                        / holdout_labels.len().max(1) as f64;
                    candidates.push(crate::search::ScoredModel {
                        model: member.model,
                        holdout_score: score,
                    });
                }
                let method = ensemble_method(cfg.paradigm, cfg.stacker);
                fresh.ensemble = crate::search::build_ensemble(
                    candidates,
                    &holdout,
                    &method,
                    rng::mix(cfg.seed, "carryover", state.retrain_count as u64),
                )?;
            }
            state.deployed = fresh;
            state.retrain_count += 1;
            Ok(true)
        }
        StrategyKind::DetectRestart => {
            state.deployed = run_cash(
                &mut state.cash_runs,
                unrestricted_space,
                schema,
                &state.window.newest_view(),
                cfg,
                &[],
            )?;
            state.retrain_count += 1;
            Ok(true)
        }
    }
}

/// Run one strategy over a batch stream under test-then-train evaluation.
///
/// Batch 0 is used for the initial search only; every subsequent batch
/// produces one log row. The detector is fed for every strategy (its flags
/// are logged), but only the detect-and-* strategies act on them; preset
/// drift batches replace the detector entirely when given.
pub fn run_stream(
    batches: &[Batch],
    schema: &StreamSchema,
    strategy: StrategyKind,
    cfg: &OrchestratorConfig,
) -> Result<RunLog> {
    cfg.validate()?;
    schema.validate()?;
    if batches.len() < 2 {
        return Err(Error::InvalidConfig(
            "need at least 2 batches (initial training batch plus one test batch)".into(),
        ));
    }
    let restricted = strategy == StrategyKind::DetectIncrement;
    let initial_space = SearchSpace::default_space(schema.has_categorical(), restricted);
    let unrestricted_space = SearchSpace::default_space(schema.has_categorical(), false);

    let mut window = SlidingWindow::new(cfg.window_capacity);
    audit::set_current_batch(Some(batches[0].index));
    window.push(batches[0].clone())?;
    let mut cash_runs = 0u64;
    let deployed = run_cash(
        &mut cash_runs,
        &initial_space,
        schema,
        &window.training_view(),
        cfg,
        &[],
    )
    .map_err(|e| Error::InitialSearchFailed(e.to_string()))?;
    let mut state = RunState {
        deployed,
        window,
        detector: EddmState::new(cfg.detector),
        retrain_count: 0,
        drift_count: 0,
        pipeline_changes: 0,
        cash_runs,
    };

    let mut rows = Vec::with_capacity(batches.len() - 1);
    let mut global_pos: usize = batches[0].len();
    for batch in &batches[1..] {
        audit::set_current_batch(Some(batch.index));
        let t_predict = Instant::now();
        let (accuracy, correctness) = evaluate_chunk(&state.deployed.ensemble, batch)?;
        let predict_seconds = t_predict.elapsed().as_secs_f64();

        let drift = match &cfg.preset_drifts {
            Some(preset) => preset.contains(&batch.index),
            None => {
                let mut fired = false;
                for &correct in &correctness {
                    if state.detector.update(correct, global_pos)? == Signal::Drift {
                        fired = true;
                    }
                    global_pos += 1;
                }
                fired
            }
        };
        if cfg.preset_drifts.is_some() {
            global_pos += batch.len();
        }
        if drift {
            state.drift_count += 1;
        }
        state.window.push(batch.clone())?;

        let signal = if drift { Signal::Drift } else { Signal::Stable };
        let incumbent_before = state.deployed.incumbent.stable_hash();
        let t_fit = Instant::now();
        let retrained =
            apply_strategy(strategy, &mut state, signal, cfg, schema, &unrestricted_space)?;
        let fit_seconds = t_fit.elapsed().as_secs_f64();
        let pipeline_changed = state.deployed.incumbent.stable_hash() != incumbent_before;
        if pipeline_changed {
            state.pipeline_changes += 1;
        }
        rows.push(RunRow {
            run_id: cfg.run_id.clone(),
            strategy: strategy.code().to_string(),
            paradigm: cfg.paradigm.name().to_string(),
            seed: cfg.seed,
            batch_index: batch.index,
            accuracy,
            drift_detected: drift,
            retrained,
            pipeline_changed,
            fit_seconds,
            predict_seconds,
        });
    }
    audit::set_current_batch(None);
    Ok(RunLog {
        rows,
        meta: RunMeta {
            run_id: cfg.run_id.clone(),
            strategy: strategy.code().to_string(),
            paradigm: cfg.paradigm.name().to_string(),
            seed: cfg.seed,
            stream: cfg.stream_description.clone(),
            budget: cfg.budget.describe(),
            software_version: env!("CARGO_PKG_VERSION").to_string(),
            retrain_count: state.retrain_count,
            drift_count: state.drift_count,
            pipeline_changes: state.pipeline_changes,
        },
    })
}
