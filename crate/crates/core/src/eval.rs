//! Chunk-based test-then-train harness: run logs, experiment sweeps,
//! summary metrics, and recovery times.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::adapt::{run_stream, OrchestratorConfig, StrategyKind};
use crate::baselines::{run_baseline, BaselineConfig, BaselineKind};
use crate::detect::EddmConfig;
use crate::error::{Error, Result};
use crate::generators::{
    abrupt_spec, gradual_spec, mixed_spec, generate_stream, Concept, DriftKind, DriftSpec, Family,
    NoiseSpec, SeaConcept,
};
use crate::rng;
use crate::search::{EnsembleModel, Paradigm, SearchBudget, StackerKind};
use crate::stream::{batchify, ingest_csv, Batch, IngestOptions, StreamSchema};

/// One row of a run log; the CSV schema is fixed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRow {
    pub run_id: String,
    pub strategy: String,
    pub paradigm: String,
    pub seed: u64,
    pub batch_index: usize,
    pub accuracy: f64,
    pub drift_detected: bool,
    pub retrained: bool,
    pub pipeline_changed: bool,
    pub fit_seconds: f64,
    pub predict_seconds: f64,
}

pub const RUN_CSV_HEADER: &str = "run_id,strategy,paradigm,seed,batch_index,accuracy,drift_detected,retrained,pipeline_changed,fit_seconds,predict_seconds";

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunMeta {
    pub run_id: String,
    pub strategy: String,
    pub paradigm: String,
    pub seed: u64,
    pub stream: String,
    pub budget: String,
    pub software_version: String,
    pub retrain_count: usize,
    pub drift_count: usize,
    pub pipeline_changes: usize,
}

/// Per-batch records of one run plus its metadata.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunLog {
    pub rows: Vec<RunRow>,
    pub meta: RunMeta,
}

impl RunLog {
    pub fn mean_accuracy(&self) -> f64 {
        if self.rows.is_empty() {
            return 0.0;
        }
        self.rows.iter().map(|r| r.accuracy).sum::<f64>() / self.rows.len() as f64
    }

    /// Mean accuracy over rows with batch_index in [lo, hi].
    pub fn mean_accuracy_between(&self, lo: usize, hi: usize) -> f64 {
        let rows: Vec<&RunRow> = self
            .rows
            .iter()
            .filter(|r| r.batch_index >= lo && r.batch_index <= hi)
            .collect();
        if rows.is_empty() {
            return 0.0;
        }
        rows.iter().map(|r| r.accuracy).sum::<f64>() / rows.len() as f64
    }

    pub fn drift_batches(&self) -> Vec<usize> {
        self.rows
            .iter()
            .filter(|r| r.drift_detected)
            .map(|r| r.batch_index)
            .collect()
    }

    pub fn total_fit_seconds(&self) -> f64 {
        self.rows.iter().map(|r| r.fit_seconds).sum()
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut out = String::with_capacity(self.rows.len() * 80);
        out.push_str(RUN_CSV_HEADER);
        out.push('\n');
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{},{},{}\n",
                r.run_id,
                r.strategy,
                r.paradigm,
                r.seed,
                r.batch_index,
                r.accuracy,
                r.drift_detected,
                r.retrained,
                r.pipeline_changed,
                r.fit_seconds,
                r.predict_seconds
            ));
        }
        atomic_write(path, out.as_bytes())
    }

    pub fn read_csv(path: &Path) -> Result<RunLog> {
        let mut reader = csv::ReaderBuilder::new().has_headers(true).from_path(path)?;
        let mut rows = Vec::new();
        for rec in reader.deserialize() {
            let row: RunRow = rec?;
            rows.push(row);
        }
        let meta_path = meta_path_for(path);
        let meta = if meta_path.exists() {
            let text = std::fs::read_to_string(&meta_path)?;
            toml::from_str(&text).map_err(|e| Error::Toml(e.to_string()))?
        } else {
            let first = rows.first().ok_or(Error::EmptyStream)?;
            RunMeta {
                run_id: first.run_id.clone(),
                strategy: first.strategy.clone(),
                paradigm: first.paradigm.clone(),
                seed: first.seed,
                stream: String::new(),
                budget: String::new(),
                software_version: String::new(),
                retrain_count: rows.iter().filter(|r| r.retrained).count(),
                drift_count: rows.iter().filter(|r| r.drift_detected).count(),
                pipeline_changes: rows.iter().filter(|r| r.pipeline_changed).count(),
            }
        };
        Ok(RunLog { rows, meta })
    }

    pub fn write_with_meta(&self, dir: &Path) -> Result<PathBuf> {
        std::fs::create_dir_all(dir)?;
        let csv_path = dir.join(format!("{}.csv", self.meta.run_id));
        self.write_csv(&csv_path)?;
        let text = toml::to_string_pretty(&self.meta).map_err(|e| Error::Toml(e.to_string()))?;
        atomic_write(&meta_path_for(&csv_path), text.as_bytes())?;
        Ok(csv_path)
    }
}

fn meta_path_for(csv_path: &Path) -> PathBuf {
    csv_path.with_extension("meta.toml")
}

fn atomic_write(path: &Path, bytes: &[u8]) -> Result<()> {
    let tmp = path.with_extension("tmp");
    std::fs::write(&tmp, bytes)?;
    std::fs::rename(&tmp, path)?;
    Ok(())
}

/// Test a deployed model on one chunk: accuracy plus the per-instance
/// correctness vector (which feeds the drift detector). The model is not
/// modified.
pub fn evaluate_chunk(model: &EnsembleModel, batch: &Batch) -> Result<(f64, Vec<bool>)> {
    let (preds, _) = model.predict_batch(batch)?;
    let correct: Vec<bool> = preds
        .iter()
        .zip(&batch.instances)
        .map(|(p, inst)| *p == inst.label)
        .collect();
    let accuracy = correct.iter().filter(|c| **c).count() as f64 / correct.len() as f64;
    Ok((accuracy, correct))
}

/// Batches from the first drift flag until a 5-batch moving average of
/// accuracy re-enters the pre-drift mean minus 2 points; `None` means never.
pub fn recovery_time(rows: &[RunRow], drift_pos: usize) -> Option<usize> {
    let pre: Vec<f64> = rows[..drift_pos].iter().map(|r| r.accuracy).collect();
    if pre.is_empty() {
        return Some(0);
    }
    let pre_mean = pre.iter().sum::<f64>() / pre.len() as f64;
    let threshold = pre_mean - 0.02;
    for t in drift_pos..rows.len() {
        let lo = t.saturating_sub(4).max(drift_pos);
        let window = &rows[lo..=t];
        let ma = window.iter().map(|r| r.accuracy).sum::<f64>() / window.len() as f64;
        if ma >= threshold {
            return Some(rows[t].batch_index - rows[drift_pos].batch_index);
        }
    }
    None
}

#[derive(Debug, Clone, Serialize)]
pub struct RunSummary {
    pub run_id: String,
    pub strategy: String,
    pub paradigm: String,
    pub seed: u64,
    pub mean_accuracy: f64,
    pub drift_count: usize,
    pub retrain_count: usize,
    pub pipeline_changes: usize,
    pub total_fit_seconds: f64,
    pub first_drift_batch: Option<usize>,
    /// Recovery of the first drift; "never" when accuracy does not return.
    pub recovery_batches: Option<usize>,
}

pub fn summarize(log: &RunLog) -> RunSummary {
    let first_drift_row = log.rows.iter().position(|r| r.drift_detected);
    let recovery = first_drift_row.and_then(|d| recovery_time(&log.rows, d));
    RunSummary {
        run_id: log.meta.run_id.clone(),
        strategy: log.meta.strategy.clone(),
        paradigm: log.meta.paradigm.clone(),
        seed: log.meta.seed,
        mean_accuracy: log.mean_accuracy(),
        drift_count: log.rows.iter().filter(|r| r.drift_detected).count(),
        retrain_count: log.rows.iter().filter(|r| r.retrained).count(),
        pipeline_changes: log.rows.iter().filter(|r| r.pipeline_changed).count(),
        total_fit_seconds: log.total_fit_seconds(),
        first_drift_batch: first_drift_row.map(|d| log.rows[d].batch_index),
        recovery_batches: recovery,
    }
}

pub fn write_summary_csv(logs: &[RunLog], path: &Path) -> Result<()> {
    let mut summaries: Vec<RunSummary> = logs.iter().map(summarize).collect();
    summaries.sort_by(|a, b| a.run_id.cmp(&b.run_id));
    let mut out = String::new();
    out.push_str("run_id,strategy,paradigm,seed,mean_accuracy,drift_count,retrain_count,pipeline_changes,total_fit_seconds,first_drift_batch,recovery_batches\n");
    for s in &summaries {
        out.push_str(&format!(
            "{},{},{},{},{:.6},{},{},{},{:.3},{},{}\n",
            s.run_id,
            s.strategy,
            s.paradigm,
            s.seed,
            s.mean_accuracy,
            s.drift_count,
            s.retrain_count,
            s.pipeline_changes,
            s.total_fit_seconds,
            s.first_drift_batch.map_or("-".into(), |b| b.to_string()),
            s.recovery_batches.map_or("never".into(), |b| b.to_string()),
        ));
    }
    atomic_write(path, out.as_bytes())
}

/// Every (run, drift) pair with its recovery time; the mapping is total.
pub fn write_recoveries_csv(logs: &[RunLog], path: &Path) -> Result<()> {
    let mut out = String::from("run_id,drift_batch,recovery_batches\n");
    let mut logs_sorted: Vec<&RunLog> = logs.iter().collect();
    logs_sorted.sort_by(|a, b| a.meta.run_id.cmp(&b.meta.run_id));
    for log in logs_sorted {
        for (i, row) in log.rows.iter().enumerate() {
            if row.drift_detected {
                let rec = recovery_time(&log.rows, i);
                out.push_str(&format!(
                    "{},{},{}\n",
                    log.meta.run_id,
                    row.batch_index,
                    rec.map_or("never".into(), |b| b.to_string())
                ));
            }
        }
    }
    atomic_write(path, out.as_bytes())
}

/// Synthetic stream description used by runs and sweeps.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GenSpec {
    pub family: Family,
    pub n: usize,
    pub drift: DriftKind,
    pub center: Option<usize>,
    pub window: Option<usize>,
    pub magnitude: u8,
    pub noise: f64,
}

impl GenSpec {
    pub fn drift_spec(&self, magnitude: u8) -> Result<DriftSpec> {
        let center = self.center.unwrap_or(self.n / 2);
        let window = self.window.unwrap_or(self.n / 5);
        let spec = match self.drift {
            DriftKind::None => match self.family {
                Family::Sea => DriftSpec::none(Concept::Sea(SeaConcept::new(8.0))),
                Family::Hyperplane => {
                    let (from, _) = crate::generators::hyperplane_magnitude_pair(1);
                    DriftSpec::none(Concept::Hyperplane(from))
                }
            },
            DriftKind::Abrupt => abrupt_spec(self.family, center, magnitude),
            DriftKind::Gradual => gradual_spec(self.family, center, window, magnitude),
            DriftKind::Mixed => {
                if self.family != Family::Sea {
                    return Err(Error::InvalidDriftSpec(
                        "the built-in mixed ladder is defined for the sea family".into(),
                    ));
                }
                mixed_spec(self.n, magnitude)
            }
        };
        spec.validate(self.n)?;
        Ok(spec)
    }

    pub fn describe(&self, magnitude: u8) -> String {
        format!(
            "{}:{:?}:mag{}:noise{}:n{}",
            self.family, self.drift, magnitude, self.noise, self.n
        )
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case")]
pub enum StreamSource {
    Generated { spec: GenSpec },
    File { csv: PathBuf, label_column: Option<String> },
}

/// Base run parameters; the sweep axis overrides one of them per value.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunParams {
    /// Strategy code (T1, DI, DRT, DWS, DRS, PRS) or baseline (OZA, BLAST, GBM).
    pub strategy: String,
    pub paradigm: Paradigm,
    pub budget_seconds: Option<f64>,
    pub budget_evaluations: Option<usize>,
    pub stacker: StackerKind,
    pub batch_size: usize,
    pub window_capacity: usize,
    pub preset_drifts: Option<Vec<usize>>,
    pub carry_over_members: bool,
}

impl Default for RunParams {
    fn default() -> Self {
        RunParams {
            strategy: "DRS".into(),
            paradigm: Paradigm::Evo,
            budget_seconds: None,
            budget_evaluations: Some(10),
            stacker: StackerKind::Linear,
            batch_size: 1000,
            window_capacity: 3,
            preset_drifts: None,
            carry_over_members: false,
        }
    }
}

impl RunParams {
    pub fn budget(&self) -> Result<SearchBudget> {
        SearchBudget::new(self.budget_seconds, self.budget_evaluations)
    }

    pub fn validate(&self) -> Result<()> {
        let mut violations = Vec::new();
        if self.batch_size < 100 {
            violations.push(format!("batch_size must be >= 100, got {}", self.batch_size));
        }
        if self.window_capacity < 1 {
            violations.push("window capacity must be >= 1".into());
        }
        if let Err(e) = self.budget() {
            violations.push(e.to_string());
        }
        if let Err(e) = parse_runner(&self.strategy) {
            violations.push(e.to_string());
        }
        if violations.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidConfig(violations.join("; ")))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    Strategy,
    MagnitudeLevel,
    TimeBudget,
    StackerKind,
}

impl SweepAxis {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "strategy" => Ok(SweepAxis::Strategy),
            "magnitude_level" | "magnitude" => Ok(SweepAxis::MagnitudeLevel),
            "time_budget" => Ok(SweepAxis::TimeBudget),
            "stacker_kind" | "stacker" => Ok(SweepAxis::StackerKind),
            other => Err(Error::InvalidConfig(format!("unknown sweep axis {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepSpec {
    pub sweep_id: String,
    pub axis: SweepAxis,
    pub values: Vec<String>,
    pub seeds: Vec<u64>,
    pub master_seed: u64,
    pub stream: StreamSource,
    pub base: RunParams,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        let mut violations = Vec::new();
        if self.values.is_empty() {
            violations.push("sweep needs at least one axis value".to_string());
        }
        if self.seeds.is_empty() {
            violations.push("sweep needs at least one seed".to_string());
        }
        for v in &self.values {
            if let Err(e) = apply_axis(&self.base, self.axis, v) {
                violations.push(format!("value {v:?}: {e}"));
            }
        }
        if self.axis == SweepAxis::MagnitudeLevel
            && !matches!(self.stream, StreamSource::Generated { .. })
        {
            violations.push("magnitude_level sweeps require a generated stream".into());
        }
        if let Err(e) = self.base.validate() {
            violations.push(e.to_string());
        }
        if violations.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidConfig(violations.join("; ")))
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub enum RunnerKind {
    Strategy(StrategyKind),
    Baseline(BaselineKind),
}

pub fn parse_runner(s: &str) -> Result<RunnerKind> {
    if let Ok(st) = StrategyKind::parse(s) {
        return Ok(RunnerKind::Strategy(st));
    }
    if let Ok(b) = BaselineKind::parse(s) {
        return Ok(RunnerKind::Baseline(b));
    }
    Err(Error::InvalidConfig(format!(
        "unknown strategy {s:?} (expected T1, DI, DRT, DWS, DRS, PRS, OZA, BLAST, or GBM)"
    )))
}

/// Apply one axis value to the base parameters. Returns the adjusted params
/// and the magnitude override for generated streams.
fn apply_axis(base: &RunParams, axis: SweepAxis, value: &str) -> Result<(RunParams, Option<u8>)> {
    let mut params = base.clone();
    let mut magnitude = None;
    match axis {
        SweepAxis::Strategy => {
            parse_runner(value)?;
            params.strategy = value.to_string();
        }
        SweepAxis::MagnitudeLevel => {
            let level: u8 = value
                .parse()
                .map_err(|_| Error::InvalidConfig(format!("bad magnitude level {value:?}")))?;
            if !(1..=4).contains(&level) {
                return Err(Error::InvalidConfig("magnitude level must be 1..=4".into()));
            }
            magnitude = Some(level);
        }
        SweepAxis::TimeBudget => {
            let secs: f64 = value
                .parse()
                .map_err(|_| Error::InvalidConfig(format!("bad time budget {value:?}")))?;
            params.budget_seconds = Some(secs);
            params.budget_evaluations = None;
        }
        SweepAxis::StackerKind => {
            params.stacker = StackerKind::parse(value)?;
        }
    }
    Ok((params, magnitude))
}

#[derive(Debug, Clone)]
pub struct PreparedStream {
    pub schema: StreamSchema,
    pub batches: Vec<Batch>,
    pub description: String,
    pub drift_positions: Vec<usize>,
}

pub fn prepare_stream(
    source: &StreamSource,
    magnitude_override: Option<u8>,
    batch_size: usize,
    stream_seed: u64,
) -> Result<PreparedStream> {
    match source {
        StreamSource::Generated { spec } => {
            let magnitude = magnitude_override.unwrap_or(spec.magnitude);
            let drift = spec.drift_spec(magnitude)?;
            let noise = NoiseSpec::new(spec.noise);
            let (schema, instances, positions) =
                generate_stream(spec.n, &drift, &noise, stream_seed)?;
            Ok(PreparedStream {
                schema,
                batches: batchify(instances, batch_size)?,
                description: spec.describe(magnitude),
                drift_positions: positions,
            })
        }
        StreamSource::File { csv, label_column } => {
            let options = IngestOptions {
                label_column: label_column.clone(),
                ..IngestOptions::default()
            };
            let (schema, instances) = ingest_csv(csv, &options)?;
            Ok(PreparedStream {
                schema,
                batches: batchify(instances, batch_size)?,
                description: csv.display().to_string(),
                drift_positions: Vec::new(),
            })
        }
    }
}

/// Execute one run (AutoML strategy or baseline) on a prepared stream.
pub fn execute_run(
    stream: &PreparedStream,
    params: &RunParams,
    seed: u64,
    run_id: String,
) -> Result<RunLog> {
    params.validate()?;
    match parse_runner(&params.strategy)? {
        RunnerKind::Strategy(strategy) => {
            let cfg = OrchestratorConfig {
                window_capacity: params.window_capacity,
                paradigm: params.paradigm,
                budget: params.budget()?,
                stacker: params.stacker,
                seed,
                carry_over_members: params.carry_over_members,
                preset_drifts: params.preset_drifts.clone(),
                detector: EddmConfig::default(),
                run_id,
                stream_description: stream.description.clone(),
            };
            run_stream(&stream.batches, &stream.schema, strategy, &cfg)
        }
        RunnerKind::Baseline(kind) => {
            let cfg = BaselineConfig {
                seed,
                detector: EddmConfig::default(),
                preset_drifts: params.preset_drifts.clone(),
                run_id,
                stream_description: stream.description.clone(),
            };
            run_baseline(&stream.batches, &stream.schema, kind, &cfg)
        }
    }
}

#[derive(Debug)]
pub struct SweepResult {
    pub logs: Vec<RunLog>,
    /// (run_id, error) for failed runs; the sweep continues past failures.
    pub failures: Vec<(String, String)>,
    /// Runs skipped because their result files already existed.
    pub resumed: usize,
}

/// Run the full cartesian product of axis values and seeds, writing each
/// run's CSV and metadata under `out_dir` as it completes. Existing result
/// files are kept (resumable sweeps). `jobs` bounds the worker pool.
pub fn run_sweep(spec: &SweepSpec, out_dir: &Path, jobs: usize) -> Result<SweepResult> {
    spec.validate()?;
    std::fs::create_dir_all(out_dir)?;
    let manifest = toml::to_string_pretty(spec).map_err(|e| Error::Toml(e.to_string()))?;
    atomic_write(&out_dir.join("sweep.toml"), manifest.as_bytes())?;

    let mut tasks: Vec<(String, RunParams, Option<u8>, u64)> = Vec::new();
    for value in &spec.values {
        let (params, magnitude) = apply_axis(&spec.base, spec.axis, value)?;
        for &seed in &spec.seeds {
            let run_seed = rng::mix(spec.master_seed, value, seed);
            let run_id = format!("{}-seed{}", sanitize(value), seed);
            tasks.push((run_id, params.clone(), magnitude, run_seed));
        }
    }

    // File streams are loaded once and shared; generated streams depend on
    // the run seed and magnitude, so they are built per task.
    let shared_file: Option<Arc<PreparedStream>> = match &spec.stream {
        StreamSource::File { .. } => Some(Arc::new(prepare_stream(
            &spec.stream,
            None,
            spec.base.batch_size,
            0,
        )?)),
        StreamSource::Generated { .. } => None,
    };

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| Error::InvalidConfig(e.to_string()))?;
    let stream_src = &spec.stream;
    type RunOutcome = (String, std::result::Result<(RunLog, bool), String>);
    let outcomes: Vec<RunOutcome> = pool.install(|| {
            tasks
                .par_iter()
                .map(|(run_id, params, magnitude, run_seed)| {
                    let csv_path = out_dir.join(format!("{run_id}.csv"));
                    if csv_path.exists() {
                        return (
                            run_id.clone(),
                            RunLog::read_csv(&csv_path)
                                .map(|l| (l, true))
                                .map_err(|e| e.to_string()),
                        );
                    }
                    let result = (|| -> Result<RunLog> {
                        let stream = match (&shared_file, magnitude) {
                            (Some(shared), _) => Arc::clone(shared),
                            (None, m) => Arc::new(prepare_stream(
                                stream_src,
                                *m,
                                params.batch_size,
                                rng::mix(*run_seed, "stream", 0),
                            )?),
                        };
                        let log = execute_run(&stream, params, *run_seed, run_id.clone())?;
                        log.write_with_meta(out_dir)?;
                        Ok(log)
                    })();
                    (run_id.clone(), result.map(|l| (l, false)).map_err(|e| e.to_string()))
                })
                .collect()
        });

    let mut logs = Vec::new();
    let mut failures = Vec::new();
    let mut resumed = 0;
    for (run_id, outcome) in outcomes {
        match outcome {
            Ok((log, was_resumed)) => {
                resumed += usize::from(was_resumed);
                logs.push(log);
            }
            Err(e) => failures.push((run_id, e)),
        }
    }
    if !failures.is_empty() {
        let mut text = String::from("run_id,error\n");
        for (id, e) in &failures {
            text.push_str(&format!("{id},{}\n", e.replace(',', ";")));
        }
        atomic_write(&out_dir.join("failures.csv"), text.as_bytes())?;
    }
    logs.sort_by(|a, b| a.meta.run_id.cmp(&b.meta.run_id));
    write_summary_csv(&logs, &out_dir.join("summary.csv"))?;
    write_recoveries_csv(&logs, &out_dir.join("recoveries.csv"))?;
    Ok(SweepResult {
        logs,
        failures,
        resumed,
    })
}

fn sanitize(value: &str) -> String {
    value
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { 'p' })
        .collect()
}
