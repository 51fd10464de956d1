//! Command-line entry point: stream generation, single runs, sweeps,
//! detector replay, and report rendering.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use driftml::detect::{EddmConfig, EddmState, Signal};
use driftml::eval::{
    prepare_stream, run_sweep, GenSpec, RunLog, RunParams, StreamSource, SweepAxis, SweepSpec,
};
use driftml::generators::{DriftKind, Family};
use driftml::plot::render_report;
use driftml::search::{Paradigm, StackerKind};
use driftml::stream::StreamMeta;

#[derive(Parser)]
#[command(
    name = "driftml",
    version,
    about = "AutoML pipeline search on evolving data streams",
    propagate_version = true
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic stream CSV with a metadata sidecar
    Generate(GenerateArgs),
    /// Run one adaptation strategy or baseline over a stream
    Run(RunArgs),
    /// Run a sweep over strategies, magnitudes, time budgets, or stackers
    Sweep(SweepArgs),
    /// Replay a stored correctness stream through the drift detector
    Detect(DetectArgs),
    /// Render plots and summary tables from stored run logs
    Report(ReportArgs),
}

#[derive(Args, Clone)]
struct StreamArgs {
    /// CSV stream to ingest (header row required)
    #[arg(long)]
    stream: Option<PathBuf>,
    /// Label column name for ingested streams (default: last column)
    #[arg(long)]
    label_col: Option<String>,
    /// Generator family (sea | hyperplane) when no --stream file is given
    #[arg(long)]
    family: Option<String>,
    /// Instances to generate
    #[arg(long, default_value_t = 100_000)]
    n: usize,
    /// Drift kind: none | abrupt | gradual | mixed
    #[arg(long, default_value = "abrupt")]
    drift: String,
    /// Drift midpoint (instance index; default n/2)
    #[arg(long)]
    center: Option<usize>,
    /// Drift window in instances (gradual; default n/5)
    #[arg(long)]
    window_instances: Option<usize>,
    /// Drift magnitude level 1..=4
    #[arg(long, default_value_t = 4)]
    magnitude: u8,
    /// Label-flip noise rate
    #[arg(long, default_value_t = 0.10)]
    noise: f64,
}

impl StreamArgs {
    fn source(&self) -> Result<StreamSource, driftml::Error> {
        if let Some(csv) = &self.stream {
            return Ok(StreamSource::File {
                csv: csv.clone(),
                label_column: self.label_col.clone(),
            });
        }
        let family = match self.family.as_deref() {
            Some("sea") => Family::Sea,
            Some("hyperplane") => Family::Hyperplane,
            Some(other) => {
                return Err(driftml::Error::InvalidConfig(format!(
                    "unknown family {other:?} (expected sea or hyperplane)"
                )))
            }
            None => {
                return Err(driftml::Error::InvalidConfig(
                    "either --stream <csv> or --family <sea|hyperplane> is required".into(),
                ))
            }
        };
        let drift = match self.drift.as_str() {
            "none" => DriftKind::None,
            "abrupt" => DriftKind::Abrupt,
            "gradual" => DriftKind::Gradual,
            "mixed" => DriftKind::Mixed,
            other => {
                return Err(driftml::Error::InvalidConfig(format!(
                    "unknown drift kind {other:?}"
                )))
            }
        };
        Ok(StreamSource::Generated {
            spec: GenSpec {
                family,
                n: self.n,
                drift,
                center: self.center,
                window: self.window_instances,
                magnitude: self.magnitude,
                noise: self.noise,
            },
        })
    }
}

#[derive(Args)]
struct GenerateArgs {
    #[command(flatten)]
    stream: StreamArgs,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output CSV path; the metadata sidecar lands next to it
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Clone)]
struct RunParamArgs {
    /// Strategy code: T1 | DI | DRT | DWS | DRS | PRS | OZA | BLAST | GBM
    #[arg(long)]
    strategy: Option<String>,
    /// Search paradigm: random_stack | smbo | evo
    #[arg(long)]
    paradigm: Option<String>,
    /// Wall-clock search budget in seconds
    #[arg(long)]
    budget_sec: Option<f64>,
    /// Evaluation-count search budget (deterministic runs)
    #[arg(long)]
    budget_evals: Option<usize>,
    /// Stacker meta-learner: linear | gbm
    #[arg(long)]
    stacker: Option<String>,
    #[arg(long)]
    batch_size: Option<usize>,
    /// Sliding-window capacity in batches
    #[arg(long)]
    window: Option<usize>,
    /// Forced drift batches replacing the detector, e.g. 50,75
    #[arg(long, value_delimiter = ',')]
    preset_drifts: Option<Vec<usize>>,
    /// Keep previous ensemble members through warm restarts
    #[arg(long, default_value_t = false)]
    carry_over: bool,
}

impl RunParamArgs {
    fn merge(&self, base: RunParams) -> Result<RunParams, driftml::Error> {
        let mut params = base;
        if let Some(s) = &self.strategy {
            params.strategy = s.clone();
        }
        if let Some(p) = &self.paradigm {
            params.paradigm = Paradigm::parse(p)?;
        }
        if self.budget_sec.is_some() || self.budget_evals.is_some() {
            params.budget_seconds = self.budget_sec;
            params.budget_evaluations = self.budget_evals;
        }
        if let Some(s) = &self.stacker {
            params.stacker = StackerKind::parse(s)?;
        }
        if let Some(b) = self.batch_size {
            params.batch_size = b;
        }
        if let Some(w) = self.window {
            params.window_capacity = w;
        }
        if self.preset_drifts.is_some() {
            params.preset_drifts = self.preset_drifts.clone();
        }
        if self.carry_over {
            params.carry_over_members = true;
        }
        Ok(params)
    }
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    stream: StreamArgs,
    #[command(flatten)]
    params: RunParamArgs,
    /// TOML file holding [params] (flags override file values)
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value = "results/run")]
    out: PathBuf,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    stream: StreamArgs,
    #[command(flatten)]
    params: RunParamArgs,
    /// Sweep axis: strategy | magnitude_level | time_budget | stacker_kind
    #[arg(long)]
    axis: String,
    /// Axis values, comma separated
    #[arg(long, value_delimiter = ',')]
    values: Vec<String>,
    /// Explicit seed list
    #[arg(long, value_delimiter = ',')]
    seeds: Option<Vec<u64>>,
    /// Shorthand for seeds 0..n
    #[arg(long)]
    n_seeds: Option<u64>,
    #[arg(long, default_value_t = 0)]
    master_seed: u64,
    /// TOML file holding a full sweep spec (flags override file values)
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, default_value = "results/sweep")]
    out: PathBuf,
    /// Worker pool size
    #[arg(long, default_value_t = 2)]
    jobs: usize,
}

#[derive(Args)]
struct DetectArgs {
    /// File with one outcome per line: 1/0 or true/false (1 = correct)
    #[arg(long)]
    input: PathBuf,
    #[arg(long, default_value_t = 0.95)]
    alpha: f64,
    #[arg(long, default_value_t = 30)]
    min_errors: usize,
    #[arg(long, default_value_t = 1000)]
    stabilization: usize,
}

#[derive(Args)]
struct ReportArgs {
    /// Directory of run-log CSVs (as written by run/sweep)
    #[arg(long)]
    logs: PathBuf,
    #[arg(long, default_value = "results/report")]
    out: PathBuf,
    #[arg(long, default_value = "accuracy across batches")]
    title: String,
}

fn is_usage_error(e: &driftml::Error) -> bool {
    matches!(
        e,
        driftml::Error::InvalidConfig(_)
            | driftml::Error::InvalidBudget(_)
            | driftml::Error::InvalidDriftSpec(_)
    )
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.command {
        Command::Generate(args) => cmd_generate(args),
        Command::Run(args) => cmd_run(args),
        Command::Sweep(args) => cmd_sweep(args),
        Command::Detect(args) => cmd_detect(args),
        Command::Report(args) => cmd_report(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            if is_usage_error(&e) {
                ExitCode::from(1)
            } else {
                ExitCode::from(2)
            }
        }
    }
}

fn cmd_generate(args: GenerateArgs) -> Result<(), driftml::Error> {
    let source = args.stream.source()?;
    let StreamSource::Generated { spec } = &source else {
        return Err(driftml::Error::InvalidConfig(
            "generate needs generator flags, not --stream".into(),
        ));
    };
    let drift = spec.drift_spec(spec.magnitude)?;
    let noise = driftml::generators::NoiseSpec::new(spec.noise);
    let (schema, instances, positions) =
        driftml::generators::generate_stream(spec.n, &drift, &noise, args.seed)?;
    if let Some(parent) = args.out.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)?;
        }
    }
    driftml::stream::export_csv(&args.out, &schema, &instances)?;
    let meta = StreamMeta {
        family: spec.family.to_string(),
        n_instances: spec.n,
        seed: args.seed,
        label_flip_rate: spec.noise,
        schema,
        drift_positions: positions,
        drift: toml::Value::try_from(&drift)
            .map_err(|e| driftml::Error::Toml(e.to_string()))?,
    };
    let meta_path = args.out.with_extension("meta.toml");
    meta.save(&meta_path)?;
    println!(
        "wrote {} instances to {} (metadata: {})",
        spec.n,
        args.out.display(),
        meta_path.display()
    );
    Ok(())
}

#[derive(serde::Deserialize)]
struct RunFileConfig {
    params: Option<RunParams>,
    seed: Option<u64>,
}

fn cmd_run(args: RunArgs) -> Result<(), driftml::Error> {
    let mut base = RunParams::default();
    let mut seed = args.seed;
    if let Some(path) = &args.config {
        let text = std::fs::read_to_string(path)?;
        let file: RunFileConfig =
            toml::from_str(&text).map_err(|e| driftml::Error::Toml(e.to_string()))?;
        if let Some(p) = file.params {
            base = p;
        }
        if let Some(s) = file.seed {
            seed = s;
        }
    }
    let mut params = args.params.merge(base)?;
    // periodic restart re-runs the search with every batch, which is far
    // more expensive, so it defaults to much larger batches
    if params.strategy == "PRS" && args.params.batch_size.is_none() && args.config.is_none() {
        params.batch_size = 20_000;
    }
    params.validate()?;
    let source = args.stream.source()?;
    let stream = prepare_stream(
        &source,
        None,
        params.batch_size,
        driftml::rng::mix(seed, "stream", 0),
    )?;
    let run_id = format!("{}-{}-seed{}", params.strategy, params.paradigm.name(), seed);
    let log = driftml::eval::execute_run(&stream, &params, seed, run_id)?;
    let path = log.write_with_meta(&args.out)?;
    println!(
        "run {}: {} batches, mean accuracy {:.4}, drifts {}, retrains {} -> {}",
        log.meta.run_id,
        log.rows.len(),
        log.mean_accuracy(),
        log.meta.drift_count,
        log.meta.retrain_count,
        path.display()
    );
    Ok(())
}

fn cmd_sweep(args: SweepArgs) -> Result<(), driftml::Error> {
    let spec = if let Some(path) = &args.config {
        let text = std::fs::read_to_string(path)?;
        let mut spec: SweepSpec =
            toml::from_str(&text).map_err(|e| driftml::Error::Toml(e.to_string()))?;
        // explicit flags override the file
        if !args.values.is_empty() {
            spec.values = args.values.clone();
            spec.axis = SweepAxis::parse(&args.axis)?;
        }
        if let Some(seeds) = &args.seeds {
            spec.seeds = seeds.clone();
        }
        spec
    } else {
        let seeds = match (&args.seeds, args.n_seeds) {
            (Some(s), _) => s.clone(),
            (None, Some(n)) => (0..n).collect(),
            (None, None) => vec![0, 1, 2],
        };
        SweepSpec {
            sweep_id: "sweep".into(),
            axis: SweepAxis::parse(&args.axis)?,
            values: args.values.clone(),
            seeds,
            master_seed: args.master_seed,
            stream: args.stream.source()?,
            base: args.params.merge(RunParams::default())?,
        }
    };
    let result = run_sweep(&spec, &args.out, args.jobs)?;
    println!(
        "sweep complete: {} runs ({} resumed), {} failures -> {}",
        result.logs.len(),
        result.resumed,
        result.failures.len(),
        args.out.display()
    );
    render_report(&result.logs, "sweep results", &args.out)?;
    for (id, err) in &result.failures {
        eprintln!("failed run {id}: {err}");
    }
    Ok(())
}

fn cmd_detect(args: DetectArgs) -> Result<(), driftml::Error> {
    let config = EddmConfig {
        alpha: args.alpha,
        min_errors: args.min_errors,
        stabilization_distances: args.stabilization,
    };
    config.validate()?;
    let text = std::fs::read_to_string(&args.input)?;
    let mut state = EddmState::new(config);
    let mut alarms = Vec::new();
    for (pos, line) in text.lines().enumerate() {
        let correct = match line.trim() {
            "1" | "true" => true,
            "0" | "false" => false,
            "" => continue,
            other => {
                return Err(driftml::Error::InvalidConfig(format!(
                    "line {}: expected 0/1/true/false, found {other:?}",
                    pos + 1
                )))
            }
        };
        if state.update(correct, pos)? == Signal::Drift {
            alarms.push(pos);
        }
    }
    if alarms.is_empty() {
        println!("no drift detected");
    } else {
        for a in &alarms {
            println!("drift at position {a}");
        }
    }
    Ok(())
}

fn cmd_report(args: ReportArgs) -> Result<(), driftml::Error> {
    let mut logs = Vec::new();
    for entry in std::fs::read_dir(&args.logs)? {
        let path = entry?.path();
        if path.extension().is_some_and(|e| e == "csv")
            && !path
                .file_name()
                .is_some_and(|n| {
                    let n = n.to_string_lossy();
                    n == "summary.csv" || n == "recoveries.csv" || n == "failures.csv"
                })
        {
            match RunLog::read_csv(&path) {
                Ok(log) => logs.push(log),
                Err(e) => eprintln!("skipping {}: {e}", path.display()),
            }
        }
    }
    if logs.is_empty() {
        return Err(driftml::Error::InvalidConfig(format!(
            "no run logs found under {}",
            args.logs.display()
        )));
    }
    logs.sort_by(|a, b| a.meta.run_id.cmp(&b.meta.run_id));
    render_report(&logs, &args.title, &args.out)?;
    println!("report for {} runs -> {}", logs.len(), args.out.display());
    Ok(())
}
