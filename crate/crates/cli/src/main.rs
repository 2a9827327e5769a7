//! `streamclust`: run the clustering engine on a generated or CSV stream and
//! write machine-readable results.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand, ValueEnum};
use flate2::write::GzEncoder;
use flate2::Compression;

use streamclust::datagen::{
    gen_dim, gen_eds, gen_ods, open_csv, CsvOptions, DimConfig, EdsConfig, LabelColumn, OdsConfig,
};
use streamclust::pipeline::{run_pipeline, PipelineOptions, PipelineReport};
use streamclust::{
    Configuration, EngineOptions, Kinds, Mode, Objective, ReconfigRecord, StreamCharacteristics, StreamPoint,
};

#[derive(Parser, Debug)]
#[command(
    name = "streamclust",
    version,
    about = "Self-optimizing stream clustering benchmark runner"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run one stream through the engine and write report.json, purity.csv,
    /// reconfig.csv and assignments.csv.gz.
    Run(RunArgs),
    /// Repeat a run for each value of one threshold and write sweep.csv.
    Sweep(SweepArgs),
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum Generator {
    Eds,
    Ods,
    Dim,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
#[value(rename_all = "snake_case")]
enum SweepParam {
    DistThreshold,
    QueueCapacity,
    VarianceThreshold,
}

#[derive(Args, Debug, Clone)]
#[group(id = "source", required = true, multiple = false)]
struct SourceArgs {
    /// Synthetic workload to generate.
    #[arg(long = "gen", value_enum)]
    generator: Option<Generator>,
    /// CSV file to read instead of generating.
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Args, Debug, Clone)]
#[group(id = "mode", required = true, multiple = false)]
struct ModeArgs {
    /// Self-optimize for this objective.
    #[arg(long)]
    objective: Option<Objective>,
    /// Fixed structure,window,outlier,refine combination, e.g. grids,sliding,none,none.
    #[arg(long)]
    fixed: Option<Kinds>,
}

#[derive(Args, Debug, Clone)]
struct RunArgs {
    #[command(flatten)]
    source: SourceArgs,
    #[command(flatten)]
    mode: ModeArgs,
    /// Keep the initial design choices (detection is still logged).
    #[arg(long)]
    no_selection: bool,
    /// Start blank structures on reconfiguration instead of migrating.
    #[arg(long)]
    no_migration: bool,
    /// Seed for generators and randomized structures.
    #[arg(long, env = "STREAMCLUST_SEED", default_value_t = 0)]
    seed: u64,
    /// Points per purity window.
    #[arg(long, default_value_t = 1000)]
    window: usize,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Run producer, consumer and collector on one thread.
    #[arg(long)]
    single_thread: bool,

    /// Generated stream length (per segment for dim).
    #[arg(long, help_heading = "Generator")]
    points: Option<usize>,
    /// Dimensionality for eds and ods.
    #[arg(long, help_heading = "Generator")]
    dim: Option<usize>,
    /// Comma-separated dimensions for dim, e.g. 20,40,60.
    #[arg(long, value_delimiter = ',', help_heading = "Generator")]
    dims: Option<Vec<usize>>,
    /// Initial mixture components (classes for dim).
    #[arg(long, help_heading = "Generator")]
    clusters: Option<usize>,

    /// Label column: none, first, last or a zero-based index.
    #[arg(long, default_value = "last", help_heading = "CSV")]
    label_column: LabelColumn,
    /// Field separator.
    #[arg(long, default_value_t = ',', help_heading = "CSV")]
    delimiter: char,
    /// Accept rows of differing dimensionality; the engine reinitializes at each change.
    #[arg(long, help_heading = "CSV")]
    dim_markers: bool,

    #[command(flatten)]
    thresholds: ThresholdArgs,
}

#[derive(Args, Debug, Clone, Default)]
#[command(next_help_heading = "Thresholds")]
struct ThresholdArgs {
    /// Points per detection batch.
    #[arg(long)]
    queue_capacity: Option<usize>,
    /// Dimensions above which a point counts as high-dimensional.
    #[arg(long)]
    dim_threshold: Option<usize>,
    /// Distance from earlier batch means beyond which a sample counts as an outlier.
    #[arg(long)]
    dist_threshold: Option<f64>,
    /// Batch variance above which the stream counts as frequently evolving.
    #[arg(long)]
    variance_threshold: Option<f64>,
    /// Distance used by the outlier mechanism (defaults to --dist-threshold).
    #[arg(long)]
    outlier_distance: Option<f64>,
    /// Weight at which a cluster counts as dense.
    #[arg(long)]
    density_threshold: Option<f64>,
    /// Ticks without updates after which a sparse cluster is inactive.
    #[arg(long)]
    timer_threshold: Option<f64>,
    /// Points between landmarks.
    #[arg(long)]
    landmark_period: Option<usize>,
    /// Sliding window length in points.
    #[arg(long)]
    sliding_size: Option<usize>,
    /// Damped window decay rate.
    #[arg(long)]
    lambda: Option<f64>,
    /// Damped window initial weight multiplier.
    #[arg(long)]
    alpha: Option<f64>,
    /// Grid cell side; also scales the other structures' radii.
    #[arg(long)]
    cell_len: Option<f64>,
    /// Cluster count hint for refinement and AMSketch.
    #[arg(long)]
    k: Option<usize>,
}

#[derive(Args, Debug)]
struct SweepArgs {
    #[command(flatten)]
    run: RunArgs,
    /// Threshold to vary.
    #[arg(long, value_enum)]
    param: SweepParam,
    /// Comma-separated values, one run each.
    #[arg(long, value_delimiter = ',', required = true, num_args = 1..)]
    values: Vec<f64>,
}

/// Failure classes mapped to exit codes.
enum Failure {
    Config(String),
    Runtime(anyhow::Error),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        match e.downcast_ref::<streamclust::Error>() {
            Some(se) if se.is_config() => Failure::Config(format!("{e:#}")),
            _ => Failure::Runtime(e),
        }
    }
}

impl From<streamclust::Error> for Failure {
    fn from(e: streamclust::Error) -> Self {
        Failure::from(anyhow::Error::from(e))
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(args) => cmd_run(&args),
        Command::Sweep(args) => cmd_sweep(&args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn configuration(args: &RunArgs) -> Result<(Mode, Configuration), Failure> {
    let (mode, kinds) = match (args.mode.objective, args.mode.fixed) {
        (Some(o), None) => (
            Mode::SelfOptimizing(o),
            streamclust::select(o, StreamCharacteristics::default()),
        ),
        (None, Some(k)) => (Mode::Fixed(k), k),
        _ => return Err(Failure::Config("give exactly one of --objective and --fixed".into())),
    };
    if matches!(mode, Mode::Fixed(_)) && (args.no_selection || args.no_migration) {
        return Err(Failure::Config(
            "--no-selection and --no-migration apply to --objective runs".into(),
        ));
    }
    let mut cfg = Configuration::new(kinds);
    cfg.seed = args.seed;
    let t = &args.thresholds;
    let th = &mut cfg.thresholds;
    macro_rules! set {
        ($src:expr => $dst:expr) => {
            if let Some(v) = $src {
                $dst = v;
            }
        };
    }
    set!(t.queue_capacity => th.queue_capacity);
    set!(t.dim_threshold => th.dim_threshold);
    set!(t.dist_threshold => th.dist_threshold);
    set!(t.variance_threshold => th.variance_threshold);
    set!(t.density_threshold => th.density_threshold);
    set!(t.timer_threshold => th.timer_threshold);
    set!(t.landmark_period => th.landmark_period);
    set!(t.sliding_size => th.sliding_size);
    set!(t.lambda => th.decay.lambda);
    set!(t.alpha => th.decay.alpha);
    set!(t.cell_len => cfg.structure.cell_len);
    th.outlier_distance = t.outlier_distance;
    cfg.k_hint = t.k;
    if args.window == 0 {
        return Err(Failure::Config("--window must be at least 1".into()));
    }
    cfg.validate()?;
    Ok((mode, cfg))
}

type Source = Box<dyn Iterator<Item = streamclust::Result<StreamPoint>> + Send>;

fn source(args: &RunArgs) -> Result<Source, Failure> {
    if let Some(path) = &args.source.csv {
        if !args.delimiter.is_ascii() {
            return Err(Failure::Config("--delimiter must be a single ASCII character".into()));
        }
        let opts = CsvOptions {
            label: args.label_column,
            delimiter: args.delimiter as u8,
            allow_mixed_dims: args.dim_markers,
        };
        let stream = open_csv(path, &opts)
            .map_err(anyhow::Error::from)
            .with_context(|| format!("cannot open {}", path.display()))?;
        return Ok(Box::new(stream));
    }
    let seed = args.seed;
    let stream = match args.source.generator.expect("clap requires a source") {
        Generator::Eds => {
            let d = EdsConfig::default();
            gen_eds(&EdsConfig {
                points: args.points.unwrap_or(d.points),
                dim: args.dim.unwrap_or(d.dim),
                clusters: args.clusters.unwrap_or(d.clusters),
                seed,
                ..d
            })?
        }
        Generator::Ods => {
            let d = OdsConfig::default();
            gen_ods(&OdsConfig {
                points: args.points.unwrap_or(d.points),
                dim: args.dim.unwrap_or(d.dim),
                clusters: args.clusters.unwrap_or(d.clusters),
                seed,
                ..d
            })?
        }
        Generator::Dim => {
            let d = DimConfig::default();
            gen_dim(&DimConfig {
                dims: args.dims.clone().unwrap_or(d.dims.clone()),
                points_per_segment: args.points.unwrap_or(d.points_per_segment),
                classes: args.clusters.unwrap_or(d.classes),
                seed,
                ..d
            })?
        }
    };
    Ok(Box::new(stream.into_source()))
}

fn execute(args: &RunArgs, mode: Mode, cfg: Configuration) -> Result<PipelineReport, Failure> {
    let options = PipelineOptions {
        eval_window: args.window,
        threaded: !args.single_thread,
        ..PipelineOptions::default()
    };
    let engine_options = EngineOptions {
        no_selection: args.no_selection,
        no_migration: args.no_migration,
    };
    let src = source(args)?;
    Ok(run_pipeline(src, mode, cfg, engine_options, options)?)
}

fn cmd_run(args: &RunArgs) -> Result<(), Failure> {
    let (mode, cfg) = configuration(args)?;
    let report = execute(args, mode, cfg)?;
    write_artifacts(&args.out, &report)?;
    eprintln!(
        "{} points, global purity {}, throughput {}",
        report.points_processed,
        report.purity.global.map_or("n/a".into(), |p| format!("{p:.4}")),
        report.throughput.map_or("n/a".into(), |t| format!("{t:.0} pts/s")),
    );
    if report.incomplete {
        return Err(Failure::Runtime(anyhow::anyhow!(
            "run incomplete: {}",
            report.error.as_deref().unwrap_or("stream ended early")
        )));
    }
    Ok(())
}

fn cmd_sweep(args: &SweepArgs) -> Result<(), Failure> {
    let (mode, base) = configuration(&args.run)?;
    fs::create_dir_all(&args.run.out).with_context(|| format!("cannot create {}", args.run.out.display()))?;
    let path = args.run.out.join("sweep.csv");
    let mut w = csv::Writer::from_path(&path).with_context(|| format!("cannot write {}", path.display()))?;
    w.write_record(["value", "global_purity", "throughput", "status"])
        .map_err(anyhow::Error::from)?;
    for &value in &args.values {
        let mut cfg = base.clone();
        let row = match apply_sweep_value(&mut cfg, args.param, value) {
            Err(msg) => [
                value.to_string(),
                String::new(),
                String::new(),
                format!("config error: {msg}"),
            ],
            Ok(()) => match execute(&args.run, mode, cfg) {
                Ok(r) => [
                    value.to_string(),
                    r.purity.global.map(|p| p.to_string()).unwrap_or_default(),
                    r.throughput.map(|t| t.to_string()).unwrap_or_default(),
                    match &r.error {
                        Some(e) => format!("incomplete: {e}"),
                        None if r.incomplete => "incomplete".into(),
                        None => "ok".into(),
                    },
                ],
                Err(Failure::Config(msg)) => [
                    value.to_string(),
                    String::new(),
                    String::new(),
                    format!("config error: {msg}"),
                ],
                Err(Failure::Runtime(e)) => [value.to_string(), String::new(), String::new(), format!("error: {e:#}")],
            },
        };
        eprintln!("{:?} = {value}: {}", args.param, row[3]);
        w.write_record(&row).map_err(anyhow::Error::from)?;
        w.flush().map_err(anyhow::Error::from)?;
    }
    Ok(())
}

fn apply_sweep_value(cfg: &mut Configuration, param: SweepParam, value: f64) -> Result<(), String> {
    match param {
        SweepParam::DistThreshold => cfg.thresholds.dist_threshold = value,
        SweepParam::VarianceThreshold => cfg.thresholds.variance_threshold = value,
        SweepParam::QueueCapacity => {
            if value.fract() != 0.0 || value < 0.0 {
                return Err(format!("queue capacity must be a whole number, got {value}"));
            }
            cfg.thresholds.queue_capacity = value as usize;
        }
    }
    cfg.validate().map_err(|e| e.to_string())
}

fn flag_names(f: &StreamCharacteristics) -> String {
    let names: Vec<&str> = [
        (f.high_dimension, "high_dimension"),
        (f.frequent_evolution, "frequent_evolution"),
        (f.many_outliers, "many_outliers"),
    ]
    .iter()
    .filter(|(on, _)| *on)
    .map(|(_, n)| *n)
    .collect();
    if names.is_empty() {
        "none".into()
    } else {
        names.join("|")
    }
}

fn write_artifacts(dir: &Path, report: &PipelineReport) -> anyhow::Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;

    let json = BufWriter::new(File::create(dir.join("report.json"))?);
    serde_json::to_writer_pretty(json, report).context("writing report.json")?;

    let mut purity = csv::Writer::from_path(dir.join("purity.csv"))?;
    purity.write_record(["window_index", "purity"])?;
    for w in &report.purity.windows {
        purity.write_record([w.index.to_string(), w.purity.to_string()])?;
    }
    purity.flush()?;

    let mut reconfig = csv::Writer::from_path(dir.join("reconfig.csv"))?;
    reconfig.write_record(["offset", "flags", "old_cfg", "new_cfg"])?;
    for r in &report.reconfigs {
        let ReconfigRecord {
            offset,
            flags,
            old,
            new,
            ..
        } = r;
        reconfig.write_record([offset.to_string(), flag_names(flags), old.to_string(), new.to_string()])?;
    }
    reconfig.flush()?;

    let gz = GzEncoder::new(File::create(dir.join("assignments.csv.gz"))?, Compression::default());
    let mut assignments = csv::Writer::from_writer(gz);
    assignments.write_record(["id", "label", "cluster_id"])?;
    for a in &report.assignments {
        assignments.write_record([
            a.id.to_string(),
            a.label.map(|l| l.to_string()).unwrap_or_default(),
            a.cluster.to_string(),
        ])?;
    }
    let gz = assignments.into_inner().map_err(|e| anyhow::anyhow!("{}", e.error()))?;
    gz.finish()?.flush()?;
    Ok(())
}
