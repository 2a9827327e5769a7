//! Producer → consumer → collector benchmark pipeline.
//!
//! The producer feeds points into a bounded channel, the consumer runs the
//! engine and times only its own work, and the collector scores purity from
//! the assignments the consumer forwards. A single-threaded mode runs the
//! same steps inline.

use std::thread;
use std::time::{Duration, Instant};

use crossbeam_channel::{bounded, unbounded};
use serde::{Deserialize, Serialize};

use crate::controller::ReconfigRecord;
use crate::engine::{Engine, EngineOptions, EngineStats, Mode, SinkReason};
use crate::error::Result;
use crate::metrics::{PurityBuilder, PuritySeries};
use crate::types::{ClusterSnapshot, Configuration, Kinds, StreamPoint};

pub const DEFAULT_CHANNEL_CAPACITY: usize = 65_536;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PipelineOptions {
    /// Points per purity window.
    pub eval_window: usize,
    pub threaded: bool,
    /// Capacity of the producer → consumer channel.
    pub channel_capacity: usize,
}

impl Default for PipelineOptions {
    fn default() -> Self {
        PipelineOptions {
            eval_window: 1000,
            threaded: true,
            channel_capacity: DEFAULT_CHANNEL_CAPACITY,
        }
    }
}

/// One processed point as seen by the collector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AssignmentRecord {
    pub id: u64,
    pub label: Option<i64>,
    pub cluster: i64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SinkSummary {
    pub offset: u64,
    pub reason: SinkReason,
    pub centers: usize,
    pub weight: f64,
    pub outlier_weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineReport {
    pub mode: Mode,
    pub engine_options: EngineOptions,
    pub seed: u64,
    pub threaded: bool,
    pub points_processed: u64,
    /// Seconds the consumer spent processing, excluding waits on the input.
    pub consumer_elapsed: f64,
    pub throughput: Option<f64>,
    pub purity: PuritySeries,
    pub reconfigs: Vec<ReconfigRecord>,
    pub final_kinds: Kinds,
    pub final_snapshot: ClusterSnapshot,
    pub sinks: Vec<SinkSummary>,
    pub stats: EngineStats,
    pub warnings: Vec<String>,
    /// True when the stream or the engine stopped before the end of input.
    pub incomplete: bool,
    pub error: Option<String>,
    pub channel_capacity: usize,
    /// Largest backlog seen on the producer → consumer channel.
    pub max_queue_occupancy: usize,
    /// Largest backlog seen on the consumer → collector channel.
    pub max_collector_backlog: usize,
    pub collector_tuples: u64,
    #[serde(skip)]
    pub assignments: Vec<AssignmentRecord>,
}

enum Input {
    Point(StreamPoint),
    Failed(String),
    End,
}

enum Output {
    Assigned(AssignmentRecord),
    Done,
}

struct ConsumerResult {
    engine: Engine,
    elapsed: Duration,
    error: Option<String>,
    incomplete: bool,
    max_occupancy: usize,
    max_backlog: usize,
}

/// Runs `source` through an engine in `mode` and scores the result.
///
/// Configuration errors surface as `Err`. Failures while reading the
/// source or processing a point produce a report flagged incomplete, with
/// everything up to the failure.
pub fn run_pipeline<S>(
    source: S,
    mode: Mode,
    cfg: Configuration,
    engine_options: EngineOptions,
    options: PipelineOptions,
) -> Result<PipelineReport>
where
    S: IntoIterator<Item = Result<StreamPoint>>,
    S::IntoIter: Send,
{
    let seed = cfg.seed;
    let engine = Engine::new(mode, cfg, engine_options)?;
    let (consumer, series, log) = if options.threaded {
        run_threaded(source.into_iter(), engine, options)
    } else {
        run_inline(source.into_iter(), engine, options)
    };
    let ConsumerResult {
        engine,
        mut elapsed,
        mut error,
        incomplete,
        max_occupancy,
        max_backlog,
    } = consumer;
    let start = Instant::now();
    let output = engine.finish()?;
    elapsed += start.elapsed();
    let points = output.stats.points;
    let secs = elapsed.as_secs_f64();
    if error.is_none() && log.len() as u64 != points {
        error = Some(format!("collector saw {} of {points} points", log.len()));
    }
    Ok(PipelineReport {
        mode,
        engine_options,
        seed,
        threaded: options.threaded,
        points_processed: points,
        consumer_elapsed: secs,
        throughput: crate::metrics::throughput(points, secs).ok().filter(|_| points > 0),
        purity: series,
        reconfigs: output.reconfigs,
        final_kinds: output.final_kinds,
        final_snapshot: output.final_snapshot,
        sinks: output
            .sinks
            .iter()
            .map(|s| SinkSummary {
                offset: s.offset,
                reason: s.reason,
                centers: s.snapshot.len(),
                weight: s.snapshot.total_weight(),
                outlier_weight: s.snapshot.outlier_weight(),
            })
            .collect(),
        stats: output.stats,
        warnings: output.warnings,
        incomplete: incomplete || error.is_some(),
        error,
        channel_capacity: options.channel_capacity,
        max_queue_occupancy: max_occupancy,
        max_collector_backlog: max_backlog,
        collector_tuples: log.len() as u64,
        assignments: log,
    })
}

fn run_inline<I>(
    source: I,
    mut engine: Engine,
    options: PipelineOptions,
) -> (ConsumerResult, PuritySeries, Vec<AssignmentRecord>)
where
    I: Iterator<Item = Result<StreamPoint>>,
{
    let mut builder = PurityBuilder::new(options.eval_window);
    let mut log = Vec::new();
    let mut elapsed = Duration::ZERO;
    let mut error = None;
    for item in source {
        let p = match item {
            Ok(p) => p,
            Err(e) => {
                error = Some(e.to_string());
                break;
            }
        };
        let start = Instant::now();
        let cluster = engine.process(&p);
        elapsed += start.elapsed();
        match cluster {
            Ok(cluster) => {
                builder.push(p.label, cluster);
                log.push(AssignmentRecord {
                    id: p.id,
                    label: p.label,
                    cluster,
                });
            }
            Err(e) => {
                error = Some(e.to_string());
                break;
            }
        }
    }
    let incomplete = error.is_some();
    let result = ConsumerResult {
        engine,
        elapsed,
        error,
        incomplete,
        max_occupancy: 0,
        max_backlog: 0,
    };
    (result, builder.finish(), log)
}

fn run_threaded<I>(
    source: I,
    mut engine: Engine,
    options: PipelineOptions,
) -> (ConsumerResult, PuritySeries, Vec<AssignmentRecord>)
where
    I: Iterator<Item = Result<StreamPoint>> + Send,
{
    let (in_tx, in_rx) = bounded::<Input>(options.channel_capacity.max(1));
    let (out_tx, out_rx) = unbounded::<Output>();
    thread::scope(|scope| {
        scope.spawn(move || {
            for item in source {
                let msg = match item {
                    Ok(p) => Input::Point(p),
                    Err(e) => {
                        let _ = in_tx.send(Input::Failed(e.to_string()));
                        return;
                    }
                };
                if in_tx.send(msg).is_err() {
                    return;
                }
            }
            let _ = in_tx.send(Input::End);
        });

        let collector = scope.spawn(move || {
            let mut builder = PurityBuilder::new(options.eval_window);
            let mut log = Vec::new();
            for msg in out_rx {
                match msg {
                    Output::Assigned(rec) => {
                        builder.push(rec.label, rec.cluster);
                        log.push(rec);
                    }
                    Output::Done => break,
                }
            }
            (builder.finish(), log)
        });

        let mut elapsed = Duration::ZERO;
        let mut error = None;
        let mut incomplete = true;
        let (mut max_occupancy, mut max_backlog) = (0, 0);
        loop {
            max_occupancy = max_occupancy.max(in_rx.len());
            let msg = match in_rx.recv() {
                Ok(m) => m,
                Err(_) => break,
            };
            let p = match msg {
                Input::Point(p) => p,
                Input::Failed(e) => {
                    error = Some(e);
                    break;
                }
                Input::End => {
                    incomplete = false;
                    break;
                }
            };
            let start = Instant::now();
            let cluster = engine.process(&p);
            elapsed += start.elapsed();
            match cluster {
                Ok(cluster) => {
                    let rec = AssignmentRecord {
                        id: p.id,
                        label: p.label,
                        cluster,
                    };
                    let _ = out_tx.send(Output::Assigned(rec));
                    max_backlog = max_backlog.max(out_tx.len());
                }
                Err(e) => {
                    error = Some(e.to_string());
                    break;
                }
            }
        }
        // unblocks a producer stuck on a full channel
        drop(in_rx);
        let _ = out_tx.send(Output::Done);
        let (series, log) = collector.join().expect("collector thread panicked");
        let result = ConsumerResult {
            engine,
            elapsed,
            error,
            incomplete,
            max_occupancy,
            max_backlog,
        };
        (result, series, log)
    })
}
