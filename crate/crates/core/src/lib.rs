//! Self-optimizing data stream clustering.
//!
//! A stream is summarized online by one of six structures, under one of three
//! window models, optionally filtered by an outlier mechanism and refined by a
//! batch clusterer. The [`Engine`] can run a fixed combination or detect
//! stream characteristics at runtime and switch combinations on the fly.
//! [`pipeline`] wraps the engine in a producer/consumer/collector benchmark.

// `!(x > 0.0)` is used on purpose so NaN fails validation
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod controller;
pub mod datagen;
pub mod engine;
pub mod error;
pub mod metrics;
pub mod outlier;
pub mod pipeline;
pub mod refine;
pub mod structures;
pub mod types;
pub mod window;

pub use controller::{detect, migrate, select, DetectionQueue, DetectionStats, ReconfigRecord};
pub use engine::{Engine, EngineOptions, EngineOutput, EngineStats, Mode, SinkRecord};
pub use error::{Error, Result};
pub use metrics::{purity, throughput, PuritySeries, WindowPurity};
pub use pipeline::{run_pipeline, PipelineOptions, PipelineReport};
pub use structures::{build, init_from_snapshot, ClusterAssignment, Summary};
pub use types::*;
