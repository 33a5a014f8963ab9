//! Benchmark harness for tree-pyramid adaptive importance sampling.
//!
//! Runs a seeded matrix of methods, target families, dimensions and sample
//! budgets, and writes per-run metrics as CSV plus median/IQR SVG charts.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod experiment;
pub mod method;
pub mod report;

pub use experiment::{run_experiments, ExperimentOutput, ExperimentSpec, ResultRow, TargetRecord};
pub use method::{run_method, Method, RunMetrics, RunOptions};
pub use report::{emit_csv, emit_plots, emit_targets, CSV_HEADER};

#[derive(Debug, thiserror::Error)]
pub enum BenchError {
    #[error(transparent)]
    Sampler(#[from] tpais::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("config: {0}")]
    Config(#[from] toml::de::Error),
    #[error("unknown method `{0}`")]
    UnknownMethod(String),
    #[error("unknown target family `{0}`")]
    UnknownFamily(String),
    #[error("invalid experiment: {0}")]
    InvalidSpec(String),
    #[error("{0}")]
    Run(String),
}
