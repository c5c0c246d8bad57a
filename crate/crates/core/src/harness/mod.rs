//! Experiment plumbing: datasets, configuration, runs, logs and diagnostics.

mod audit;
mod config;
mod edge_stream;
mod experiment;
mod log;
mod stats;
mod synthetic;

pub use audit::{audit, audit_dir, AuditReport};
pub use config::{
    DatasetConfig, ExperimentConfig, InteractionConfig, Method, Seeds, SyntheticConfig,
};
pub use edge_stream::{load_edge_stream, parse_edge_stream, write_edge_stream};
pub use experiment::{
    anytime_curve, execute, run_experiment, sweep, write_sweep, CurvePoint, RunOutput, SweepRow,
    CURVE_FILE, MANIFEST_FILE, STEP_LOG_FILE, SUMMARY_FILE, SWEEP_FILE,
};
pub use log::{read_step_log, read_summary, write_step_log, write_summary, SummaryRow};
pub use stats::{action_stats, ActionStats};
pub use synthetic::{gen_synthetic, SyntheticParams};
