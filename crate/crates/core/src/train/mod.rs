//! Training runs: batching, optimisation, periodic probes and checkpoints.

pub mod batch;
pub mod config;
pub mod run;

pub use batch::{assemble_batch, Batch};
pub use config::{Preset, TrainConfig};
pub use run::{probe_set, resume_run, teacher_forced_stats, train_run, MetricRow, RunRecord, TrainJob, METRICS_HEADER};
