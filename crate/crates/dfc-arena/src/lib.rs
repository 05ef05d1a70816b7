//! IO companion to `dfc-core`: checkpoint and replay file formats, run
//! configuration, JSONL metrics logging, report rendering, and the CLI.

pub mod checkpoint;
pub mod cli;
pub mod config;
pub mod metrics;
pub mod replay;
pub mod report;

pub use checkpoint::{load_checkpoint, save_checkpoint, CheckpointError};
pub use config::{ConfigError, RunConfig};
pub use metrics::{read_metrics, MetricsRecord, MetricsWriter, RunObserver};
pub use replay::{read_replay, write_replay, ReplayStep};
pub use report::{metrics_to_csv, wdl_table};
