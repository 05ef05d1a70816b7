//! Metrics logging: one JSON line per training iteration, plus the
//! checkpoint-writing observer that the training loops drive.
//!
//! Records are deterministic for a fixed config and master seed: BTreeMap
//! fields serialize in key order and `duration_secs` stays 0.0 unless
//! timing capture is explicitly enabled (timings are inherently
//! non-reproducible, and reproducible logs are the stronger contract).

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use dfc_core::orchestrate::DfcObserver;
use dfc_core::policy::PolicyParams;
use dfc_core::train::{ConquerObserver, IterationMetrics};
use serde::{Deserialize, Serialize};

use crate::checkpoint::save_checkpoint;

/// Version tag carried by every metrics record.
pub const METRICS_SCHEMA: u32 = 1;

#[derive(Debug, thiserror::Error)]
pub enum MetricsError {
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {source}")]
    Parse {
        line: usize,
        #[source]
        source: serde_json::Error,
    },
    #[error("line {line}: unsupported schema version {found}")]
    Schema { line: usize, found: u32 },
}

fn io_err(path: &Path, source: std::io::Error) -> MetricsError {
    MetricsError::Io {
        path: path.display().to_string(),
        source,
    }
}

/// One metrics line: schema tag, run and phase identity, and the iteration
/// metrics inline.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MetricsRecord {
    pub schema: u32,
    pub run_id: String,
    /// Training phase this iteration belongs to ("conquer" for plain runs,
    /// phase labels for dfc pipelines).
    pub phase: String,
    #[serde(flatten)]
    pub metrics: IterationMetrics,
}

/// Append-only JSONL metrics writer.
pub struct MetricsWriter {
    path: PathBuf,
    out: BufWriter<File>,
}

impl MetricsWriter {
    pub fn create(path: &Path) -> Result<Self, MetricsError> {
        let file = File::create(path).map_err(|e| io_err(path, e))?;
        Ok(MetricsWriter {
            path: path.to_path_buf(),
            out: BufWriter::new(file),
        })
    }

    pub fn append(&mut self, record: &MetricsRecord) -> Result<(), MetricsError> {
        let line = serde_json::to_string(record).expect("metrics records always serialize");
        writeln!(self.out, "{line}").map_err(|e| io_err(&self.path, e))?;
        self.out.flush().map_err(|e| io_err(&self.path, e))
    }
}

/// Read a metrics log back, validating the schema tag.
pub fn read_metrics(path: &Path) -> Result<Vec<MetricsRecord>, MetricsError> {
    let file = File::open(path).map_err(|e| io_err(path, e))?;
    let reader = BufReader::new(file);
    let mut out = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| io_err(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let record: MetricsRecord =
            serde_json::from_str(&line).map_err(|source| MetricsError::Parse {
                line: idx + 1,
                source,
            })?;
        if record.schema != METRICS_SCHEMA {
            return Err(MetricsError::Schema {
                line: idx + 1,
                found: record.schema,
            });
        }
        out.push(record);
    }
    Ok(out)
}

/// Training observer that writes the metrics log and the per-iteration and
/// best checkpoints (`{run_id}_{t}.ckpt`, `{run_id}_best.ckpt`).
pub struct RunObserver {
    run_id: String,
    out_dir: PathBuf,
    writer: MetricsWriter,
    /// Record wall-clock durations in the log; off by default so identical
    /// configs and seeds produce byte-identical logs.
    record_timings: bool,
    last_tick: Instant,
    phase: String,
    /// First error encountered inside observer callbacks, surfaced at
    /// `finish`.
    failure: Option<String>,
}

impl RunObserver {
    pub fn create(
        out_dir: &Path,
        run_id: &str,
        metrics_path: &Path,
        record_timings: bool,
    ) -> Result<Self, MetricsError> {
        std::fs::create_dir_all(out_dir).map_err(|e| io_err(out_dir, e))?;
        Ok(RunObserver {
            run_id: run_id.to_string(),
            out_dir: out_dir.to_path_buf(),
            writer: MetricsWriter::create(metrics_path)?,
            record_timings,
            last_tick: Instant::now(),
            phase: "conquer".to_string(),
            failure: None,
        })
    }

    pub fn set_phase(&mut self, phase: &str) {
        self.phase = phase.to_string();
        self.last_tick = Instant::now();
    }

    /// Surface any IO failure that happened during callbacks.
    pub fn finish(self) -> Result<(), String> {
        match self.failure {
            Some(e) => Err(e),
            None => Ok(()),
        }
    }

    fn record(&mut self, metrics: &IterationMetrics, updated: &PolicyParams, best: &PolicyParams) {
        let mut metrics = metrics.clone();
        metrics.duration_secs = if self.record_timings {
            let elapsed = self.last_tick.elapsed().as_secs_f64();
            self.last_tick = Instant::now();
            elapsed
        } else {
            0.0
        };
        let prefix = if self.phase == "conquer" {
            self.run_id.clone()
        } else {
            format!("{}_{}", self.run_id, self.phase)
        };
        let iteration = metrics.iteration;
        let record = MetricsRecord {
            schema: METRICS_SCHEMA,
            run_id: self.run_id.clone(),
            phase: self.phase.clone(),
            metrics,
        };
        let result = self
            .writer
            .append(&record)
            .map_err(|e| e.to_string())
            .and_then(|_| {
                let path = self.out_dir.join(format!("{prefix}_{iteration}.ckpt"));
                save_checkpoint(&path, updated, iteration as u64).map_err(|e| e.to_string())
            })
            .and_then(|_| {
                if record.metrics.best_updated {
                    let path = self.out_dir.join(format!("{prefix}_best.ckpt"));
                    save_checkpoint(&path, best, iteration as u64).map_err(|e| e.to_string())
                } else {
                    Ok(())
                }
            });
        if let (Err(e), None) = (result, &self.failure) {
            self.failure = Some(e);
        }
    }
}

impl ConquerObserver for RunObserver {
    fn on_iteration(&mut self, m: &IterationMetrics, updated: &PolicyParams, best: &PolicyParams) {
        self.record(m, updated, best);
    }
}

impl DfcObserver for RunObserver {
    fn begin_phase(&mut self, label: &str) {
        self.set_phase(label);
    }

    fn on_iteration(
        &mut self,
        label: &str,
        m: &IterationMetrics,
        updated: &PolicyParams,
        best: &PolicyParams,
    ) {
        debug_assert_eq!(label, self.phase);
        self.record(m, updated, best);
    }

    fn end_phase(&mut self, phase: &dfc_core::orchestrate::DfcPhase, params: &PolicyParams) {
        let path = self.out_dir.join(format!("{}_{}.ckpt", self.run_id, phase.label));
        if let Err(e) = save_checkpoint(&path, params, 0) {
            if self.failure.is_none() {
                self.failure = Some(e.to_string());
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeMap;

    fn sample_metrics(iteration: u32) -> IterationMetrics {
        let mut wrc = BTreeMap::new();
        wrc.insert("tictactoe".to_string(), 0.5);
        IterationMetrics {
            iteration,
            wrc: wrc.clone(),
            gf: wrc.clone(),
            mean_steps: wrc.clone(),
            mean_reward: wrc,
            avg_wrc: 0.5,
            best_avg_wrc: 0.5,
            best_updated: iteration == 1,
            duration_secs: 0.0,
        }
    }

    #[test]
    fn metrics_round_trip_through_jsonl() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.jsonl");
        let mut writer = MetricsWriter::create(&path).unwrap();
        for t in 1..=3 {
            writer
                .append(&MetricsRecord {
                    schema: METRICS_SCHEMA,
                    run_id: "run0".into(),
                    phase: "conquer".into(),
                    metrics: sample_metrics(t),
                })
                .unwrap();
        }
        drop(writer);
        let records = read_metrics(&path).unwrap();
        assert_eq!(records.len(), 3);
        assert_eq!(records[2].metrics.iteration, 3);
        assert_eq!(records[0].metrics.wrc["tictactoe"], 0.5);
    }

    #[test]
    fn schema_mismatch_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.jsonl");
        let mut line = serde_json::to_value(MetricsRecord {
            schema: 99,
            run_id: "x".into(),
            phase: "conquer".into(),
            metrics: sample_metrics(1),
        })
        .unwrap();
        line["schema"] = serde_json::json!(99);
        std::fs::write(&path, format!("{line}\n")).unwrap();
        assert!(matches!(
            read_metrics(&path),
            Err(MetricsError::Schema { found: 99, .. })
        ));
    }

    #[test]
    fn observer_writes_checkpoints_and_log() {
        let dir = tempfile::tempdir().unwrap();
        let metrics_path = dir.path().join("run0.jsonl");
        let mut obs = RunObserver::create(dir.path(), "run0", &metrics_path, false).unwrap();
        let params = dfc_core::policy::init_params(8, 0);
        ConquerObserver::on_iteration(&mut obs, &sample_metrics(1), &params, &params);
        ConquerObserver::on_iteration(&mut obs, &sample_metrics(2), &params, &params);
        obs.finish().unwrap();
        assert!(dir.path().join("run0_1.ckpt").exists());
        assert!(dir.path().join("run0_2.ckpt").exists());
        assert!(dir.path().join("run0_best.ckpt").exists());
        assert_eq!(read_metrics(&metrics_path).unwrap().len(), 2);
    }
}
