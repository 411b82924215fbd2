//! Self-describing JSONL result records.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::config::{sha256_hex, ProblemConfig};
use crate::error::{BenchError, ExitStatus};
use crate::scenario::{self, Outcome};

pub const RECORD_FORMAT: &str = "alspg-bench/result";
pub const RECORD_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CounterRecord {
    pub n_f: usize,
    pub n_grad: usize,
    pub n_jac: usize,
}

/// Build stamp of the binary that produced a record.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Environment {
    pub package: String,
    pub version: String,
    pub profile: String,
    pub arch: String,
    pub os: String,
}

impl Environment {
    pub fn current() -> Self {
        Self {
            package: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            profile: if cfg!(debug_assertions) { "debug" } else { "release" }.to_string(),
            arch: std::env::consts::ARCH.to_string(),
            os: std::env::consts::OS.to_string(),
        }
    }
}

/// One solved config. Non-finite numbers are stored as `null`.
///
/// `record_digest` hashes every field except itself and `wall_time_s`, so
/// two runs of the same config and seed have equal digests.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRecord {
    pub format: String,
    pub version: u32,
    pub name: String,
    /// Suite summary group (absent for single runs).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub group: Option<String>,
    pub config_digest: String,
    pub kind: String,
    pub solver: String,
    pub seed: Option<u64>,
    pub termination: String,
    pub converged: bool,
    pub iterations: usize,
    pub counters: CounterRecord,
    pub final_objective: Option<f64>,
    pub final_residual: Option<f64>,
    pub message: Option<String>,
    pub notes: Vec<String>,
    pub metrics: BTreeMap<String, Option<f64>>,
    /// Equal-length series, one entry per iteration (MPC: per step).
    pub traces: BTreeMap<String, Vec<Option<f64>>>,
    pub solution: BTreeMap<String, Vec<Option<f64>>>,
    /// The config as run (canonical form, after command-line overrides).
    pub config: serde_json::Value,
    pub environment: Environment,
    pub record_digest: String,
    pub wall_time_s: f64,
}

fn finite(x: f64) -> Option<f64> {
    x.is_finite().then_some(x)
}

fn finite_all(xs: &[f64]) -> Vec<Option<f64>> {
    xs.iter().copied().map(finite).collect()
}

impl ResultRecord {
    pub fn new(config: &ProblemConfig, outcome: &Outcome) -> Self {
        let mut record = Self {
            format: RECORD_FORMAT.to_string(),
            version: RECORD_VERSION,
            name: config.display_name(),
            group: None,
            config_digest: config.digest(),
            kind: config.kind.as_str().to_string(),
            solver: config.solver.as_str().to_string(),
            seed: config.seed,
            termination: outcome.termination.clone(),
            converged: outcome.converged,
            iterations: outcome.iterations,
            counters: CounterRecord {
                n_f: outcome.counters.n_f,
                n_grad: outcome.counters.n_grad,
                n_jac: outcome.counters.n_jac,
            },
            final_objective: outcome.final_objective.and_then(finite),
            final_residual: finite(outcome.final_residual),
            message: outcome.message.clone(),
            notes: outcome.notes.clone(),
            metrics: outcome.metrics.iter().map(|(k, v)| (k.clone(), finite(*v))).collect(),
            traces: outcome.traces.iter().map(|(k, v)| (k.clone(), finite_all(v))).collect(),
            solution: outcome.solution.iter().map(|(k, v)| (k.clone(), finite_all(v))).collect(),
            config: serde_json::to_value(config).expect("config serializes"),
            environment: Environment::current(),
            record_digest: String::new(),
            wall_time_s: outcome.wall_time.as_secs_f64(),
        };
        record.record_digest = record.compute_digest();
        record
    }

    /// Digest of the deterministic part of the record.
    pub fn compute_digest(&self) -> String {
        let mut value = serde_json::to_value(self).expect("record serializes");
        let map = value.as_object_mut().expect("record is an object");
        map.remove("record_digest");
        map.remove("wall_time_s");
        sha256_hex(value.to_string().as_bytes())
    }

    pub fn metric(&self, name: &str) -> Option<f64> {
        self.metrics.get(name).copied().flatten()
    }

    pub fn exit_status(&self) -> ExitStatus {
        if self.converged {
            ExitStatus::Ok
        } else {
            ExitStatus::NonConverged
        }
    }

    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("record serializes")
    }

    pub fn from_json_line(line: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(line)
    }
}

/// Runs one config and builds its record.
pub fn run_config(config: &ProblemConfig) -> Result<ResultRecord, BenchError> {
    let outcome = scenario::run(config)?;
    Ok(ResultRecord::new(config, &outcome))
}

/// File name for a record: the config name with path-hostile characters
/// replaced.
pub fn record_file_name(name: &str) -> String {
    let safe: String = name
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || matches!(c, '-' | '_' | '.') { c } else { '_' })
        .collect();
    format!("{safe}.jsonl")
}

/// Writes `records` as JSON lines to `path`.
pub fn write_jsonl(path: &Path, records: &[ResultRecord]) -> Result<(), BenchError> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| BenchError::io(parent.display(), e))?;
    }
    let mut file = fs::File::create(path).map_err(|e| BenchError::io(path.display(), e))?;
    for r in records {
        writeln!(file, "{}", r.to_json_line()).map_err(|e| BenchError::io(path.display(), e))?;
    }
    Ok(())
}

pub fn read_jsonl(path: &Path) -> Result<Vec<ResultRecord>, BenchError> {
    let text = fs::read_to_string(path).map_err(|e| BenchError::io(path.display(), e))?;
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .enumerate()
        .map(|(i, l)| ResultRecord::from_json_line(l).map_err(|e| BenchError::io(format!("{}:{}", path.display(), i + 1), e)))
        .collect()
}

/// Writes one record to `dir/<name>-<solver>.jsonl` and returns the path.
pub fn write_record(dir: &Path, record: &ResultRecord) -> Result<PathBuf, BenchError> {
    let path = dir.join(record_file_name(&format!("{}-{}", record.name, record.solver)));
    write_jsonl(&path, std::slice::from_ref(record))?;
    Ok(path)
}
