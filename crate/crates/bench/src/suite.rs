//! Suites: many configs (optionally across solvers and seeds), run in
//! parallel, summarized per group as mean ± sample standard deviation.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{load_with_overrides, ProblemConfig, SolverKind};
use crate::error::{BenchError, ExitStatus, ValidationError};
use crate::record::{run_config, write_jsonl, ResultRecord};

pub const SUITE_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SuiteFile {
    pub version: u32,
    pub name: String,
    /// Run members concurrently (each member stays single-threaded).
    /// Turn off for timing studies.
    #[serde(default = "default_parallel")]
    pub parallel: bool,
    #[serde(default)]
    pub runs: Vec<SuiteRun>,
}

fn default_parallel() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SuiteRun {
    /// Config path, relative to the suite file.
    pub config: PathBuf,
    /// Run once per solver (default: the config's solver).
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub solvers: Vec<SolverKind>,
    /// Run once per seed (default: the config's seed).
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub seeds: Vec<u64>,
    /// Summary group prefix (default: the config name); the solver is
    /// appended.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub group: Option<String>,
}

/// One expanded member of a suite.
#[derive(Debug, Clone)]
pub struct Member {
    pub group: String,
    pub config: ProblemConfig,
}

/// A member that produced no record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MemberFailure {
    pub name: String,
    pub group: String,
    pub error: String,
    pub exit_code: i32,
}

impl SuiteFile {
    pub fn from_toml(text: &str) -> Result<Self, ValidationError> {
        let de = toml::Deserializer::parse(text).map_err(|e| ValidationError::new("", e.message().to_string()))?;
        let suite: Self = serde_path_to_error::deserialize(de)
            .map_err(|e| ValidationError::new(e.path().to_string(), e.into_inner().message().to_string()))?;
        if suite.version != SUITE_VERSION {
            return Err(ValidationError::new("version", format!("unsupported suite version {}", suite.version)));
        }
        if suite.runs.is_empty() {
            return Err(ValidationError::new("runs", "a suite must list at least one run"));
        }
        Ok(suite)
    }
}

/// Reads a suite and expands every run into members. Any invalid member
/// config invalidates the suite.
pub fn load_suite(path: &Path, seed: Option<u64>, solver: Option<SolverKind>) -> Result<(SuiteFile, Vec<Member>), BenchError> {
    let text = fs::read_to_string(path).map_err(|e| BenchError::io(path.display(), e))?;
    let suite = SuiteFile::from_toml(&text).map_err(|e| BenchError::validation(path.display().to_string(), e))?;
    let base = path.parent().unwrap_or(Path::new("."));
    let mut members = Vec::new();
    for (i, run) in suite.runs.iter().enumerate() {
        let config_path = base.join(&run.config);
        let config = load_with_overrides(&config_path, if run.seeds.is_empty() { seed } else { None }, solver).map_err(|e| match e {
            BenchError::Validation { source_name, error } => BenchError::validation(
                path.display().to_string(),
                ValidationError::new(format!("runs[{i}].config"), format!("{source_name}: {error}")),
            ),
            other => other,
        })?;
        let solvers = if solver.is_some() || run.solvers.is_empty() { vec![config.solver] } else { run.solvers.clone() };
        let seeds: Vec<Option<u64>> = if run.seeds.is_empty() { vec![config.seed] } else { run.seeds.iter().copied().map(Some).collect() };
        for &s in &solvers {
            for &seed in &seeds {
                let mut c = config.clone();
                c.solver = s;
                c.seed = seed;
                let mut name = c.display_name();
                if solvers.len() > 1 {
                    name = format!("{name}-{}", s.as_str());
                }
                if !run.seeds.is_empty() {
                    name = format!("{name}-s{}", seed.expect("listed"));
                }
                let group = format!("{}/{}", run.group.clone().unwrap_or_else(|| c.display_name()), s.as_str());
                c.name = Some(name);
                c.validate().map_err(|e| {
                    BenchError::validation(path.display().to_string(), ValidationError::new(format!("runs[{i}]"), e.to_string()))
                })?;
                members.push(Member { group, config: c });
            }
        }
    }
    Ok((suite, members))
}

/// Runs members in order (or in parallel with order preserved).
pub fn run_members(members: &[Member], parallel: bool) -> Vec<Result<ResultRecord, MemberFailure>> {
    let one = |m: &Member| {
        run_config(&m.config)
            .map(|mut r| {
                r.group = Some(m.group.clone());
                r.record_digest = r.compute_digest();
                r
            })
            .map_err(|e| MemberFailure {
            name: m.config.display_name(),
            group: m.group.clone(),
            error: e.to_string(),
            exit_code: e.exit_status().code(),
        })
    };
    if parallel {
        members.par_iter().map(one).collect()
    } else {
        members.iter().map(one).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stat {
    pub mean: f64,
    /// Sample standard deviation (0 for a single value).
    pub std: f64,
    pub count: usize,
}

impl Stat {
    /// `None` when no value is present.
    pub fn of(values: &[f64]) -> Option<Self> {
        let count = values.len();
        if count == 0 {
            return None;
        }
        let mean = values.iter().sum::<f64>() / count as f64;
        let std = if count > 1 {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (count - 1) as f64).sqrt()
        } else {
            0.0
        };
        Some(Self { mean, std, count })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupSummary {
    pub group: String,
    pub runs: usize,
    pub converged: usize,
    pub wall_time_s: Option<Stat>,
    pub n_f: Option<Stat>,
    pub n_grad: Option<Stat>,
    pub n_jac: Option<Stat>,
    pub iterations: Option<Stat>,
    pub final_objective: Option<Stat>,
    pub final_residual: Option<Stat>,
    /// Metrics present in at least one record of the group.
    pub metrics: std::collections::BTreeMap<String, Stat>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub suite: String,
    pub groups: Vec<GroupSummary>,
    pub failures: Vec<MemberFailure>,
    pub exit_code: i32,
}

/// Pure fold over records: recomputable from `records.jsonl`.
pub fn summarize(suite: &str, records: &[ResultRecord], failures: &[MemberFailure]) -> Summary {
    let group_of = |r: &ResultRecord| r.group.clone().unwrap_or_else(|| format!("{}/{}", r.name, r.solver));
    let mut order: Vec<String> = Vec::new();
    for r in records {
        let g = group_of(r);
        if !order.contains(&g) {
            order.push(g);
        }
    }
    let groups = order
        .iter()
        .map(|g| {
            let rs: Vec<&ResultRecord> = records.iter().filter(|r| &group_of(r) == g).collect();
            let stat = |f: &dyn Fn(&ResultRecord) -> Option<f64>| Stat::of(&rs.iter().filter_map(|r| f(r)).collect::<Vec<_>>());
            let mut metrics = std::collections::BTreeMap::new();
            for r in &rs {
                for k in r.metrics.keys() {
                    if !metrics.contains_key(k) {
                        if let Some(s) = stat(&|r: &ResultRecord| r.metric(k)) {
                            metrics.insert(k.clone(), s);
                        }
                    }
                }
            }
            GroupSummary {
                group: g.clone(),
                runs: rs.len(),
                converged: rs.iter().filter(|r| r.converged).count(),
                wall_time_s: stat(&|r| Some(r.wall_time_s)),
                n_f: stat(&|r| Some(r.counters.n_f as f64)),
                n_grad: stat(&|r| Some(r.counters.n_grad as f64)),
                n_jac: stat(&|r| Some(r.counters.n_jac as f64)),
                iterations: stat(&|r| Some(r.iterations as f64)),
                final_objective: stat(&|r| r.final_objective),
                final_residual: stat(&|r| r.final_residual),
                metrics,
            }
        })
        .collect();
    let worst = records
        .iter()
        .map(ResultRecord::exit_status)
        .chain(failures.iter().map(|f| if f.exit_code == ExitStatus::Validation.code() { ExitStatus::Validation } else { ExitStatus::Failure }))
        .max()
        .unwrap_or(ExitStatus::Ok);
    Summary {
        suite: suite.to_string(),
        groups,
        failures: failures.to_vec(),
        exit_code: worst.code(),
    }
}

impl Summary {
    pub fn exit_status(&self) -> ExitStatus {
        [ExitStatus::Ok, ExitStatus::NonConverged, ExitStatus::Validation, ExitStatus::Failure]
            .into_iter()
            .find(|s| s.code() == self.exit_code)
            .unwrap_or(ExitStatus::Failure)
    }

    /// Human-readable table.
    pub fn to_text(&self) -> String {
        let cell = |s: &Option<Stat>, prec: usize| match s {
            Some(s) => format!("{:.prec$} ± {:.prec$}", s.mean, s.std),
            None => "-".to_string(),
        };
        let sci = |s: &Option<Stat>| match s {
            Some(s) => format!("{:.4e} ± {:.2e}", s.mean, s.std),
            None => "-".to_string(),
        };
        let mut out = String::new();
        let _ = writeln!(out, "suite {}", self.suite);
        let _ = writeln!(
            out,
            "{:<36} {:>5} {:>5} {:>22} {:>20} {:>20} {:>24}",
            "group", "runs", "conv", "time [s]", "n_f", "n_jac", "objective"
        );
        for g in &self.groups {
            let _ = writeln!(
                out,
                "{:<36} {:>5} {:>5} {:>22} {:>20} {:>20} {:>24}",
                g.group,
                g.runs,
                g.converged,
                cell(&g.wall_time_s, 4),
                cell(&g.n_f, 1),
                cell(&g.n_jac, 1),
                sci(&g.final_objective)
            );
        }
        for f in &self.failures {
            let _ = writeln!(out, "FAILED {} ({}): {}", f.name, f.group, f.error);
        }
        let _ = writeln!(out, "exit code {}", self.exit_code);
        out
    }
}

/// Outcome of a suite run.
pub struct SuiteRunResult {
    pub records: Vec<ResultRecord>,
    pub summary: Summary,
}

pub fn run_suite(path: &Path, seed: Option<u64>, solver: Option<SolverKind>, parallel: Option<bool>) -> Result<SuiteRunResult, BenchError> {
    let (suite, members) = load_suite(path, seed, solver)?;
    let results = run_members(&members, parallel.unwrap_or(suite.parallel));
    let mut records = Vec::new();
    let mut failures = Vec::new();
    for r in results {
        match r {
            Ok(r) => records.push(r),
            Err(f) => failures.push(f),
        }
    }
    let summary = summarize(&suite.name, &records, &failures);
    Ok(SuiteRunResult { records, summary })
}

/// Writes `records.jsonl`, `summary.json` and `summary.txt` into `dir`.
pub fn write_suite_outputs(dir: &Path, result: &SuiteRunResult) -> Result<(), BenchError> {
    write_jsonl(&dir.join("records.jsonl"), &result.records)?;
    let json = serde_json::to_string_pretty(&result.summary).expect("summary serializes");
    fs::write(dir.join("summary.json"), json + "\n").map_err(|e| BenchError::io(dir.display(), e))?;
    fs::write(dir.join("summary.txt"), result.summary.to_text()).map_err(|e| BenchError::io(dir.display(), e))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_suite_is_a_validation_error() {
        let e = SuiteFile::from_toml("version = 1\nname = \"x\"\n").unwrap_err();
        assert_eq!(e.path, "runs");
        let e = SuiteFile::from_toml("version = 1\nname = \"x\"\nruns = []\n").unwrap_err();
        assert_eq!(e.path, "runs");
    }

    #[test]
    fn unknown_suite_fields_are_rejected() {
        let e = SuiteFile::from_toml("version = 1\nname = \"x\"\n[[runs]]\nconfig = \"a.toml\"\nsolver = \"ilqr\"\n").unwrap_err();
        assert!(e.path.starts_with("runs[0]"), "{e}");
    }

    #[test]
    fn stat_uses_sample_deviation() {
        let s = Stat::of(&[1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(s.mean, 2.5);
        assert!((s.std - (5.0f64 / 3.0).sqrt()).abs() < 1e-15);
        assert_eq!(Stat::of(&[7.0]).unwrap().std, 0.0);
        assert!(Stat::of(&[]).is_none());
    }
}
