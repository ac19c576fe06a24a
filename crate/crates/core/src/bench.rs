//! Benchmark harness: runs the solver over a directory of DIMACS files and aggregates
//! the S and B metrics.
//!
//! S is the mean over instances of the percentage of samples that solved the instance;
//! B is the percentage of instances solved by at least one sample. Files that fail to
//! load are reported separately and excluded from both.

use std::cmp::Ordering;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::formula::parse_dimacs_bytes;
use crate::solver::{progress_curve, solve, CurvePoint, SolveConfig, SolveError, SolveReport};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("cannot read instance directory {path}: {source}")]
    Dir { path: PathBuf, source: std::io::Error },
    #[error("invalid file pattern '{pattern}': {reason}")]
    Pattern { pattern: String, reason: String },
    #[error(transparent)]
    Solve(#[from] SolveError),
    #[error("failed to write CSV: {0}")]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Which files of the directory to run.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InstanceFilter {
    /// Glob over file names.
    pub pattern: String,
    /// Keep only the first `limit` files in natural order.
    pub limit: Option<usize>,
}

impl Default for InstanceFilter {
    fn default() -> Self {
        InstanceFilter { pattern: "*.cnf".into(), limit: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceResult {
    pub path: String,
    pub num_vars: usize,
    pub num_clauses: usize,
    pub solved_at: Vec<Option<u64>>,
    pub steps: u64,
}

impl InstanceResult {
    pub fn solved_samples(&self) -> usize {
        self.solved_at.iter().filter(|s| s.is_some()).count()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InstanceFailure {
    pub path: String,
    pub error: String,
}

/// Timings are kept apart so the rest of a report is reproducible bit for bit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub wall_clock_secs: f64,
    pub steps_per_second: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub schema_version: u32,
    pub instance_dir: String,
    pub filter: InstanceFilter,
    pub config: SolveConfig,
    pub instances: Vec<InstanceResult>,
    pub failures: Vec<InstanceFailure>,
    pub s_percent: f64,
    pub b_percent: f64,
    pub curve: Vec<CurvePoint>,
    pub total_steps: u64,
    pub timing: Timing,
}

impl BenchReport {
    pub fn to_json(&self) -> Result<String, BenchError> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<BenchReport, BenchError> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn solved_instances(&self) -> usize {
        self.instances.iter().filter(|i| i.solved_samples() > 0).count()
    }
}

/// Report of a single-instance run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveRun {
    pub schema_version: u32,
    pub path: String,
    pub config: SolveConfig,
    pub report: SolveReport,
    pub timing: Timing,
}

impl SolveRun {
    pub fn new(path: &str, config: &SolveConfig, report: SolveReport, wall_clock_secs: f64) -> SolveRun {
        let steps_per_second = if wall_clock_secs > 0.0 { report.steps as f64 / wall_clock_secs } else { 0.0 };
        SolveRun {
            schema_version: SCHEMA_VERSION,
            path: path.to_string(),
            config: config.clone(),
            report,
            timing: Timing { wall_clock_secs, steps_per_second },
        }
    }

    pub fn to_json(&self) -> Result<String, BenchError> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// `(S, B)` in percent from per-instance `solved_at` vectors.
pub fn metrics(solved_at: &[Vec<Option<u64>>]) -> (f64, f64) {
    let counted: Vec<&Vec<Option<u64>>> = solved_at.iter().filter(|s| !s.is_empty()).collect();
    if counted.is_empty() {
        return (0.0, 0.0);
    }
    let n = counted.len() as f64;
    let s = counted
        .iter()
        .map(|v| v.iter().filter(|x| x.is_some()).count() as f64 / v.len() as f64)
        .sum::<f64>()
        / n
        * 100.0;
    let b = counted.iter().filter(|v| v.iter().any(Option::is_some)).count() as f64 / n * 100.0;
    (s, b)
}

/// Mean over instances of each instance's solved-ratio curve.
pub fn mean_curve(solved_at: &[Vec<Option<u64>>], max_epochs: u64, granularity: u64) -> Vec<CurvePoint> {
    let curves: Vec<Vec<CurvePoint>> = solved_at
        .iter()
        .filter(|s| !s.is_empty())
        .map(|s| progress_curve(s, max_epochs, granularity))
        .collect();
    let Some(first) = curves.first() else { return Vec::new() };
    first
        .iter()
        .enumerate()
        .map(|(k, p)| CurvePoint {
            epoch: p.epoch,
            solved_ratio: curves.iter().map(|c| c[k].solved_ratio).sum::<f64>() / curves.len() as f64,
        })
        .collect()
}

/// CSV with header `epoch,solved_ratio` and one row per snapshot.
pub fn export_curve(curve: &[CurvePoint]) -> Result<String, BenchError> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
    w.write_record(["epoch", "solved_ratio"])?;
    for p in curve {
        w.serialize((p.epoch, p.solved_ratio))?;
    }
    let bytes = w.into_inner().map_err(|e| BenchError::Io(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

/// Orders names by comparing digit runs as integers, so `uf20-02` precedes `uf20-010`.
pub fn natural_cmp(a: &str, b: &str) -> Ordering {
    fn runs(s: &str) -> Vec<(bool, &str)> {
        let mut out = Vec::new();
        let mut start = 0;
        let bytes = s.as_bytes();
        for i in 1..=bytes.len() {
            if i == bytes.len() || bytes[i].is_ascii_digit() != bytes[start].is_ascii_digit() {
                out.push((bytes[start].is_ascii_digit(), &s[start..i]));
                start = i;
            }
        }
        out
    }
    let (ra, rb) = (runs(a), runs(b));
    for (&(da, x), &(db, y)) in ra.iter().zip(&rb) {
        let ord = if da && db {
            let (tx, ty) = (x.trim_start_matches('0'), y.trim_start_matches('0'));
            tx.len().cmp(&ty.len()).then_with(|| tx.cmp(ty))
        } else {
            x.cmp(y)
        };
        if ord != Ordering::Equal {
            return ord;
        }
    }
    ra.len().cmp(&rb.len()).then_with(|| a.cmp(b))
}

/// Files in `dir` whose names match the filter, in natural order.
pub fn list_instances(dir: &Path, filter: &InstanceFilter) -> Result<Vec<PathBuf>, BenchError> {
    let pattern = glob::Pattern::new(&filter.pattern).map_err(|e| BenchError::Pattern {
        pattern: filter.pattern.clone(),
        reason: e.msg.to_string(),
    })?;
    let entries = std::fs::read_dir(dir).map_err(|source| BenchError::Dir { path: dir.to_path_buf(), source })?;
    let mut files = Vec::new();
    for entry in entries {
        let entry = entry.map_err(|source| BenchError::Dir { path: dir.to_path_buf(), source })?;
        let path = entry.path();
        let name = entry.file_name().to_string_lossy().into_owned();
        if path.is_file() && pattern.matches(&name) {
            files.push((name, path));
        }
    }
    files.sort_by(|a, b| natural_cmp(&a.0, &b.0));
    let mut files: Vec<PathBuf> = files.into_iter().map(|(_, p)| p).collect();
    if let Some(limit) = filter.limit {
        files.truncate(limit);
    }
    Ok(files)
}

pub fn run_benchmark(
    dir: &Path,
    config: &SolveConfig,
    filter: &InstanceFilter,
) -> Result<BenchReport, BenchError> {
    config.validate()?;
    let files = list_instances(dir, filter)?;
    let start = Instant::now();
    let mut instances = Vec::new();
    let mut failures = Vec::new();
    for path in &files {
        let shown = path.display().to_string();
        let cnf = match std::fs::read(path)
            .map_err(|e| e.to_string())
            .and_then(|bytes| parse_dimacs_bytes(&bytes).map_err(|e| e.to_string()))
        {
            Ok(cnf) => cnf,
            Err(error) => {
                log::warn!("skipping {shown}: {error}");
                failures.push(InstanceFailure { path: shown, error });
                continue;
            }
        };
        let report = solve(&cnf, config)?;
        log::info!("{shown}: {}/{} samples solved", report.solved_samples(), config.samples);
        instances.push(InstanceResult {
            path: shown,
            num_vars: report.num_vars,
            num_clauses: report.num_clauses,
            solved_at: report.solved_at,
            steps: report.steps,
        });
    }
    let elapsed = start.elapsed().as_secs_f64();
    let solved: Vec<Vec<Option<u64>>> = instances.iter().map(|i| i.solved_at.clone()).collect();
    let (s_percent, b_percent) = metrics(&solved);
    let total_steps = instances.iter().map(|i| i.steps).sum();
    Ok(BenchReport {
        schema_version: SCHEMA_VERSION,
        instance_dir: dir.display().to_string(),
        filter: filter.clone(),
        config: config.clone(),
        curve: mean_curve(&solved, config.max_epochs, config.progress_granularity),
        instances,
        failures,
        s_percent,
        b_percent,
        total_steps,
        timing: Timing {
            wall_clock_secs: elapsed,
            steps_per_second: if elapsed > 0.0 { total_steps as f64 / elapsed } else { 0.0 },
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn metric_definitions() {
        let (s, b) = metrics(&[vec![Some(3), None], vec![None, None]]);
        assert_eq!((s, b), (25.0, 50.0));
        assert_eq!(metrics(&[vec![Some(0)], vec![Some(9), Some(1)]]), (100.0, 100.0));
        assert_eq!(metrics(&[]), (0.0, 0.0));
    }

    #[test]
    fn curve_csv() {
        assert_eq!(export_curve(&[]).unwrap(), "epoch,solved_ratio\n");
        let curve = progress_curve(&[Some(250)], 300, 100);
        assert_eq!(export_curve(&curve).unwrap(), "epoch,solved_ratio\n100,0.0\n200,0.0\n300,1.0\n");
    }

    #[test]
    fn mean_curve_pools_instances() {
        let c = mean_curve(&[vec![Some(50), None], vec![Some(150), Some(150)]], 200, 100);
        assert_eq!(c, vec![
            CurvePoint { epoch: 100, solved_ratio: 0.25 },
            CurvePoint { epoch: 200, solved_ratio: 0.75 },
        ]);
    }

    #[test]
    fn natural_order_and_limit() {
        let dir = tempfile::tempdir().unwrap();
        for name in ["uf20-010.cnf", "uf20-02.cnf", "uf20-01.cnf", "notes.txt"] {
            std::fs::write(dir.path().join(name), "p cnf 1 1\n1 0\n").unwrap();
        }
        let names = |f: &InstanceFilter| -> Vec<String> {
            list_instances(dir.path(), f)
                .unwrap()
                .iter()
                .map(|p| p.file_name().unwrap().to_string_lossy().into_owned())
                .collect()
        };
        assert_eq!(names(&InstanceFilter::default()), ["uf20-01.cnf", "uf20-02.cnf", "uf20-010.cnf"]);
        assert_eq!(natural_cmp("a9", "a10"), Ordering::Less);
        assert_eq!(natural_cmp("flat30-2", "flat30-2"), Ordering::Equal);
        assert_eq!(natural_cmp("x", "x1"), Ordering::Less);
        assert_eq!(names(&InstanceFilter { limit: Some(2), ..Default::default() }), ["uf20-01.cnf", "uf20-02.cnf"]);
    }
}
