use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use reglgcn::network::Checkpoint;
use reglgcn::propagation::{Descriptor, RegularizerSpec};
use serde::{Deserialize, Serialize};

use crate::config::{RankExpr, RunConfig};
use crate::error::{CliError, Result};

pub const LIBRARY_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSummary {
    pub name: String,
    pub n_nodes: usize,
    pub n_edges: usize,
    pub edge_records: usize,
    pub n_features: usize,
    pub n_classes: usize,
    pub n_train: usize,
    pub n_val: usize,
    pub n_test: usize,
}

/// Test-set result of one training seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedResult {
    pub seed: u64,
    pub accuracy: f64,
    pub macro_f1: f64,
    /// Epochs actually run, including the patience window.
    pub epochs: usize,
    pub best_epoch: usize,
    pub wall_time: f64,
}

/// Mean and sample standard deviation over seeds. With a single seed the
/// deviation is 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub n_runs: usize,
    pub accuracy_mean: f64,
    pub accuracy_std: f64,
    pub macro_f1_mean: f64,
    pub macro_f1_std: f64,
    pub mean_epoch_seconds: f64,
}

fn mean_std(values: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let n = values.clone().count();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.clone().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let ss: f64 = values.map(|v| (v - mean) * (v - mean)).sum();
    (mean, (ss / (n - 1) as f64).sqrt())
}

impl Aggregate {
    pub fn from_runs(runs: &[SeedResult]) -> Self {
        let (accuracy_mean, accuracy_std) = mean_std(runs.iter().map(|r| r.accuracy));
        let (macro_f1_mean, macro_f1_std) = mean_std(runs.iter().map(|r| r.macro_f1));
        let epochs: usize = runs.iter().map(|r| r.epochs).sum();
        let time: f64 = runs.iter().map(|r| r.wall_time).sum();
        Self {
            n_runs: runs.len(),
            accuracy_mean,
            accuracy_std,
            macro_f1_mean,
            macro_f1_std,
            mean_epoch_seconds: if epochs == 0 { 0.0 } else { time / epochs as f64 },
        }
    }
}

/// Everything about one configuration trained over several seeds. The
/// configuration is echoed in full so the run can be repeated from the report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub library_version: String,
    pub created: String,
    pub dataset: DatasetSummary,
    pub config: RunConfig,
    pub spec: RegularizerSpec,
    pub descriptor: Descriptor,
    pub build_seconds: f64,
    pub runs: Vec<SeedResult>,
    pub aggregate: Aggregate,
}

impl RunReport {
    /// Short name used in file names and tables, e.g. `tsgcn_inv`.
    pub fn tag(&self) -> String {
        variant_tag(&self.spec)
    }

    /// Whether `aggregate` matches a recomputation from `runs`.
    pub fn is_consistent(&self) -> bool {
        let again = Aggregate::from_runs(&self.runs);
        again == self.aggregate
    }
}

pub fn variant_tag(spec: &RegularizerSpec) -> String {
    if spec.variant.is_tsgcn() && spec.exact_inverse {
        format!("{}_inv", spec.variant.key())
    } else {
        spec.variant.key().to_string()
    }
}

/// A trained model together with the configuration that produced it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunCheckpoint {
    pub config: RunConfig,
    pub checkpoint: Checkpoint,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum CellOutcome {
    Ok { report_file: PathBuf, aggregate: Aggregate },
    Failed { error: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridCell {
    pub alpha: f64,
    pub beta: f64,
    pub rank: RankExpr,
    pub resolved_rank: usize,
    pub outcome: CellOutcome,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridReport {
    pub library_version: String,
    pub created: String,
    pub dataset: DatasetSummary,
    pub config: RunConfig,
    pub cells: Vec<GridCell>,
    pub summary_file: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationColumn {
    pub label: String,
    pub report: RunReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationReport {
    pub library_version: String,
    pub created: String,
    pub dataset: DatasetSummary,
    pub seeds: Vec<u64>,
    pub columns: Vec<AblationColumn>,
    pub warnings: Vec<String>,
}

pub fn emit<R: Serialize>(report: &R) -> String {
    serde_json::to_string_pretty(report).expect("reports serialize")
}

pub fn parse<R: for<'de> Deserialize<'de>>(text: &str) -> serde_json::Result<R> {
    serde_json::from_str(text)
}

pub fn read<R: for<'de> Deserialize<'de>>(path: &Path) -> Result<R> {
    let text = fs::read_to_string(path).map_err(CliError::io(path))?;
    parse(&text).map_err(|e| CliError::Format {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

pub fn timestamp() -> String {
    chrono::Utc::now().format("%Y%m%dT%H%M%S%.3fZ").to_string()
}

pub fn created() -> String {
    chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Millis, true)
}

/// Creates `<dir>/<stem>_<timestamp>.<ext>`, appending a counter if that name
/// is taken, and writes `contents` to it.
pub fn write_new(dir: &Path, stem: &str, ext: &str, contents: &[u8]) -> Result<PathBuf> {
    fs::create_dir_all(dir).map_err(CliError::io(dir))?;
    let ts = timestamp();
    for attempt in 0.. {
        let name = match attempt {
            0 => format!("{stem}_{ts}.{ext}"),
            k => format!("{stem}_{ts}-{k}.{ext}"),
        };
        let path = dir.join(name);
        match fs::OpenOptions::new().write(true).create_new(true).open(&path) {
            Ok(mut f) => {
                f.write_all(contents).map_err(CliError::io(&path))?;
                return Ok(path);
            }
            Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => continue,
            Err(e) => return Err(CliError::io(&path)(e)),
        }
    }
    unreachable!("unbounded attempts")
}

/// Fixed-width table rendering of a run report.
pub fn render_run(report: &RunReport) -> String {
    let mut out = format!(
        "{} on {} ({} nodes, {} edges), {}\n",
        report.spec.label(),
        report.dataset.name,
        report.dataset.n_nodes,
        report.dataset.n_edges,
        report.descriptor.path
    );
    if let Some(eig) = &report.descriptor.eig {
        out += &format!(
            "eigensolver: rank {}, {} iterations, residual {:.2e}, converged {}\n",
            eig.rank, eig.iterations, eig.residual, eig.converged
        );
    }
    out += &format!("build {:.2}s\n", report.build_seconds);
    out += "seed  accuracy  macro-F1  epochs  best  time(s)\n";
    for r in &report.runs {
        out += &format!(
            "{:>4}  {:>8.2}  {:>8.2}  {:>6}  {:>4}  {:>7.2}\n",
            r.seed,
            100.0 * r.accuracy,
            100.0 * r.macro_f1,
            r.epochs,
            r.best_epoch,
            r.wall_time
        );
    }
    let a = &report.aggregate;
    out += &format!(
        "mean  {:>5.2} ± {:.2}  F1 {:.2} ± {:.2}  ({:.1} ms/epoch)\n",
        100.0 * a.accuracy_mean,
        100.0 * a.accuracy_std,
        100.0 * a.macro_f1_mean,
        100.0 * a.macro_f1_std,
        1e3 * a.mean_epoch_seconds
    );
    out
}

pub fn render_ablation(report: &AblationReport) -> String {
    let width = report.columns.iter().map(|c| c.label.len()).max().unwrap_or(0).max(12);
    let mut out = format!("ablation on {}, seeds {:?}\n", report.dataset.name, report.seeds);
    for c in &report.columns {
        let a = &c.report.aggregate;
        out += &format!(
            "{:<width$}  {:>6.2} ± {:<5.2}  F1 {:>6.2}\n",
            c.label,
            100.0 * a.accuracy_mean,
            100.0 * a.accuracy_std,
            100.0 * a.macro_f1_mean
        );
    }
    for w in &report.warnings {
        out += &format!("warning: {w}\n");
    }
    out
}
