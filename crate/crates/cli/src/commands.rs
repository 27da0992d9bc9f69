use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use reglgcn::graph::{load_dataset, Dataset, GraphOperators};
use reglgcn::linalg::SparseMatrix;
use reglgcn::network::{classification_metrics, forward, projective_sets, train_on, Checkpoint, TrainConfig};
use reglgcn::propagation::{
    build_layer_propagation, verify_random, BuildOptions, PropagationOperator, RegularizerSpec, StationarityReport,
    Variant, VerifyOptions,
};

use crate::config::{RankExpr, RunConfig};
use crate::error::{CliError, Result};
use crate::report::{
    self, created, emit, variant_tag, write_new, AblationColumn, AblationReport, Aggregate, CellOutcome,
    DatasetSummary, GridCell, GridReport, RunCheckpoint, RunReport, SeedResult, LIBRARY_VERSION,
};

/// A dataset with its split, sparse features and graph operators.
pub struct Loaded {
    pub dataset: Dataset<f64>,
    pub features: SparseMatrix<f64>,
    pub operators: GraphOperators<f64>,
    pub summary: DatasetSummary,
}

pub fn load(cfg: &RunConfig) -> Result<Loaded> {
    let (Some(content), Some(edges)) = (&cfg.dataset.content, &cfg.dataset.edges) else {
        return Err(CliError::Config(vec!["dataset paths are not resolved".into()]));
    };
    let mut dataset = load_dataset::<f64>(content, edges)?;
    if cfg.features.row_normalize {
        dataset = dataset.normalize_rows();
    }
    let s = &cfg.split;
    let dataset = dataset.with_split(s.per_class, s.n_val, s.n_test, s.seed)?;
    let operators = GraphOperators::build(&dataset.adjacency, &dataset.features, cfg.semantic.k)?;
    let summary = DatasetSummary {
        name: cfg.dataset.name.clone(),
        n_nodes: dataset.n_nodes(),
        n_edges: dataset.n_edges(),
        edge_records: dataset.edge_records,
        n_features: dataset.n_features(),
        n_classes: dataset.n_classes(),
        n_train: dataset.split.train.len(),
        n_val: dataset.split.val.len(),
        n_test: dataset.split.test.len(),
    };
    log::info!(
        "{}: {} nodes, {} edges, {} features, {} classes",
        summary.name,
        summary.n_nodes,
        summary.n_edges,
        summary.n_features,
        summary.n_classes
    );
    Ok(Loaded {
        features: SparseMatrix::from_dense(&dataset.features),
        dataset,
        operators,
        summary,
    })
}

pub fn build_options(cfg: &RunConfig) -> BuildOptions {
    BuildOptions {
        eig: cfg.eig.clone(),
        ..BuildOptions::default()
    }
}

/// Builds the operator for `spec` and trains it once per entry of
/// `cfg.repeat_seeds`, evaluating each best model on the test set.
pub fn run_spec(cfg: &RunConfig, data: &Loaded, spec: &RegularizerSpec) -> Result<(RunReport, Vec<Checkpoint>)> {
    if spec.variant.is_tsgcn() && (spec.rank == 0 || spec.rank > data.summary.n_nodes) {
        return Err(CliError::Config(vec![format!(
            "rank {} must lie in 1..={}",
            spec.rank, data.summary.n_nodes
        )]));
    }
    let started = Instant::now();
    let prop = build_layer_propagation(spec, &data.operators, &build_options(cfg))?;
    let build_seconds = started.elapsed().as_secs_f64();
    log::info!("built {} in {build_seconds:.2}s ({})", spec.label(), prop.descriptor().path);

    let ds = &data.dataset;
    let mut runs = Vec::with_capacity(cfg.repeat_seeds.len());
    let mut checkpoints = Vec::new();
    for &seed in &cfg.repeat_seeds {
        let train_cfg = TrainConfig {
            seed,
            ..cfg.train.clone()
        };
        let started = Instant::now();
        let outcome = train_on(&data.features, &ds.labels, &ds.split, ds.n_classes(), &prop, &train_cfg)?;
        let wall_time = started.elapsed().as_secs_f64();
        let metrics = test_metrics(&outcome.params, &prop, data)?;
        log::info!(
            "{} seed {seed}: accuracy {:.2}%, {} epochs, {wall_time:.2}s",
            spec.label(),
            100.0 * metrics.accuracy,
            outcome.history.len()
        );
        runs.push(SeedResult {
            seed,
            accuracy: metrics.accuracy,
            macro_f1: metrics.macro_f1,
            epochs: outcome.history.len(),
            best_epoch: outcome.best_epoch,
            wall_time,
        });
        if cfg.save_checkpoints {
            checkpoints.push(Checkpoint::new(&outcome.params, spec, &train_cfg, outcome.best_epoch));
        }
    }
    let report = RunReport {
        library_version: LIBRARY_VERSION.into(),
        created: created(),
        dataset: data.summary.clone(),
        config: cfg.clone(),
        spec: spec.clone(),
        descriptor: prop.descriptor().clone(),
        build_seconds,
        aggregate: Aggregate::from_runs(&runs),
        runs,
    };
    Ok((report, checkpoints))
}

fn test_metrics(
    params: &reglgcn::network::ModelParams<f64>,
    prop: &PropagationOperator<f64>,
    data: &Loaded,
) -> Result<reglgcn::network::Metrics> {
    let sets = projective_sets(prop, params.n_layers());
    let trace = forward(params, prop, &data.features, &sets, None)?;
    let ds = &data.dataset;
    Ok(classification_metrics(&trace.predictions(), &ds.labels, &ds.split.test, ds.n_classes())?)
}

/// The configured variant's regularizer with the rank resolved.
pub fn configured_spec(cfg: &RunConfig, n_features: usize) -> Result<RegularizerSpec> {
    let (variant, exact) = cfg.variant()?;
    Ok(cfg.spec_for(variant, exact, n_features))
}

pub struct TrainOutput {
    pub report: RunReport,
    pub report_file: PathBuf,
    pub checkpoint_files: Vec<PathBuf>,
}

pub fn cmd_train(cfg: &RunConfig) -> Result<TrainOutput> {
    let data = load(cfg)?;
    let spec = configured_spec(cfg, data.summary.n_features)?;
    if spec.variant.is_tsgcn() {
        cfg.check_rank(cfg.tsgcn.rank, data.summary.n_features, data.summary.n_nodes)?;
    }
    let (report, checkpoints) = run_spec(cfg, &data, &spec)?;
    let stem = format!("{}_{}", cfg.dataset.name, report.tag());
    let report_file = write_new(&cfg.output_dir, &stem, "report", emit(&report).as_bytes())?;
    let mut checkpoint_files = Vec::new();
    for checkpoint in checkpoints {
        let stored = RunCheckpoint {
            config: cfg.clone(),
            checkpoint,
        };
        let stem = format!("{stem}_seed{}", stored.checkpoint.seed);
        checkpoint_files.push(write_new(&cfg.output_dir, &stem, "ckpt", emit(&stored).as_bytes())?);
    }
    Ok(TrainOutput {
        report,
        report_file,
        checkpoint_files,
    })
}

pub struct GridOutput {
    pub report: GridReport,
    pub report_file: PathBuf,
}

fn axis<T: Clone>(values: &[T], fallback: T) -> Vec<T> {
    if values.is_empty() {
        vec![fallback]
    } else {
        values.to_vec()
    }
}

/// Trains every `(α, β, r)` cell of the grid. A failing cell is recorded and
/// the sweep continues.
pub fn cmd_grid(cfg: &RunConfig) -> Result<GridOutput> {
    let data = load(cfg)?;
    let (variant, _) = cfg.variant()?;
    let tsgcn = variant.is_tsgcn();
    let base = configured_spec(cfg, data.summary.n_features)?;
    let alphas = axis(&cfg.grid.alpha, base.alpha);
    let betas = axis(&cfg.grid.beta, base.beta);
    let ranks = axis(&cfg.grid.rank, cfg.tsgcn.rank);

    let mut cells = Vec::new();
    for &alpha in &alphas {
        for &beta in &betas {
            for &rank in &ranks {
                let mut cell_cfg = cfg.clone();
                if tsgcn {
                    cell_cfg.tsgcn.alpha = alpha;
                    cell_cfg.tsgcn.beta = beta;
                    cell_cfg.tsgcn.rank = rank;
                } else {
                    cell_cfg.model.alpha = Some(alpha);
                    cell_cfg.model.beta = Some(beta);
                }
                cell_cfg.grid = Default::default();
                let resolved_rank = rank.resolve(data.summary.n_features);
                let outcome = match run_cell(&cell_cfg, &data, rank) {
                    Ok(o) => o,
                    Err(e) => {
                        log::warn!("grid cell alpha={alpha} beta={beta} rank={rank} failed: {e}");
                        CellOutcome::Failed { error: e.to_string() }
                    }
                };
                cells.push(GridCell {
                    alpha,
                    beta,
                    rank,
                    resolved_rank,
                    outcome,
                });
            }
        }
    }
    let stem = format!("{}_{}_grid", cfg.dataset.name, variant_tag(&base));
    let summary_file = write_new(&cfg.output_dir, &stem, "csv", &grid_csv(&cells)?)?;
    let report = GridReport {
        library_version: LIBRARY_VERSION.into(),
        created: created(),
        dataset: data.summary.clone(),
        config: cfg.clone(),
        cells,
        summary_file,
    };
    let report_file = write_new(&cfg.output_dir, &stem, "report", emit(&report).as_bytes())?;
    Ok(GridOutput { report, report_file })
}

fn run_cell(cfg: &RunConfig, data: &Loaded, rank: RankExpr) -> Result<CellOutcome> {
    let spec = configured_spec(cfg, data.summary.n_features)?;
    spec.validate()?;
    if spec.variant.is_tsgcn() {
        cfg.check_rank(rank, data.summary.n_features, data.summary.n_nodes)?;
    }
    let (report, _) = run_spec(cfg, data, &spec)?;
    let stem = format!("{}_{}", cfg.dataset.name, report.tag());
    let report_file = write_new(&cfg.output_dir, &stem, "report", emit(&report).as_bytes())?;
    Ok(CellOutcome::Ok {
        report_file,
        aggregate: report.aggregate,
    })
}

/// Heat-map friendly summary: one row per cell.
pub fn grid_csv(cells: &[GridCell]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let csv_err = |e: csv::Error| CliError::Format {
        path: PathBuf::from("<grid summary>"),
        message: e.to_string(),
    };
    w.write_record([
        "alpha",
        "beta",
        "rank",
        "resolved_rank",
        "status",
        "n_runs",
        "accuracy_mean",
        "accuracy_std",
        "macro_f1_mean",
        "macro_f1_std",
        "error",
    ])
    .map_err(csv_err)?;
    for c in cells {
        let head = [c.alpha.to_string(), c.beta.to_string(), c.rank.to_string(), c.resolved_rank.to_string()];
        let tail = match &c.outcome {
            CellOutcome::Ok { aggregate: a, .. } => [
                "ok".to_string(),
                a.n_runs.to_string(),
                a.accuracy_mean.to_string(),
                a.accuracy_std.to_string(),
                a.macro_f1_mean.to_string(),
                a.macro_f1_std.to_string(),
                String::new(),
            ],
            CellOutcome::Failed { error } => [
                "failed".to_string(),
                "0".to_string(),
                String::new(),
                String::new(),
                String::new(),
                String::new(),
                error.clone(),
            ],
        };
        w.write_record(head.iter().chain(&tail)).map_err(csv_err)?;
    }
    w.into_inner().map_err(|e| csv_err(e.into_error().into()))
}

/// Columns of the ablation table, in order.
pub fn ablation_specs(cfg: &RunConfig, n_features: usize) -> Vec<RegularizerSpec> {
    vec![
        cfg.spec_for(Variant::Gcn, false, n_features),
        cfg.spec_for(Variant::TsgcnS, false, n_features),
        cfg.spec_for(Variant::TsgcnT, false, n_features),
        cfg.spec_for(Variant::Tsgcn, true, n_features),
        cfg.spec_for(Variant::Tsgcn, false, n_features),
    ]
}

/// Accuracy margin, as a fraction, by which tsGCN may trail an ablation
/// before a warning is emitted.
pub const ABLATION_MARGIN: f64 = 0.005;

pub struct AblationOutput {
    pub report: AblationReport,
    pub report_file: PathBuf,
}

/// GCN, tsGCN-s, tsGCN-t, tsGCN(inv) and tsGCN on the same split and seeds.
pub fn cmd_ablate(cfg: &RunConfig) -> Result<AblationOutput> {
    let data = load(cfg)?;
    let n_features = data.summary.n_features;
    cfg.check_rank(cfg.tsgcn.rank, n_features, data.summary.n_nodes)?;
    let mut cfg = cfg.clone();
    cfg.save_checkpoints = false;
    let mut columns = Vec::new();
    for spec in ablation_specs(&cfg, n_features) {
        let (report, _) = run_spec(&cfg, &data, &spec)?;
        columns.push(AblationColumn {
            label: spec.label(),
            report,
        });
    }
    let warnings = ablation_warnings(&columns);
    for w in &warnings {
        log::warn!("{w}");
    }
    let report = AblationReport {
        library_version: LIBRARY_VERSION.into(),
        created: created(),
        dataset: data.summary.clone(),
        seeds: cfg.repeat_seeds.clone(),
        columns,
        warnings,
    };
    let stem = format!("{}_ablation", cfg.dataset.name);
    let report_file = write_new(&cfg.output_dir, &stem, "report", emit(&report).as_bytes())?;
    Ok(AblationOutput { report, report_file })
}

/// One warning per tsGCN ablation whose mean accuracy exceeds tsGCN's by
/// more than [`ABLATION_MARGIN`].
pub fn ablation_warnings(columns: &[AblationColumn]) -> Vec<String> {
    let full = columns
        .iter()
        .find(|c| c.report.spec.variant == Variant::Tsgcn && !c.report.spec.exact_inverse);
    let Some(full) = full else {
        return Vec::new();
    };
    let ours = full.report.aggregate.accuracy_mean;
    columns
        .iter()
        .filter(|c| c.report.spec.variant.is_tsgcn() && !std::ptr::eq(*c, full))
        .filter(|c| ours < c.report.aggregate.accuracy_mean - ABLATION_MARGIN)
        .map(|c| {
            format!(
                "{} mean accuracy {:.2}% is below {} at {:.2}% by more than {:.1} points",
                full.label,
                100.0 * ours,
                c.label,
                100.0 * c.report.aggregate.accuracy_mean,
                100.0 * ABLATION_MARGIN
            )
        })
        .collect()
}

#[derive(Debug, Clone)]
pub struct VerifyOutput {
    pub rows: Vec<StationarityReport>,
}

impl VerifyOutput {
    pub fn failures(&self) -> usize {
        self.rows.iter().filter(|r| !r.passed).count()
    }

    pub fn max_discrepancy(&self) -> f64 {
        self.rows.iter().map(|r| r.discrepancy).fold(0.0, f64::max)
    }

    pub fn render(&self) -> String {
        let mut out = String::from("variant   seed   n   discrepancy  tolerance  result\n");
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{:<8} {:>5} {:>3}   {:>10.2e}   {:>8.1e}  {}",
                r.label,
                r.seed,
                r.n_nodes,
                r.discrepancy,
                r.tolerance,
                if r.passed { "pass" } else { "FAIL" }
            );
        }
        let _ = writeln!(
            out,
            "{} of {} passed, max discrepancy {:.2e}",
            self.rows.len() - self.failures(),
            self.rows.len(),
            self.max_discrepancy()
        );
        out
    }

    pub fn ensure_passed(&self) -> Result<()> {
        match self.failures() {
            0 => Ok(()),
            failed => Err(CliError::TheoremFailure {
                failed,
                total: self.rows.len(),
            }),
        }
    }
}

/// Compares each variant's closed-form propagation with a dense solve of its
/// stationarity system on `n_seeds` random graphs.
pub fn cmd_verify(variants: &[Variant], n_seeds: u64, opts: &VerifyOptions) -> Result<VerifyOutput> {
    let mut rows = Vec::with_capacity(variants.len() * n_seeds as usize);
    for &v in variants {
        let spec = RegularizerSpec::new(v).with_rank(4);
        for seed in 0..n_seeds {
            rows.push(verify_random(&spec, seed, opts)?);
        }
    }
    Ok(VerifyOutput { rows })
}

/// Writes layer `layer` (1-based) of the checkpointed model's activations as
/// tab-separated text: node id, label name, then one column per unit.
pub fn cmd_export_embeddings(checkpoint_path: &Path, layer: usize, output: Option<&Path>) -> Result<PathBuf> {
    let stored: RunCheckpoint = report::read(checkpoint_path)?;
    let params = stored.checkpoint.params::<f64>()?;
    let n_layers = params.n_layers();
    if layer == 0 || layer > n_layers {
        return Err(CliError::Usage(format!("layer {layer} is out of range 1..={n_layers}")));
    }
    let data = load(&stored.config)?;
    let spec = &stored.checkpoint.spec;
    let prop = build_layer_propagation(spec, &data.operators, &build_options(&stored.config))?;
    let sets = projective_sets(&prop, n_layers);
    let trace = forward(&params, &prop, &data.features, &sets, None)?;
    let h = &trace.activations[layer - 1];

    let ds = &data.dataset;
    let mut text = String::from("node_id\tlabel");
    for j in 0..h.n_cols() {
        let _ = write!(text, "\th{j}");
    }
    text.push('\n');
    for i in 0..h.n_rows() {
        let _ = write!(text, "{}\t{}", ds.node_ids[i], ds.label_names[ds.labels[i]]);
        for v in h.row(i) {
            let _ = write!(text, "\t{v}");
        }
        text.push('\n');
    }
    let path = match output {
        Some(p) => p.to_path_buf(),
        None => checkpoint_path.with_extension(format!("layer{layer}.tsv")),
    };
    fs::write(&path, text).map_err(CliError::io(&path))?;
    Ok(path)
}
