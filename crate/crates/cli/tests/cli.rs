mod common;

use std::fs;

use common::*;
use reglgcn_cli::commands::{cmd_ablate, cmd_grid, cmd_train};
use reglgcn_cli::config::{Overrides, RunConfig};
use reglgcn_cli::report::{self, Aggregate, CellOutcome, GridReport, RunReport};
use reglgcn_cli::CliError;

fn load(path: &std::path::Path) -> RunConfig {
    RunConfig::load(path, &Overrides::default()).unwrap()
}

#[test]
fn toy_run_writes_a_report_that_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    toy(dir.path());
    let cfg = dir.path().join("toy.toml");
    fs::write(&cfg, TOY_CONFIG).unwrap();
    let out = reglgcn(&["train", "--config", cfg.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));

    let reports = files_with_ext(&dir.path().join("runs"), "report");
    assert_eq!(reports.len(), 1);
    let name = reports[0].file_name().unwrap().to_str().unwrap();
    assert!(name.starts_with("toy_gcn_"), "{name}");
    let text = fs::read_to_string(&reports[0]).unwrap();
    let parsed: RunReport = report::parse(&text).unwrap();
    assert_eq!(report::parse::<RunReport>(&report::emit(&parsed)).unwrap(), parsed);
    assert_eq!(report::emit(&parsed), text);
    assert_eq!(parsed.runs.len(), 1);
    assert_eq!(parsed.runs[0].epochs, 1);
    assert!(parsed.is_consistent());
    assert_eq!(parsed.dataset.n_nodes, 3);
}

#[test]
fn report_aggregates_are_recomputable() {
    let dir = tempfile::tempdir().unwrap();
    twin(dir.path());
    let cfg = load(&twin_config(dir.path(), "tsgcn", ""));
    let out = cmd_train(&cfg).unwrap();
    let r = &out.report;
    assert_eq!(r.runs.len(), 2);
    let n = r.runs.len() as f64;
    let mean = r.runs.iter().map(|s| s.accuracy).sum::<f64>() / n;
    let var = r.runs.iter().map(|s| (s.accuracy - mean).powi(2)).sum::<f64>() / (n - 1.0);
    assert!((r.aggregate.accuracy_mean - mean).abs() < 1e-15);
    assert!((r.aggregate.accuracy_std - var.sqrt()).abs() < 1e-15);
    assert_eq!(Aggregate::from_runs(&r.runs), r.aggregate);
    let eig = r.descriptor.eig.as_ref().expect("low-rank tsGCN records its eigensolver");
    assert_eq!(eig.rank, 3);
    assert_eq!(out.checkpoint_files.len(), 2);
}

#[test]
fn grid_2x2x1_has_four_rows() {
    let dir = tempfile::tempdir().unwrap();
    twin(dir.path());
    let cfg = load(&twin_config(
        dir.path(),
        "tsgcn",
        "[grid]\nalpha = [0.5, 1.0]\nbeta = [0.2, 0.4]\nrank = [2]\n",
    ));
    let out = cmd_grid(&cfg).unwrap();
    assert_eq!(out.report.cells.len(), 4);
    let csv = fs::read_to_string(&out.report.summary_file).unwrap();
    let mut rows = csv::Reader::from_reader(csv.as_bytes());
    let rows: Vec<csv::StringRecord> = rows.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 4);

    // Every summary row equals a recomputation from its cell's own report.
    for (row, cell) in rows.iter().zip(&out.report.cells) {
        let CellOutcome::Ok { report_file, aggregate } = &cell.outcome else {
            panic!("cell failed: {cell:?}");
        };
        let cell_report: RunReport = report::read(report_file).unwrap();
        assert_eq!(cell_report.spec.alpha, cell.alpha);
        assert_eq!(cell_report.spec.rank, 2);
        let again = Aggregate::from_runs(&cell_report.runs);
        assert_eq!(&again, aggregate);
        assert_eq!(row[6].parse::<f64>().unwrap(), again.accuracy_mean);
        assert_eq!(row[4].to_string(), "ok");
    }
    let stored: GridReport = report::read(&out.report_file).unwrap();
    assert_eq!(stored, out.report);
}

#[test]
fn grid_records_failed_cells_and_continues() {
    let dir = tempfile::tempdir().unwrap();
    twin(dir.path());
    let cfg = load(&twin_config(dir.path(), "tsgcn", "[grid]\nrank = [\"d/2^20\", 2]\n"));
    let out = cmd_grid(&cfg).unwrap();
    assert_eq!(out.report.cells.len(), 2);
    assert!(matches!(&out.report.cells[0].outcome, CellOutcome::Failed { error } if error.contains("rank")));
    assert!(matches!(out.report.cells[1].outcome, CellOutcome::Ok { .. }));
    let csv = fs::read_to_string(&out.report.summary_file).unwrap();
    assert_eq!(csv.lines().count(), 3);
}

#[test]
fn full_rank_cell_reproduces_the_exact_inverse() {
    let dir = tempfile::tempdir().unwrap();
    twin(dir.path());
    let grid = load(&twin_config(dir.path(), "tsgcn", "[grid]\nrank = [12]\n"));
    let grid = cmd_grid(&grid).unwrap();
    let CellOutcome::Ok { report_file, .. } = &grid.report.cells[0].outcome else {
        panic!("full-rank cell failed");
    };
    let low: RunReport = report::read(report_file).unwrap();
    let exact = load(&twin_config(dir.path(), "tsgcn(inv)", ""));
    let exact = cmd_train(&exact).unwrap().report;
    assert!(exact.spec.exact_inverse);
    for (a, b) in low.runs.iter().zip(&exact.runs) {
        assert!((a.accuracy - b.accuracy).abs() <= 1e-6, "{a:?} vs {b:?}");
    }
}

#[test]
fn ablation_has_five_columns_and_a_deterministic_gcn_column() {
    let dir = tempfile::tempdir().unwrap();
    twin(dir.path());
    let cfg = load(&twin_config(dir.path(), "tsgcn", ""));
    let first = cmd_ablate(&cfg).unwrap().report;
    let labels: Vec<&str> = first.columns.iter().map(|c| c.label.as_str()).collect();
    assert_eq!(labels, ["GCN", "tsGCN-s", "tsGCN-t", "tsGCN(inv)", "tsGCN"]);
    let second = cmd_ablate(&cfg).unwrap().report;
    assert_eq!(first.columns[0].report.runs.len(), 2);
    let strip = |r: &RunReport| r.runs.iter().map(|s| (s.seed, s.accuracy, s.macro_f1, s.epochs)).collect::<Vec<_>>();
    assert_eq!(strip(&first.columns[0].report), strip(&second.columns[0].report));
}

#[test]
fn verify_single_variant_gives_one_row() {
    let out = reglgcn(&["verify-theorems", "--variants", "gcn", "--seeds", "1"]);
    assert!(out.status.success());
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert_eq!(stdout.lines().filter(|l| l.starts_with("GCN")).count(), 1);
    assert!(stdout.contains("1 of 1 passed"));
}

#[test]
fn verify_negative_control_exits_with_3() {
    let out = reglgcn(&["verify-theorems", "--variants", "appnp", "--seeds", "2", "--inject-fault", "1e-4"]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn export_embeddings() {
    let dir = tempfile::tempdir().unwrap();
    twin(dir.path());
    let cfg = load(&twin_config(dir.path(), "gcn", ""));
    let ckpt = cmd_train(&cfg).unwrap().checkpoint_files.remove(0);
    let export = |layer: &str, out: &str| {
        let out = dir.path().join(out);
        let o = reglgcn(&[
            "export-embeddings",
            "--checkpoint",
            ckpt.to_str().unwrap(),
            "--layer",
            layer,
            "--output",
            out.to_str().unwrap(),
        ]);
        (o, out)
    };
    let rows = |path: &std::path::Path| -> Vec<(String, String, Vec<f64>)> {
        fs::read_to_string(path)
            .unwrap()
            .lines()
            .skip(1)
            .map(|l| {
                let mut f = l.split('\t');
                let id = f.next().unwrap().to_string();
                let label = f.next().unwrap().to_string();
                (id, label, f.map(|v| v.parse().unwrap()).collect())
            })
            .collect()
    };

    let (o, last) = export("2", "last.tsv");
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let out_rows = rows(&last);
    assert_eq!(out_rows.len(), 12);
    assert_eq!((out_rows[0].0.as_str(), out_rows[0].1.as_str()), ("n0", "c0"));
    for (_, _, v) in &out_rows {
        assert_eq!(v.len(), 2);
        assert!((v.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    let (o, hidden) = export("1", "hidden.tsv");
    assert!(o.status.success());
    let hidden_rows = rows(&hidden);
    assert!(hidden_rows.iter().all(|(_, _, v)| v.len() == 8 && v.iter().all(|&x| x >= 0.0)));

    let (_, again) = export("2", "again.tsv");
    assert_eq!(fs::read(&last).unwrap(), fs::read(&again).unwrap());

    let (o, _) = export("3", "bad.tsv");
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("out of range"));
}

#[test]
fn config_errors_are_listed_together_and_exit_with_1() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    fs::write(
        &cfg,
        "repeat_seeds = []\n[dataset]\nname = \"missing\"\n[model]\nvariant = \"gcn\"\n[train]\nlr = 0.0\nhidden_units = 0\n",
    )
    .unwrap();
    let err = RunConfig::load(&cfg, &Overrides::default()).unwrap_err();
    let CliError::Config(problems) = &err else {
        panic!("{err}");
    };
    assert!(problems.len() >= 5, "{problems:#?}");
    let out = reglgcn(&["train", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));

    fs::write(&cfg, "[dataset]\nname = \"toy\"\nunknown = 1\n").unwrap();
    let out = reglgcn(&["train", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn data_dir_environment_variable_is_a_fallback() {
    let data = tempfile::tempdir().unwrap();
    toy(data.path());
    let work = tempfile::tempdir().unwrap();
    let cfg = work.path().join("toy.toml");
    fs::write(&cfg, TOY_CONFIG).unwrap();
    assert_eq!(reglgcn(&["train", "--config", cfg.to_str().unwrap()]).status.code(), Some(1));
    let out = std::process::Command::new(env!("CARGO_BIN_EXE_reglgcn"))
        .args(["train", "--config", cfg.to_str().unwrap()])
        .env(reglgcn_cli::config::DATA_DIR_ENV, data.path())
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn eigensolver_failure_exits_with_2() {
    let dir = tempfile::tempdir().unwrap();
    twin(dir.path());
    let cfg = twin_config(
        dir.path(),
        "tsgcn",
        "[eig]\nstrict = true\nmax_iter = 1\ncheck_every = 1\ntol = 1e-15\n",
    );
    let out = reglgcn(&["train", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn overrides_take_precedence() {
    let dir = tempfile::tempdir().unwrap();
    twin(dir.path());
    let path = twin_config(dir.path(), "gcn", "");
    let o = Overrides {
        variant: Some("tsgcn".into()),
        alpha: Some(0.3),
        rank: Some("d/4".parse().unwrap()),
        seed: Some(7),
        ..Default::default()
    };
    let cfg = RunConfig::load(&path, &o).unwrap();
    assert_eq!(cfg.tsgcn.alpha, 0.3);
    assert_eq!(cfg.repeat_seeds, [7]);
    assert_eq!(cfg.tsgcn.rank.resolve(8), 2);
    let echo = RunConfig::from_toml(&cfg.to_toml()).unwrap();
    assert_eq!(echo, cfg);
}
