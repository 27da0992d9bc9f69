use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use reglgcn::propagation::{Variant, VerifyOptions};

use crate::commands;
use crate::config::{Overrides, RankExpr, RunConfig};
use crate::error::{CliError, Result};
use crate::report::{render_ablation, render_run};

#[derive(Debug, Parser)]
#[command(name = "reglgcn", version, about = "Train and analyse regularizer-derived graph convolutions")]
pub struct Cli {
    /// Log progress (repeat for more detail).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    pub verbose: u8,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train the configured variant over every repeat seed and write a report.
    Train(RunArgs),
    /// Train every (alpha, beta, rank) cell of the configured grid.
    Grid(RunArgs),
    /// Compare GCN, tsGCN-s, tsGCN-t, tsGCN(inv) and tsGCN on shared seeds.
    Ablate(RunArgs),
    /// Check closed-form propagation against dense stationarity solves.
    VerifyTheorems(VerifyArgs),
    /// Write one layer's activations from a checkpoint as TSV.
    ExportEmbeddings(ExportArgs),
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub variant: Option<String>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub beta: Option<f64>,
    /// Count or `d/<m>`, `d/2^<k>`.
    #[arg(long)]
    pub rank: Option<RankExpr>,
    /// Train this single seed instead of `repeat_seeds`.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub output_dir: Option<PathBuf>,
}

impl RunArgs {
    pub fn load(&self) -> Result<RunConfig> {
        let overrides = Overrides {
            variant: self.variant.clone(),
            alpha: self.alpha,
            beta: self.beta,
            rank: self.rank,
            seed: self.seed,
            output_dir: self.output_dir.clone(),
        };
        RunConfig::load(&self.config, &overrides)
    }
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// Comma-separated variants; defaults to all eight.
    #[arg(long, value_delimiter = ',')]
    pub variants: Vec<Variant>,
    #[arg(long, default_value_t = 20)]
    pub seeds: u64,
    #[arg(long, default_value_t = 1e-8)]
    pub tolerance: f64,
    /// Scales the closed-form side by `1 + EPS`; a negative control.
    #[arg(long, hide = true, value_name = "EPS")]
    pub inject_fault: Option<f64>,
}

#[derive(Debug, Args)]
pub struct ExportArgs {
    #[arg(long)]
    pub checkpoint: PathBuf,
    /// 1-based layer index; the last layer gives class probabilities.
    #[arg(long)]
    pub layer: usize,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Train(args) => {
            let cfg = args.load()?;
            let out = commands::cmd_train(&cfg)?;
            print!("{}", render_run(&out.report));
            println!("report: {}", out.report_file.display());
            for p in &out.checkpoint_files {
                println!("checkpoint: {}", p.display());
            }
        }
        Command::Grid(args) => {
            let cfg = args.load()?;
            let out = commands::cmd_grid(&cfg)?;
            let failed = out
                .report
                .cells
                .iter()
                .filter(|c| matches!(c.outcome, crate::report::CellOutcome::Failed { .. }))
                .count();
            println!("{} cells, {failed} failed", out.report.cells.len());
            println!("summary: {}", out.report.summary_file.display());
            println!("report: {}", out.report_file.display());
        }
        Command::Ablate(args) => {
            let cfg = args.load()?;
            let out = commands::cmd_ablate(&cfg)?;
            print!("{}", render_ablation(&out.report));
            println!("report: {}", out.report_file.display());
        }
        Command::VerifyTheorems(args) => {
            if args.seeds == 0 {
                return Err(CliError::Usage("--seeds must be at least 1".into()));
            }
            let variants = if args.variants.is_empty() {
                Variant::FRAMEWORK.to_vec()
            } else {
                args.variants
            };
            let opts = VerifyOptions {
                tolerance: args.tolerance,
                fault: args.inject_fault,
                ..VerifyOptions::default()
            };
            let out = commands::cmd_verify(&variants, args.seeds, &opts)?;
            print!("{}", out.render());
            out.ensure_passed()?;
        }
        Command::ExportEmbeddings(args) => {
            let path = commands::cmd_export_embeddings(&args.checkpoint, args.layer, args.output.as_deref())?;
            println!("{}", path.display());
        }
    }
    Ok(())
}

/// Parses `args`, runs the command and returns the process exit code.
pub fn main_with<I, S>(args: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    let level = match cli.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    let _ = env_logger::Builder::new().filter_level(level).parse_default_env().try_init();
    match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
