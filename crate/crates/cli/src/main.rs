//! `kws`: train, adapt, ablate and report from the command line.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use log::error;

use kws_core::audio::Environment;
use kws_core::harness::experiments::{checkpoint_dir, render_ablation};
use kws_core::harness::metrics::render_cells;
use kws_core::harness::{cmd_ablate, cmd_adapt_eval, cmd_report, cmd_resume, cmd_train, ExperimentConfig, Sweep};
use kws_core::{KwsError, Result};

#[derive(Parser)]
#[command(
    name = "kws",
    version,
    about = "Keyword spotting with denoising and continual learning"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train the dual-feature model, quantise it and write a checkpoint.
    Train {
        #[command(flatten)]
        common: Common,
        /// Write per-frame wavelet thresholds to <out>/tau.csv.
        #[arg(long)]
        dump_tau: bool,
    },
    /// Run deployment streams with continual updates for every environment and SNR.
    Adapt {
        #[command(flatten)]
        common: Common,
        /// Checkpoint directory (default: <out>/checkpoint).
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        /// Continue an interrupted cell from its directory.
        #[arg(long, conflicts_with = "checkpoint")]
        resume: Option<PathBuf>,
    },
    /// Sweep one parameter: alpha, prob_threshold, dist_threshold or components.
    Ablate {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        sweep: String,
        #[arg(long)]
        checkpoint: Option<PathBuf>,
    },
    /// Aggregate metrics CSV files in a directory into an environment × SNR table.
    Report {
        dir: PathBuf,
        /// Also write one SVG line plot per environment.
        #[arg(long)]
        plots: bool,
    },
}

#[derive(Args)]
struct Common {
    /// Flat key = value configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Spectral denoising weight in [0, 1].
    #[arg(long)]
    alpha: Option<f64>,
    /// Comma-separated SNRs in dB.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    snr: Option<Vec<f64>>,
    /// Comma-separated environments (DWASHING, NFIELD, OOFFICE, TCAR, SYN_WHITE, ...).
    #[arg(long, value_delimiter = ',')]
    env: Option<Vec<String>>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

impl Common {
    fn config(&self) -> Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(path) => ExperimentConfig::from_file(path)?,
            None => ExperimentConfig::default(),
        };
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        if let Some(alpha) = self.alpha {
            cfg.cl.alpha = alpha;
        }
        if let Some(snr) = &self.snr {
            cfg.snrs_db = snr.clone();
        }
        if let Some(env) = &self.env {
            cfg.environments = env.iter().map(|e| e.parse::<Environment>()).collect::<Result<_>>()?;
        }
        if let Some(out) = &self.out {
            cfg.output_dir = out.clone();
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Train { common, dump_tau } => {
            let mut cfg = common.config()?;
            cfg.dump_tau |= dump_tau;
            let out = cmd_train(&cfg)?;
            println!(
                "clean accuracy: float {:.2}%, int8 {:.2}%",
                100.0 * out.float_accuracy,
                100.0 * out.quantized_accuracy
            );
            println!("checkpoint: {}", checkpoint_dir(&cfg).display());
        }
        Command::Adapt {
            common,
            checkpoint,
            resume,
        } => {
            let out = match resume {
                Some(dir) => cmd_resume(&dir)?,
                None => {
                    let cfg = common.config()?;
                    let ckpt = checkpoint.unwrap_or_else(|| checkpoint_dir(&cfg));
                    cmd_adapt_eval(&cfg, &ckpt)?
                }
            };
            print!("{}", render_cells(&out.cells));
        }
        Command::Ablate {
            common,
            sweep,
            checkpoint,
        } => {
            let sweep: Sweep = sweep.parse()?;
            let cfg = common.config()?;
            let ckpt = checkpoint.unwrap_or_else(|| checkpoint_dir(&cfg));
            let rows = cmd_ablate(&cfg, &ckpt, sweep)?;
            print!("{}", render_ablation(&rows));
        }
        Command::Report { dir, plots } => print!("{}", cmd_report(Path::new(&dir), plots)?),
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            error!("{e}");
            eprintln!("error: {e}");
            match e {
                KwsError::Usage(_) | KwsError::Config { .. } => ExitCode::from(2),
                _ => ExitCode::FAILURE,
            }
        }
    }
}
