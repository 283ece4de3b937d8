//! Command-line front end: train, evaluate, sweep, compare-sscc, selftest.
//!
//! Every verb that reads a configuration file accepts the same override
//! story: named flags mirror the most common `section.key` entries, and
//! `--set section.key=value` reaches anything else. Overrides are applied
//! on top of the file in the order named-flags-then---set, so the most
//! explicit wins.

use clap::{Parser, Subcommand};
use jscc_core::channel::ChannelSpec;
use jscc_core::checkpoint;
use jscc_core::config::RunConfig;
use jscc_core::harness::{prepare_data, run_experiment, sweep};
use jscc_core::rng::{stream, StreamRole};
use jscc_core::selftest::{all_passed, run_selftest};
use jscc_core::sscc::{compare_sscc, render_comparison, SsccTable};
use jscc_core::trainer::evaluate;
use jscc_core::Dataset;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "jscc",
    version,
    about = "Joint source-channel coding over a binary symmetric channel"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// Flags shared by every config-driven verb.
#[derive(clap::Args)]
struct ConfigArgs {
    /// Configuration file.
    #[arg(long)]
    config: PathBuf,
    /// Channel flip probability (overrides channel.epsilon).
    #[arg(long)]
    epsilon: Option<f64>,
    /// Training seed (overrides trainer.seed).
    #[arg(long)]
    seed: Option<u64>,
    /// Epoch budget (overrides trainer.epochs).
    #[arg(long)]
    epochs: Option<usize>,
    /// Output directory (overrides output.dir).
    #[arg(long)]
    output: Option<PathBuf>,
    /// Extra `section.key=value` overrides, most explicit last.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

impl ConfigArgs {
    fn load(&self) -> Result<RunConfig, jscc_core::Error> {
        let mut overrides: Vec<(String, String)> = Vec::new();
        if let Some(e) = self.epsilon {
            overrides.push(("channel.epsilon".into(), e.to_string()));
        }
        if let Some(s) = self.seed {
            overrides.push(("trainer.seed".into(), s.to_string()));
        }
        if let Some(n) = self.epochs {
            overrides.push(("trainer.epochs".into(), n.to_string()));
        }
        if let Some(dir) = &self.output {
            overrides.push(("output.dir".into(), dir.display().to_string()));
        }
        for pair in &self.set {
            let (k, v) = pair.split_once('=').ok_or_else(|| jscc_core::Error::Config {
                path: "--set".into(),
                line: 0,
                detail: format!("`{pair}` is not of the form section.key=value"),
            })?;
            overrides.push((k.trim().to_string(), v.trim().to_string()));
        }
        RunConfig::from_file_with(&self.config, &overrides)
    }
}

#[derive(clap::ValueEnum, Clone, Copy, PartialEq)]
enum Split {
    Valid,
    Train,
    All,
}

#[derive(Subcommand)]
enum Command {
    /// Train a model and write metrics, checkpoints, and a summary.
    Train(ConfigArgs),
    /// Evaluate a saved checkpoint on the configured dataset.
    Evaluate {
        #[command(flatten)]
        config: ConfigArgs,
        /// Checkpoint to load.
        #[arg(long)]
        checkpoint: PathBuf,
        /// Independent channel draws to average.
        #[arg(long)]
        draws: Option<usize>,
        /// Which part of the dataset to evaluate on.
        #[arg(long, value_enum, default_value = "valid")]
        split: Split,
    },
    /// Train once per channel noise level, in parallel.
    Sweep {
        #[command(flatten)]
        config: ConfigArgs,
        /// Comma-separated flip probabilities, e.g. 0.1,0.2,0.3,0.4.
        #[arg(long, value_delimiter = ',', required = true)]
        epsilons: Vec<f64>,
    },
    /// Compare a checkpoint's channel budget against a separate
    /// source/channel design at matched distortion.
    CompareSscc {
        #[command(flatten)]
        config: ConfigArgs,
        /// Checkpoint to load.
        #[arg(long)]
        checkpoint: PathBuf,
        /// Rate-distortion table: `distortion,source_bits` per line.
        #[arg(long)]
        table: PathBuf,
        /// Independent channel draws to average per image.
        #[arg(long)]
        draws: Option<usize>,
        /// Which part of the dataset to evaluate on.
        #[arg(long, value_enum, default_value = "valid")]
        split: Split,
    },
    /// Run the built-in diagnostic suite.
    Selftest {
        /// Seed for the randomized checks.
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

fn pick_split(cfg: &RunConfig, split: Split) -> Result<Dataset, jscc_core::Error> {
    if split == Split::All {
        return cfg.data.load();
    }
    let (train, valid) = prepare_data(cfg)?;
    Ok(match split {
        Split::Train => train,
        _ => valid,
    })
}

fn run(cli: Cli) -> Result<ExitCode, jscc_core::Error> {
    match cli.command {
        Command::Train(args) => {
            let cfg = args.load()?;
            let report = run_experiment(&cfg)?;
            println!("run_dir: {}", report.dir.display());
            println!("epochs_run: {}", report.outcome.history.len());
            println!("best_epoch: {}", report.outcome.best_epoch);
            println!("best_valid_mse: {}", report.outcome.best_valid_mse);
            println!("test_mse: {}", report.test_mse);
        }
        Command::Evaluate {
            config,
            checkpoint,
            draws,
            split,
        } => {
            let cfg = config.load()?;
            let model = checkpoint::load_model(&checkpoint)?;
            let data = pick_split(&cfg, split)?;
            let spec = ChannelSpec::new(cfg.train.epsilon)?;
            let mut rng = stream(cfg.train.seed, StreamRole::Evaluation);
            let draws = draws.unwrap_or(cfg.eval_draws);
            let mse = evaluate(&model, &data, &spec, draws, &mut rng)?;
            println!("examples: {}", data.len());
            println!("draws: {draws}");
            println!("epsilon: {}", cfg.train.epsilon);
            println!("mse: {mse}");
        }
        Command::Sweep { config, epsilons } => {
            let cfg = config.load()?;
            let reports = sweep(&cfg, &epsilons)?;
            println!("epsilon,test_mse,run_dir");
            for (eps, report) in epsilons.iter().zip(&reports) {
                println!("{eps},{},{}", report.test_mse, report.dir.display());
            }
        }
        Command::CompareSscc {
            config,
            checkpoint,
            table,
            draws,
            split,
        } => {
            let cfg = config.load()?;
            let model = checkpoint::load_model(&checkpoint)?;
            let table = SsccTable::from_file(&table)?;
            let data = pick_split(&cfg, split)?;
            let spec = ChannelSpec::new(cfg.train.epsilon)?;
            let mut rng = stream(cfg.train.seed, StreamRole::Evaluation);
            let draws = draws.unwrap_or(cfg.eval_draws);
            let cmp = compare_sscc(&model, &data, &spec, &table, draws, &mut rng)?;
            print!("{}", render_comparison(&cmp));
        }
        Command::Selftest { seed } => {
            let outcomes = run_selftest(seed);
            for o in &outcomes {
                let tag = if o.passed { "ok  " } else { "FAIL" };
                println!("{tag} {:<24} {}", o.name, o.detail);
            }
            if !all_passed(&outcomes) {
                return Ok(ExitCode::FAILURE);
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
