//! Experiment harness: one configured run end to end, and parallel sweeps
//! over channel noise levels.
//!
//! A run loads or synthesizes its dataset, splits off the validation set,
//! trains, evaluates the best checkpoint, and writes four artifacts into a
//! directory named by the configuration digest and seed:
//!
//! * `config.txt` — the canonical resolved configuration,
//! * `metrics.csv` — one row per epoch,
//! * `best.ckpt` / `final.ckpt` — model checkpoints,
//! * `summary.txt` — headline numbers and trajectories.
//!
//! Everything written is a pure function of the configuration, so running
//! the same configuration twice produces byte-identical artifacts. The held
//! out split doubles as the test set at this scale; the final error is
//! averaged over `eval_draws` independent channel draws from a dedicated
//! evaluation stream.

use crate::channel::ChannelSpec;
use crate::config::RunConfig;
use crate::data::split;
use crate::error::{Error, Result};
use crate::metrics::{write_metrics_csv, write_summary};
use crate::rng::{stream, StreamRole};
use crate::trainer::{evaluate, fit, TrainOutcome};
use crate::{checkpoint, Dataset};
use std::fs;
use std::path::PathBuf;

/// Artifact locations and headline results of one finished run.
#[derive(Debug)]
pub struct RunReport {
    pub dir: PathBuf,
    pub config_path: PathBuf,
    pub metrics_path: PathBuf,
    pub best_checkpoint: PathBuf,
    pub final_checkpoint: PathBuf,
    pub summary_path: PathBuf,
    pub outcome: TrainOutcome,
    /// Error of the best checkpoint on the held-out split.
    pub test_mse: f64,
}

/// Loads the configured dataset and returns `(train, valid)`.
pub fn prepare_data(cfg: &RunConfig) -> Result<(Dataset, Dataset)> {
    let full = cfg.data.load()?;
    split(&full, cfg.data.valid_fraction, cfg.data.split_seed())
}

/// Runs one configured experiment and writes its artifacts.
pub fn run_experiment(cfg: &RunConfig) -> Result<RunReport> {
    cfg.validate()?;
    let (train, valid) = prepare_data(cfg)?;
    let outcome = fit(&cfg.train, &train, &valid)?;
    let spec = ChannelSpec::new(cfg.train.epsilon)?;
    let mut eval_rng = stream(cfg.train.seed, StreamRole::Evaluation);
    let test_mse = evaluate(
        &outcome.best_model,
        &valid,
        &spec,
        cfg.eval_draws,
        &mut eval_rng,
    )?;

    let dir = cfg.output_dir.join(cfg.run_dir_name());
    fs::create_dir_all(&dir)?;
    let config_path = dir.join("config.txt");
    let metrics_path = dir.join("metrics.csv");
    let best_checkpoint = dir.join("best.ckpt");
    let final_checkpoint = dir.join("final.ckpt");
    let summary_path = dir.join("summary.txt");

    fs::write(&config_path, cfg.canonical())?;
    write_metrics_csv(&metrics_path, &outcome.history)?;
    checkpoint::save_model(&best_checkpoint, &outcome.best_model)?;
    checkpoint::save_model(&final_checkpoint, &outcome.final_model)?;
    write_summary(&summary_path, &cfg.run_dir_name(), &outcome, test_mse)?;

    Ok(RunReport {
        dir,
        config_path,
        metrics_path,
        best_checkpoint,
        final_checkpoint,
        summary_path,
        outcome,
        test_mse,
    })
}

/// Runs the base configuration once per noise level, in parallel, each in
/// its own run directory. Reports come back in the order given.
pub fn sweep(base: &RunConfig, epsilons: &[f64]) -> Result<Vec<RunReport>> {
    if epsilons.is_empty() {
        return Err(Error::InvalidArgument {
            name: "sweep epsilons",
            detail: "no noise levels given".into(),
        });
    }
    for (i, &a) in epsilons.iter().enumerate() {
        for &b in &epsilons[..i] {
            if a == b {
                return Err(Error::InvalidArgument {
                    name: "sweep epsilons",
                    detail: format!("noise level {a} appears twice"),
                });
            }
        }
    }
    std::thread::scope(|scope| {
        let handles: Vec<_> = epsilons
            .iter()
            .map(|&eps| {
                let mut cfg = base.clone();
                cfg.train.epsilon = eps;
                scope.spawn(move || run_experiment(&cfg))
            })
            .collect();
        handles
            .into_iter()
            .map(|h| {
                h.join().map_err(|_| Error::InvalidArgument {
                    name: "sweep worker",
                    detail: "worker thread panicked".into(),
                })?
            })
            .collect()
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::RunConfig;
    use std::path::Path;

    fn tiny_config(dir: &Path) -> RunConfig {
        let text = format!(
            "[channel]\nepsilon = 0.1\n\
             [model]\ncode_bits = 3\nenc_hidden = 6\ndec_hidden = 6\n\
             [objective]\nsamples = 2\n\
             [trainer]\nepochs = 3\nbatch_size = 8\n\
             [data]\nsource = random-binary\nn = 20\nd = 5\nvalid_fraction = 0.25\n\
             [output]\ndir = {}\neval_draws = 2\n",
            dir.display()
        );
        RunConfig::from_str_named(&text, "tiny.ini").unwrap()
    }

    #[test]
    fn run_writes_all_artifacts_and_report_matches_disk() {
        let tmp = tempfile::tempdir().unwrap();
        let cfg = tiny_config(tmp.path());
        let report = run_experiment(&cfg).unwrap();

        assert_eq!(report.dir, cfg.output_dir.join(cfg.run_dir_name()));
        assert_eq!(
            std::fs::read_to_string(&report.config_path).unwrap(),
            cfg.canonical()
        );
        let csv = std::fs::read_to_string(&report.metrics_path).unwrap();
        assert_eq!(csv.lines().count(), 1 + report.outcome.history.len());

        let best = checkpoint::load_model(&report.best_checkpoint).unwrap();
        assert_eq!(best, report.outcome.best_model);
        let fin = checkpoint::load_model(&report.final_checkpoint).unwrap();
        assert_eq!(fin, report.outcome.final_model);

        let summary = std::fs::read_to_string(&report.summary_path).unwrap();
        assert!(summary.contains(&format!("test_mse: {}\n", report.test_mse)));
        assert!(report.test_mse.is_finite());
    }

    #[test]
    fn identical_configs_produce_identical_bytes() {
        let tmp = tempfile::tempdir().unwrap();
        let cfg = tiny_config(tmp.path());
        let first = run_experiment(&cfg).unwrap();
        let paths = [
            first.config_path.clone(),
            first.metrics_path.clone(),
            first.best_checkpoint.clone(),
            first.final_checkpoint.clone(),
            first.summary_path.clone(),
        ];
        let before: Vec<Vec<u8>> = paths.iter().map(|p| std::fs::read(p).unwrap()).collect();
        let second = run_experiment(&cfg).unwrap();
        assert_eq!(first.dir, second.dir);
        for (p, old) in paths.iter().zip(&before) {
            assert_eq!(&std::fs::read(p).unwrap(), old, "{} changed", p.display());
        }
    }

    #[test]
    fn sweep_runs_each_noise_level_in_its_own_directory() {
        let tmp = tempfile::tempdir().unwrap();
        let cfg = tiny_config(tmp.path());
        let reports = sweep(&cfg, &[0.05, 0.2]).unwrap();
        assert_eq!(reports.len(), 2);
        assert_ne!(reports[0].dir, reports[1].dir);
        for (r, eps) in reports.iter().zip([0.05, 0.2]) {
            assert!(r.metrics_path.exists());
            let text = std::fs::read_to_string(&r.config_path).unwrap();
            assert!(text.contains(&format!("channel.epsilon={eps}\n")));
        }
        assert!(sweep(&cfg, &[]).is_err());
        assert!(sweep(&cfg, &[0.1, 0.1]).is_err());
    }

    #[test]
    fn evaluation_is_reproducible_from_the_report() {
        let tmp = tempfile::tempdir().unwrap();
        let cfg = tiny_config(tmp.path());
        let report = run_experiment(&cfg).unwrap();
        let spec = ChannelSpec::new(cfg.train.epsilon).unwrap();
        let (_, valid) = prepare_data(&cfg).unwrap();
        let again = evaluate(
            &report.outcome.best_model,
            &valid,
            &spec,
            cfg.eval_draws,
            &mut stream(cfg.train.seed, StreamRole::Evaluation),
        )
        .unwrap();
        assert_eq!(again.to_bits(), report.test_mse.to_bits());
    }
}
