//! Metrics serialization: the per-epoch CSV and the plain-text run summary.
//!
//! Both outputs are byte-deterministic for a given history: floats are
//! written with Rust's shortest round-trip formatting, rows follow epoch
//! order, and nothing time- or host-dependent is ever written.

use crate::error::Result;
use crate::trainer::{EpochRecord, TrainOutcome};
use std::fs;
use std::path::Path;

/// Column order of the metrics CSV.
pub const CSV_HEADER: &str = "epoch,l_rec,l_com,beta,beta_max,i_xy,i_xyhat,valid_mse";

/// Renders the history as CSV text, header first, one row per epoch.
pub fn render_metrics_csv(history: &[EpochRecord]) -> String {
    let mut out = String::with_capacity(64 * (history.len() + 1));
    out.push_str(CSV_HEADER);
    out.push('\n');
    for r in history {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            r.epoch, r.l_rec, r.l_com, r.beta, r.beta_max, r.i_xy, r.i_xyhat, r.valid_mse
        ));
    }
    out
}

pub fn write_metrics_csv(path: &Path, history: &[EpochRecord]) -> Result<()> {
    fs::write(path, render_metrics_csv(history))?;
    Ok(())
}

/// Renders the run summary: headline numbers plus the beta and information
/// trajectories, one comma-separated line each.
pub fn render_summary(label: &str, outcome: &TrainOutcome, test_mse: f64) -> String {
    let join = |f: fn(&EpochRecord) -> f64| -> String {
        outcome
            .history
            .iter()
            .map(|r| f(r).to_string())
            .collect::<Vec<_>>()
            .join(",")
    };
    let mut out = String::new();
    out.push_str(&format!("run: {label}\n"));
    out.push_str(&format!("epochs_run: {}\n", outcome.history.len()));
    out.push_str(&format!("stopped_early: {}\n", outcome.stopped_early));
    out.push_str(&format!("best_epoch: {}\n", outcome.best_epoch));
    out.push_str(&format!("best_valid_mse: {}\n", outcome.best_valid_mse));
    out.push_str(&format!("test_mse: {}\n", test_mse));
    out.push_str(&format!("beta_trajectory: {}\n", join(|r| r.beta)));
    out.push_str(&format!("beta_max_trajectory: {}\n", join(|r| r.beta_max)));
    out.push_str(&format!("i_xy_trajectory: {}\n", join(|r| r.i_xy)));
    out.push_str(&format!("i_xyhat_trajectory: {}\n", join(|r| r.i_xyhat)));
    out.push_str(&format!("valid_mse_trajectory: {}\n", join(|r| r.valid_mse)));
    out
}

pub fn write_summary(path: &Path, label: &str, outcome: &TrainOutcome, test_mse: f64) -> Result<()> {
    fs::write(path, render_summary(label, outcome, test_mse))?;
    Ok(())
}
