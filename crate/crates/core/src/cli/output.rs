//! Output files: `history.csv`, `comparison.csv`, `report.txt`, `manifest.txt`.

use std::fs;
use std::io;
use std::path::Path;

use crate::bench::{Comparison, TrainReport};

pub const HISTORY_HEADER: [&str; 4] = ["iter", "train_error_pct", "test_error_pct", "grad_norm"];
pub const COMPARISON_HEADER: [&str; 5] = [
    "optimizer",
    "train_error_pct",
    "test_error_pct",
    "iterations",
    "wall_clock_s",
];

fn csv_err(e: csv::Error) -> io::Error {
    io::Error::other(e)
}

/// Per-iteration history. Carries no timing data, so identical runs give
/// identical bytes.
pub fn write_history(path: &Path, report: &TrainReport) -> io::Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    w.write_record(HISTORY_HEADER).map_err(csv_err)?;
    for row in &report.history {
        w.write_record([
            row.iter.to_string(),
            row.train_error_pct.to_string(),
            row.test_error_pct.to_string(),
            row.grad_norm.to_string(),
        ])
        .map_err(csv_err)?;
    }
    w.flush()
}

pub fn write_comparison(path: &Path, cmp: &Comparison) -> io::Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    w.write_record(COMPARISON_HEADER).map_err(csv_err)?;
    for r in [&cmp.bfgs, &cmp.gd] {
        w.write_record([
            r.optimizer.to_string(),
            r.train_error_pct.to_string(),
            r.test_error_pct.to_string(),
            r.iterations.to_string(),
            r.wall_clock_s.to_string(),
        ])
        .map_err(csv_err)?;
    }
    w.flush()
}

pub fn write_key_values(path: &Path, pairs: &[(&str, String)]) -> io::Result<()> {
    let text: String = pairs.iter().map(|(k, v)| format!("{k} = {v}\n")).collect();
    fs::write(path, text)
}

pub fn report_pairs(function: &str, report: &TrainReport) -> Vec<(&'static str, String)> {
    vec![
        ("function", function.to_string()),
        ("optimizer", report.optimizer.to_string()),
        ("status", report.status.to_string()),
        ("train_error_pct", report.train_error_pct.to_string()),
        ("test_error_pct", report.test_error_pct.to_string()),
        ("iterations", report.iterations.to_string()),
        ("wall_clock_s", report.wall_clock_s.to_string()),
        ("n_train", report.n_train.to_string()),
        ("n_test", report.n_test.to_string()),
        ("skipped_updates", report.skipped_updates.to_string()),
        ("initial_param_hash", report.initial_param_hash.clone()),
    ]
}

/// Text table in the layout of the classic optimizer comparison.
pub fn comparison_table(function: &str, cmp: &Comparison) -> String {
    let mut out = format!("Comparative performance (MSE %) on {function}\n");
    out.push_str(&format!(
        "{:<20} {:>16} {:>16} {:>10} {:>14}\n",
        "", "train error %", "test error %", "iterations", "wall clock s"
    ));
    for (label, r) in [("Proposed (BFGS)", &cmp.bfgs), ("Gradient Descent", &cmp.gd)] {
        out.push_str(&format!(
            "{:<20} {:>15.6}% {:>15.6}% {:>10} {:>14.3}\n",
            label, r.train_error_pct, r.test_error_pct, r.iterations, r.wall_clock_s
        ));
    }
    out
}
