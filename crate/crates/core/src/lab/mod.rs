//! Seeded Monte Carlo experiments over the EA and their CSV reports.
//!
//! Every experiment is a pure function of its configuration: each run draws
//! from its own stream derived from the master seed and the run's position, and
//! runs are executed on the rayon pool and collected in a fixed order.

mod config;
mod cover;
mod ert;
mod gap;
mod pnt;
mod report;

pub use config::{ExperimentConfig, InitialMode, DEFAULT_BUDGET};
pub use cover::{cover_time_path, cover_time_path_from, CoverReport, CoverRow};
pub use ert::{ert_sweep, ErtReport, ErtRow};
pub use gap::{gap_from_reports, gap_sweep, GapReport, GapRow};
pub use pnt::{pnt_scan, NoiseFamily, PntConfig, PntReport, PntRow};
pub use report::{efht_report, emit_csv, read_csv, write_csv, EfhtReport, EfhtRow, Report};

use crate::ea::RunRecord;

/// Mean, standard error, success rate and censoring of a batch of runs,
/// measured in charged evaluations (`evaluations_paper`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Summary {
    pub mean: f64,
    pub std_error: f64,
    pub success_rate: f64,
    pub runs: u64,
    pub censored: u64,
}

impl Summary {
    pub fn of(records: &[RunRecord]) -> Self {
        let k = records.len() as f64;
        let mean = records.iter().map(|r| r.evaluations_paper as f64).sum::<f64>() / k;
        let std_error = if records.len() < 2 {
            0.0
        } else {
            let ss: f64 = records.iter().map(|r| (r.evaluations_paper as f64 - mean).powi(2)).sum();
            (ss / (k - 1.0)).sqrt() / k.sqrt()
        };
        let successes = records.iter().filter(|r| r.success).count() as u64;
        Self {
            mean,
            std_error,
            success_rate: successes as f64 / k,
            runs: records.len() as u64,
            censored: records.len() as u64 - successes,
        }
    }
}
