use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::lab::report::Report;
use crate::lab::{ert_sweep, ErtReport, ExperimentConfig};

/// Relative slowdown `(ERT_noisy − ERT_noiseless) / ERT_noiseless` from one
/// starting point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapRow {
    pub label: String,
    pub gap: f64,
    /// Delta-method standard error from the two means' standard errors.
    pub std_error: f64,
    pub noisy_mean: f64,
    pub noiseless_mean: f64,
    /// The noisy mean is censored, so `gap` is a lower bound.
    pub noisy_censored: bool,
    /// The noiseless mean is censored, so `gap` may overstate the slowdown.
    pub noiseless_censored: bool,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct GapReport {
    pub rows: Vec<GapRow>,
}

impl GapReport {
    /// Average gap over all rows and its standard error, treating rows as
    /// independent.
    pub fn mean_gap(&self) -> (f64, f64) {
        let k = self.rows.len() as f64;
        let mean = self.rows.iter().map(|r| r.gap).sum::<f64>() / k;
        let var: f64 = self.rows.iter().map(|r| r.std_error * r.std_error).sum();
        (mean, var.sqrt() / k)
    }

    pub fn any_censored(&self) -> bool {
        self.rows.iter().any(|r| r.noisy_censored || r.noiseless_censored)
    }
}

/// Pairs two ERT reports by label.
pub fn gap_from_reports(noisy: &ErtReport, noiseless: &ErtReport) -> Result<GapReport> {
    if noisy.rows.len() != noiseless.rows.len() {
        return Err(invalid("reports cover different starting points"));
    }
    let rows = noisy
        .rows
        .iter()
        .zip(&noiseless.rows)
        .map(|(a, b)| {
            if a.label != b.label {
                return Err(invalid(format!("row labels differ: {} vs {}", a.label, b.label)));
            }
            let (ma, mb) = (a.mean_evaluations_paper, b.mean_evaluations_paper);
            let gap = (ma - mb) / mb;
            let std_error = ((a.std_error / mb).powi(2) + (ma * b.std_error / (mb * mb)).powi(2)).sqrt();
            Ok(GapRow {
                label: a.label.clone(),
                gap,
                std_error,
                noisy_mean: ma,
                noiseless_mean: mb,
                noisy_censored: a.lower_bound,
                noiseless_censored: b.lower_bound,
            })
        })
        .collect::<Result<_>>()?;
    Ok(GapReport { rows })
}

/// Runs both experiments and reports the gap per starting point. The configs
/// may differ only in their noise model.
pub fn gap_sweep(noisy: &ExperimentConfig, noiseless: &ExperimentConfig) -> Result<GapReport> {
    let mut aligned = noiseless.clone();
    aligned.noise = noisy.noise;
    if aligned != *noisy {
        return Err(invalid("gap configs must be identical apart from the noise model"));
    }
    gap_from_reports(&ert_sweep(noisy)?, &ert_sweep(noiseless)?)
}

impl Report for GapReport {
    type Row = GapRow;
    const HEADER: &'static [&'static str] =
        &["label", "gap", "std_error", "noisy_mean", "noiseless_mean", "noisy_censored", "noiseless_censored"];

    fn rows(&self) -> &[GapRow] {
        &self.rows
    }

    fn from_rows(rows: Vec<GapRow>) -> Self {
        Self { rows }
    }
}
