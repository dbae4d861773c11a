use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ea::{run, run_from, RunRecord};
use crate::error::Result;
use crate::lab::report::Report;
use crate::lab::{ExperimentConfig, InitialMode, Summary};
use crate::noise::derive_seed;
use crate::problems::BitString;

/// Estimated running time from one starting point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErtRow {
    /// Integer value of the starting solution for sweeps, the bit string for a
    /// fixed start, `uniform` otherwise.
    pub label: String,
    pub mean_evaluations_paper: f64,
    pub std_error: f64,
    pub success_rate: f64,
    pub runs: u64,
    pub censored: u64,
    /// Set when some run hit the budget, so the mean only bounds the ERT from
    /// below.
    pub lower_bound: bool,
}

impl ErtRow {
    pub(crate) fn from_summary(label: String, s: Summary) -> Self {
        Self {
            label,
            mean_evaluations_paper: s.mean,
            std_error: s.std_error,
            success_rate: s.success_rate,
            runs: s.runs,
            censored: s.censored,
            lower_bound: s.censored > 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ErtReport {
    pub rows: Vec<ErtRow>,
}

impl ErtReport {
    pub fn row(&self, label: &str) -> Option<&ErtRow> {
        self.rows.iter().find(|r| r.label == label)
    }
}

/// Runs `runs_per_point` seeded runs from every starting point of `cfg`.
pub fn ert_sweep(cfg: &ExperimentConfig) -> Result<ErtReport> {
    cfg.validate()?;
    let n = cfg.problem.n();
    let points = cfg.points();
    let runs = cfg.runs_per_point;
    let records: Vec<RunRecord> = (0..points * runs)
        .into_par_iter()
        .map(|job| {
            let (point, k) = (job / runs, job % runs);
            let seed = derive_seed(derive_seed(cfg.master_seed, point), k);
            match &cfg.initial {
                InitialMode::Uniform => run(&cfg.algo, &cfg.problem, &cfg.noise, cfg.budget, seed),
                InitialMode::Sweep => {
                    let x = BitString::from_index(n, point);
                    run_from(&cfg.algo, &cfg.problem, &cfg.noise, cfg.budget, seed, &x)
                }
                InitialMode::Fixed(x) => run_from(&cfg.algo, &cfg.problem, &cfg.noise, cfg.budget, seed, x),
            }
        })
        .collect::<Result<_>>()?;

    let rows = records
        .chunks(runs as usize)
        .enumerate()
        .map(|(point, chunk)| {
            let label = match &cfg.initial {
                InitialMode::Uniform => "uniform".to_string(),
                InitialMode::Sweep => point.to_string(),
                InitialMode::Fixed(x) => x.to_string(),
            };
            ErtRow::from_summary(label, Summary::of(chunk))
        })
        .collect();
    Ok(ErtReport { rows })
}

impl Report for ErtReport {
    type Row = ErtRow;
    const HEADER: &'static [&'static str] =
        &["label", "mean_evaluations_paper", "std_error", "success_rate", "runs", "censored", "lower_bound"];

    fn rows(&self) -> &[ErtRow] {
        &self.rows
    }

    fn from_rows(rows: Vec<ErtRow>) -> Self {
        Self { rows }
    }
}
