use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ea::{run, AlgoConfig, RunRecord};
use crate::error::{invalid, Result};
use crate::lab::report::Report;
use crate::lab::Summary;
use crate::noise::{derive_seed, NoiseModel};
use crate::problems::ProblemSpec;

/// A noise family parameterised by a single level.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseFamily {
    /// `p_n = level`, level in `[0, 1]`.
    OneBit,
    /// `δ ~ U[−level, level]`.
    Additive,
    /// `δ ~ U[1, 1 + level]`.
    Multiplicative,
}

impl NoiseFamily {
    /// The model at `level`; level zero is exactly noiseless.
    pub fn at_level(self, level: f64) -> Result<NoiseModel> {
        if !(level.is_finite() && level >= 0.0) {
            return Err(invalid(format!("noise level must be finite and non-negative, got {level}")));
        }
        if level == 0.0 {
            return Ok(NoiseModel::Noiseless);
        }
        match self {
            Self::OneBit => NoiseModel::one_bit(level),
            Self::Additive => NoiseModel::additive(-level, level),
            Self::Multiplicative => NoiseModel::multiplicative(1.0, 1.0 + level),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PntConfig {
    /// Family template; its `n` is replaced by each entry of `sizes`.
    pub problem: ProblemSpec,
    pub algo: AlgoConfig,
    /// Use `p = 1/n` at each size instead of `algo.p`.
    #[serde(default)]
    pub p_one_over_n: bool,
    pub noise: NoiseFamily,
    pub levels: Vec<f64>,
    pub sizes: Vec<usize>,
    pub runs: u64,
    pub budget: u64,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PntRow {
    pub n: usize,
    pub level: f64,
    pub mean_evaluations_paper: f64,
    pub std_error: f64,
    pub success_rate: f64,
    pub runs: u64,
    pub censored: u64,
    pub lower_bound: bool,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct PntReport {
    pub rows: Vec<PntRow>,
}

impl PntReport {
    pub fn row(&self, n: usize, level: f64) -> Option<&PntRow> {
        self.rows.iter().find(|r| r.n == n && r.level == level)
    }
}

/// Censored running time and success rate over a `(size, level)` grid, in
/// size-major order.
pub fn pnt_scan(cfg: &PntConfig) -> Result<PntReport> {
    if cfg.runs == 0 || cfg.budget == 0 {
        return Err(invalid("runs and budget must be at least 1"));
    }
    let mut points = Vec::new();
    for &n in &cfg.sizes {
        let spec = cfg.problem.with_n(n)?;
        let algo = if cfg.p_one_over_n {
            AlgoConfig::new(cfg.algo.lambda, 1.0 / n as f64, cfg.algo.rule, cfg.algo.policy)?
        } else {
            cfg.algo
        };
        for &level in &cfg.levels {
            points.push((spec, algo, level, cfg.noise.at_level(level)?));
        }
    }
    let runs = cfg.runs;
    let records: Vec<RunRecord> = (0..points.len() as u64 * runs)
        .into_par_iter()
        .map(|job| {
            let (point, k) = (job / runs, job % runs);
            let (spec, algo, _, model) = &points[point as usize];
            run(algo, spec, model, cfg.budget, derive_seed(derive_seed(cfg.seed, point), k))
        })
        .collect::<Result<_>>()?;
    let rows = records
        .chunks(runs as usize)
        .zip(&points)
        .map(|(chunk, (spec, _, level, _))| {
            let s = Summary::of(chunk);
            PntRow {
                n: spec.n(),
                level: *level,
                mean_evaluations_paper: s.mean,
                std_error: s.std_error,
                success_rate: s.success_rate,
                runs: s.runs,
                censored: s.censored,
                lower_bound: s.censored > 0,
            }
        })
        .collect();
    Ok(PntReport { rows })
}

impl Report for PntReport {
    type Row = PntRow;
    const HEADER: &'static [&'static str] =
        &["n", "level", "mean_evaluations_paper", "std_error", "success_rate", "runs", "censored", "lower_bound"];

    fn rows(&self) -> &[PntRow] {
        &self.rows
    }

    fn from_rows(rows: Vec<PntRow>) -> Self {
        Self { rows }
    }
}
