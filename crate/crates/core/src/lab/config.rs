use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::ea::AlgoConfig;
use crate::error::{invalid, Result};
use crate::noise::NoiseModel;
use crate::problems::{BitString, ProblemSpec};

/// Evaluation budget per run when a config does not set one.
pub const DEFAULT_BUDGET: u64 = 10_000_000;

/// Where runs start.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialMode {
    /// Uniformly random initial solution per run.
    #[default]
    Uniform,
    /// Every one of the `2ⁿ` solutions, `runs_per_point` runs each.
    Sweep,
    Fixed(BitString),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub problem: ProblemSpec,
    pub algo: AlgoConfig,
    pub noise: NoiseModel,
    pub runs_per_point: u64,
    #[serde(default = "default_budget")]
    pub budget: u64,
    #[serde(default)]
    pub master_seed: u64,
    #[serde(default)]
    pub initial: InitialMode,
}

fn default_budget() -> u64 {
    DEFAULT_BUDGET
}

impl ExperimentConfig {
    pub fn new(problem: ProblemSpec, algo: AlgoConfig, noise: NoiseModel, runs_per_point: u64) -> Self {
        Self {
            problem,
            algo,
            noise,
            runs_per_point,
            budget: DEFAULT_BUDGET,
            master_seed: 0,
            initial: InitialMode::Uniform,
        }
    }

    pub fn with_budget(mut self, budget: u64) -> Self {
        self.budget = budget;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.master_seed = seed;
        self
    }

    pub fn with_initial(mut self, initial: InitialMode) -> Self {
        self.initial = initial;
        self
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        if self.runs_per_point == 0 {
            return Err(invalid("runs_per_point must be at least 1"));
        }
        if self.budget == 0 {
            return Err(invalid("budget must be at least 1"));
        }
        let n = self.problem.n();
        match &self.initial {
            InitialMode::Fixed(x) if x.len() != n => {
                Err(invalid(format!("fixed initial solution has {} bits, problem has n = {n}", x.len())))
            }
            InitialMode::Sweep if n > 63 => Err(invalid("sweeps need n <= 63")),
            _ => Ok(()),
        }
    }

    /// Number of starting points the experiment covers.
    pub fn points(&self) -> u64 {
        match self.initial {
            InitialMode::Sweep => 1u64 << self.problem.n(),
            _ => 1,
        }
    }

    pub fn total_runs(&self) -> u64 {
        self.points().saturating_mul(self.runs_per_point)
    }
}
