//! Exact Markov-chain analysis of the EA on lumped state spaces.
//!
//! Every supported problem has a fitness that depends on `x` only through
//! `|x|₁`, and mutation and one-bit noise are symmetric in bit positions, so
//! the EA's chain lumps onto ones-counts (or onto `(ones, stored value)` pairs
//! under single evaluation). The builders in [`kernels`] produce those lumped
//! kernels exactly; [`efht_solve`] turns them into expected first hitting
//! times.

mod dominance;
mod drift;
mod kernels;
mod lemma4;
mod solve;

use std::fmt;

use crate::error::{invalid, Result};
use crate::scalar::{sum_compensated, Scalar};

pub use dominance::{
    dominance_check, dominance_check_estimated, efht_partition, estimate_rows, DominanceReport, EfhtPartition,
    EstimatedRows, Verdict, Witness,
};
pub use drift::{drift_report, DriftReport};
pub use kernels::{noiseless_chain, noisy_chain_reeval, noisy_chain_singleeval, offspring_ones_distribution};
pub use lemma4::{lemma4_fuzz, lemma4_oracle, random_lemma4_instance, FuzzReport, Lemma4Instance};
pub use solve::efht_solve;

/// Label of a lumped state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum StateLabel {
    /// All solutions with this many one-bits.
    Ones(usize),
    /// Single-evaluation state: current `|x|₁` and the stored noisy value.
    Stored { ones: usize, value: i64 },
}

impl StateLabel {
    pub fn ones(&self) -> usize {
        match *self {
            Self::Ones(k) | Self::Stored { ones: k, .. } => k,
        }
    }
}

impl fmt::Display for StateLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Ones(k) => write!(f, "{k}"),
            Self::Stored { ones, value } => write!(f, "{ones}:{value}"),
        }
    }
}

/// Finite row-stochastic chain with a designated optimal set.
#[derive(Debug, Clone, PartialEq)]
pub struct LumpedChain<T> {
    states: Vec<StateLabel>,
    kernel: Vec<Vec<T>>,
    optimal: Vec<bool>,
    initial: Vec<T>,
}

impl<T: Scalar> LumpedChain<T> {
    /// `initial` is the state distribution induced by a uniformly random
    /// starting solution.
    pub fn new(states: Vec<StateLabel>, kernel: Vec<Vec<T>>, optimal: Vec<bool>, initial: Vec<T>) -> Result<Self> {
        let s = states.len();
        if kernel.len() != s || optimal.len() != s || initial.len() != s {
            return Err(invalid("states, kernel, optimal flags and initial law must agree in size"));
        }
        if !optimal.iter().any(|&o| o) {
            return Err(invalid("chain has no optimal state"));
        }
        let tol = T::row_tolerance();
        for (label, row) in states.iter().zip(&kernel) {
            if row.len() != s {
                return Err(invalid(format!("row {label} has {} entries, expected {s}", row.len())));
            }
            if row.iter().any(|p| *p < T::zero()) {
                return Err(invalid(format!("row {label} has a negative entry")));
            }
            let total = sum_compensated(row.iter().cloned());
            if (total.clone() - T::one()).abs() > tol {
                return Err(invalid(format!("row {label} sums to {total:?}")));
            }
        }
        Ok(Self { states, kernel, optimal, initial })
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn states(&self) -> &[StateLabel] {
        &self.states
    }

    pub fn index_of(&self, label: StateLabel) -> Option<usize> {
        self.states.iter().position(|&s| s == label)
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.kernel[i]
    }

    pub fn prob(&self, from: usize, to: usize) -> &T {
        &self.kernel[from][to]
    }

    pub fn is_optimal(&self, i: usize) -> bool {
        self.optimal[i]
    }

    pub fn initial(&self) -> &[T] {
        &self.initial
    }

    pub fn non_optimal(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.len()).filter(|&i| !self.optimal[i])
    }
}

/// Expected first hitting time of the optimal set, per state.
#[derive(Debug, Clone, PartialEq)]
pub struct EfhtVector<T> {
    states: Vec<StateLabel>,
    values: Vec<T>,
}

impl<T: Scalar> EfhtVector<T> {
    pub fn new(states: Vec<StateLabel>, values: Vec<T>) -> Result<Self> {
        if states.len() != values.len() {
            return Err(invalid("state and value counts differ"));
        }
        Ok(Self { states, values })
    }

    pub fn states(&self) -> &[StateLabel] {
        &self.states
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn get(&self, label: StateLabel) -> Option<&T> {
        self.states.iter().position(|&s| s == label).map(|i| &self.values[i])
    }

    /// `Σ π(x) E(x)`
    pub fn mean_under(&self, weights: &[T]) -> T {
        sum_compensated(weights.iter().zip(&self.values).map(|(w, v)| w.clone() * v.clone()))
    }

    pub fn max(&self) -> T {
        self.values.iter().cloned().fold(T::zero(), |a, b| if b > a { b } else { a })
    }

    pub fn to_f64(&self) -> EfhtVector<f64> {
        EfhtVector { states: self.states.clone(), values: self.values.iter().map(Scalar::to_f64_lossy).collect() }
    }
}
