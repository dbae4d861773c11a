//! Evolutionary algorithms under noisy fitness evaluation.
//!
//! The crate has two halves. [`ea`] runs the (1+λ)-EA with bitwise mutation
//! under the noise channels of [`noise`] and the selection rules of
//! [`ea::SelectionRule`]. [`chain`] builds the exact Markov chains those runs
//! follow on the benchmark [`problems`] and solves them for expected hitting
//! times, so that simulation results can be checked against exact values.
//! [`lab`] wraps both into reproducible, CSV-emitting experiments.
//!
//! ```
//! use noisy_ea::{efht_solve, noiseless_chain, ProblemSpec, StateLabel};
//!
//! let trap = ProblemSpec::trap(3).unwrap();
//! let chain = noiseless_chain(&trap, 1, &(1.0f64 / 3.0)).unwrap();
//! let efht = efht_solve(&chain).unwrap();
//! assert!((efht.get(StateLabel::Ones(0)).unwrap() - 27.0).abs() < 1e-9);
//! ```

pub mod chain;
pub mod ea;
mod error;
pub mod lab;
pub mod noise;
pub mod problems;
pub mod scalar;

pub use chain::{
    dominance_check, drift_report, efht_partition, efht_solve, lemma4_oracle, noiseless_chain, noisy_chain_reeval,
    noisy_chain_singleeval, offspring_ones_distribution, StateLabel, Verdict,
};
pub use ea::{accept, mutate, run, run_from, AlgoConfig, EvalPolicy, RunRecord, SelectionRule};
pub use error::{Error, Result};
pub use noise::{comparison_probabilities, noisy_fitness, NoiseModel, RandomSource};
pub use problems::{BitString, Family, ProblemSpec};
pub use scalar::{Rational, Scalar};

/// Chain over `f64` probabilities.
pub type Chain = chain::LumpedChain<f64>;
/// Chain over exact rationals.
pub type ExactChain = chain::LumpedChain<Rational>;
pub type Efht = chain::EfhtVector<f64>;
pub type ExactEfht = chain::EfhtVector<Rational>;
pub type Partition = chain::EfhtPartition<f64>;
pub type Dominance = chain::DominanceReport<f64>;
pub type Drift = chain::DriftReport<f64>;
