//! EFHT-partitions and the cumulative class-mass conditions under which noise
//! provably shortens (or lengthens) the expected hitting time.

use std::cmp::Ordering;
use std::fmt;

use crate::chain::{EfhtVector, LumpedChain, StateLabel};
use crate::ea::{AlgoConfig, EvalPolicy, Stepper};
use crate::error::{invalid, Error, Result};
use crate::noise::{NoiseModel, RandomSource};
use crate::problems::{BitString, ProblemSpec};
use crate::scalar::{sum_compensated, Scalar};

/// States grouped by equal EFHT, classes in strictly increasing EFHT order.
/// Class 0 is the optimal set.
#[derive(Debug, Clone, PartialEq)]
pub struct EfhtPartition<T> {
    states: Vec<StateLabel>,
    classes: Vec<Vec<usize>>,
    class_efht: Vec<T>,
    class_of: Vec<usize>,
}

impl<T: Scalar> EfhtPartition<T> {
    pub fn classes(&self) -> &[Vec<usize>] {
        &self.classes
    }

    pub fn class_efht(&self) -> &[T] {
        &self.class_efht
    }

    pub fn class_of(&self, state: usize) -> usize {
        self.class_of[state]
    }

    pub fn states(&self) -> &[StateLabel] {
        &self.states
    }

    /// Number of classes minus one.
    pub fn m(&self) -> usize {
        self.classes.len() - 1
    }

    /// Class masses of a kernel row.
    fn masses(&self, row: &[T]) -> Vec<T> {
        self.classes.iter().map(|class| sum_compensated(class.iter().map(|&s| row[s].clone()))).collect()
    }
}

/// Groups states whose EFHT differ from the smallest member of their class by
/// at most `tol`.
pub fn efht_partition<T: Scalar>(efht: &EfhtVector<T>, tol: &T) -> EfhtPartition<T> {
    let values = efht.values();
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).unwrap_or(Ordering::Equal));

    let mut classes: Vec<Vec<usize>> = Vec::new();
    let mut class_efht: Vec<T> = Vec::new();
    for idx in order {
        match class_efht.last() {
            Some(head) if values[idx].clone() - head.clone() <= *tol => {
                classes.last_mut().unwrap().push(idx);
            }
            _ => {
                classes.push(vec![idx]);
                class_efht.push(values[idx].clone());
            }
        }
    }
    let mut class_of = vec![0; values.len()];
    for (c, members) in classes.iter_mut().enumerate() {
        members.sort_unstable();
        for &s in members.iter() {
            class_of[s] = c;
        }
    }
    EfhtPartition { states: efht.states().to_vec(), classes, class_efht, class_of }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    /// Noisy cumulative mass on the best classes dominates everywhere.
    EasierConditionHolds,
    /// Noiseless cumulative mass dominates everywhere.
    HarderConditionHolds,
    Both,
    Neither,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Self::EasierConditionHolds => "easier",
            Self::HarderConditionHolds => "harder",
            Self::Both => "both",
            Self::Neither => "neither",
        };
        f.write_str(s)
    }
}

/// A `(state, i)` pair where one of the conditions fails.
#[derive(Debug, Clone, PartialEq)]
pub struct Witness<T> {
    pub state: StateLabel,
    /// Cumulative over classes `0..=class`.
    pub class: usize,
    pub noisy: T,
    pub noiseless: T,
}

impl<T: Scalar> fmt::Display for Witness<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "state {} classes 0..={}: noisy {} vs noiseless {}",
            self.state,
            self.class,
            self.noisy.to_f64_lossy(),
            self.noiseless.to_f64_lossy()
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DominanceReport<T> {
    pub verdict: Verdict,
    /// First `(x, i)` where the noisy chain puts less mass on the best classes.
    pub easier_violation: Option<Witness<T>>,
    /// First `(x, i)` where the noisy chain puts more mass on the best classes.
    pub harder_violation: Option<Witness<T>>,
}

impl<T> DominanceReport<T> {
    pub fn easier(&self) -> bool {
        matches!(self.verdict, Verdict::EasierConditionHolds | Verdict::Both)
    }

    pub fn harder(&self) -> bool {
        matches!(self.verdict, Verdict::HarderConditionHolds | Verdict::Both)
    }

    fn from_violations(easier_violation: Option<Witness<T>>, harder_violation: Option<Witness<T>>) -> Self {
        let verdict = match (easier_violation.is_none(), harder_violation.is_none()) {
            (true, true) => Verdict::Both,
            (true, false) => Verdict::EasierConditionHolds,
            (false, true) => Verdict::HarderConditionHolds,
            (false, false) => Verdict::Neither,
        };
        Self { verdict, easier_violation, harder_violation }
    }
}

fn check_spaces<T: Scalar>(
    noisy: &LumpedChain<T>,
    noiseless: &LumpedChain<T>,
    partition: &EfhtPartition<T>,
) -> Result<()> {
    if noisy.states() != noiseless.states() || partition.states() != noiseless.states() {
        return Err(invalid("noisy chain, noiseless chain and partition must share one state space"));
    }
    if (0..noisy.len()).any(|i| noisy.is_optimal(i) != noiseless.is_optimal(i)) {
        return Err(invalid("noisy and noiseless chains disagree on the optimal set"));
    }
    Ok(())
}

/// Compares, for every non-optimal state and every `i < m`, the mass each
/// chain puts on classes `0..=i` of the noiseless EFHT-partition.
pub fn dominance_check<T: Scalar>(
    noisy: &LumpedChain<T>,
    noiseless: &LumpedChain<T>,
    partition: &EfhtPartition<T>,
) -> Result<DominanceReport<T>> {
    check_spaces(noisy, noiseless, partition)?;
    let tol = T::row_tolerance();
    let mut easier = None;
    let mut harder = None;
    for x in noiseless.non_optimal() {
        let a = partition.masses(noisy.row(x));
        let b = partition.masses(noiseless.row(x));
        let (mut ca, mut cb) = (T::zero(), T::zero());
        for i in 0..partition.m() {
            ca = ca + a[i].clone();
            cb = cb + b[i].clone();
            let witness =
                || Witness { state: noiseless.states()[x], class: i, noisy: ca.clone(), noiseless: cb.clone() };
            if easier.is_none() && ca.clone() < cb.clone() - tol.clone() {
                easier = Some(witness());
            }
            if harder.is_none() && ca.clone() > cb.clone() + tol.clone() {
                harder = Some(witness());
            }
        }
    }
    Ok(DominanceReport::from_violations(easier, harder))
}

/// Simulated one-step rows over ones-count states.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimatedRows {
    /// `counts[i][j]`: steps from `|x|₁ = i` that ended at `|x|₁ = j`.
    pub counts: Vec<Vec<u64>>,
    pub steps_per_state: u64,
}

impl EstimatedRows {
    pub fn prob(&self, from: usize, to: usize) -> f64 {
        self.counts[from][to] as f64 / self.steps_per_state as f64
    }
}

/// Estimates the re-evaluation kernel of an arbitrary (1+λ)-EA by running
/// `steps_per_state` independent single iterations from each non-optimal
/// ones-count.
pub fn estimate_rows(
    config: &AlgoConfig,
    spec: &ProblemSpec,
    model: &NoiseModel,
    steps_per_state: u64,
    seed: u64,
) -> Result<EstimatedRows> {
    if config.policy != EvalPolicy::ReEvaluation {
        return Err(Error::Unsupported("row estimates need re-evaluation".into()));
    }
    if steps_per_state == 0 {
        return Err(invalid("steps_per_state must be positive"));
    }
    let n = spec.n();
    let mut stepper = Stepper::new(config, spec, model)?;
    let mut counts = vec![vec![0u64; n + 1]; n + 1];
    for (i, row) in counts.iter_mut().enumerate().take(n) {
        let rep = BitString::from_bits(&(0..n).map(|b| b < i).collect::<Vec<_>>());
        let mut rng = RandomSource::for_run(seed, i as u64);
        let mut x = rep.clone();
        for _ in 0..steps_per_state {
            x.clone_from(&rep);
            let mut ones = i;
            let mut stored = 0.0;
            stepper.step(&mut x, &mut ones, &mut stored, &mut rng);
            row[ones] += 1;
        }
    }
    counts[n][n] = steps_per_state;
    Ok(EstimatedRows { counts, steps_per_state })
}

/// [`dominance_check`] against simulated noisy rows. A condition is violated
/// only where the estimate lies more than `sigmas` binomial standard errors
/// (taken at the noiseless value) on the wrong side. The binomial variance is
/// floored at `1/steps` so that cells with almost no expected hits do not
/// flag on a single event.
pub fn dominance_check_estimated(
    estimated: &EstimatedRows,
    noiseless: &LumpedChain<f64>,
    partition: &EfhtPartition<f64>,
    sigmas: f64,
) -> Result<DominanceReport<f64>> {
    let s = noiseless.len();
    if estimated.counts.len() != s || noiseless.states().iter().enumerate().any(|(k, l)| *l != StateLabel::Ones(k)) {
        return Err(invalid("estimated rows and noiseless chain must share the ones-count state space"));
    }
    let steps = estimated.steps_per_state as f64;
    let mut easier = None;
    let mut harder = None;
    for x in noiseless.non_optimal() {
        let row: Vec<f64> = (0..s).map(|y| estimated.prob(x, y)).collect();
        let a = partition.masses(&row);
        let b = partition.masses(noiseless.row(x));
        let (mut ca, mut cb) = (0.0, 0.0);
        for i in 0..partition.m() {
            ca += a[i];
            cb += b[i];
            let sigma = (cb * (1.0 - cb)).max(1.0 / steps).sqrt() / steps.sqrt();
            let slack = sigmas * sigma + 1e-12;
            let witness = || Witness { state: noiseless.states()[x], class: i, noisy: ca, noiseless: cb };
            if easier.is_none() && ca < cb - slack {
                easier = Some(witness());
            }
            if harder.is_none() && ca > cb + slack {
                harder = Some(witness());
            }
        }
    }
    Ok(DominanceReport::from_violations(easier, harder))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::{efht_solve, noiseless_chain, noisy_chain_reeval};
    use crate::ea::SelectionRule;

    #[test]
    fn chain_against_itself_is_both() {
        let spec = ProblemSpec::jump(5, 3).unwrap();
        let chain = noiseless_chain(&spec, 1, &0.2).unwrap();
        let part = efht_partition(&efht_solve(&chain).unwrap(), &1e-9);
        let report = dominance_check(&chain, &chain, &part).unwrap();
        assert_eq!(report.verdict, Verdict::Both);
        assert!(report.easier_violation.is_none() && report.harder_violation.is_none());
    }

    #[test]
    fn onemax_levels_are_the_classes() {
        for lambda in [1, 3] {
            let spec = ProblemSpec::one_max(6).unwrap();
            let e = efht_solve(&noiseless_chain(&spec, lambda, &0.15).unwrap()).unwrap();
            let part = efht_partition(&e, &1e-9);
            assert_eq!(part.m(), 6);
            for (c, class) in part.classes().iter().enumerate() {
                // class c = states with c zeros
                assert_eq!(class, &vec![6 - c]);
            }
            assert!(part.class_efht().windows(2).all(|w| w[0] < w[1]));
        }
    }

    #[test]
    fn constant_efht_is_one_class() {
        let e = EfhtVector::new(
            vec![StateLabel::Ones(0), StateLabel::Ones(1), StateLabel::Ones(2)],
            vec![4.0, 4.0 + 1e-12, 0.0],
        )
        .unwrap();
        let part = efht_partition(&e, &1e-9);
        assert_eq!(part.classes(), &[vec![2], vec![0, 1]]);
    }

    #[test]
    fn mismatched_spaces_are_rejected() {
        let a = noiseless_chain(&ProblemSpec::one_max(4).unwrap(), 1, &0.2).unwrap();
        let b = noiseless_chain(&ProblemSpec::one_max(5).unwrap(), 1, &0.2).unwrap();
        let part = efht_partition(&efht_solve(&b).unwrap(), &1e-9);
        assert!(dominance_check(&a, &b, &part).is_err());
    }

    #[test]
    fn trap_additive_is_easier_and_onemax_one_bit_is_harder() {
        let trap = ProblemSpec::trap(4).unwrap();
        let plain = noiseless_chain(&trap, 1, &0.25).unwrap();
        let part = efht_partition(&efht_solve(&plain).unwrap(), &1e-9);
        let noisy =
            noisy_chain_reeval(&trap, &NoiseModel::additive(-4.0, 4.0).unwrap(), &SelectionRule::Standard, 1, &0.25)
                .unwrap();
        let report = dominance_check(&noisy, &plain, &part).unwrap();
        assert_eq!(report.verdict, Verdict::EasierConditionHolds);
        assert!(report.harder_violation.is_some());

        let onemax = ProblemSpec::one_max(4).unwrap();
        let plain = noiseless_chain(&onemax, 1, &0.25).unwrap();
        let part = efht_partition(&efht_solve(&plain).unwrap(), &1e-9);
        let noisy = noisy_chain_reeval(&onemax, &NoiseModel::one_bit(0.5).unwrap(), &SelectionRule::Standard, 1, &0.25)
            .unwrap();
        assert_eq!(dominance_check(&noisy, &plain, &part).unwrap().verdict, Verdict::HarderConditionHolds);
    }

    #[test]
    fn estimated_rows_agree_with_exact_kernel() {
        let spec = ProblemSpec::one_max(4).unwrap();
        let model = NoiseModel::one_bit(0.5).unwrap();
        let cfg = AlgoConfig::one_plus_one(0.25, EvalPolicy::ReEvaluation).unwrap();
        let est = estimate_rows(&cfg, &spec, &model, 200_000, 4).unwrap();
        let exact = noisy_chain_reeval(&spec, &model, &SelectionRule::Standard, 1, &0.25).unwrap();
        for i in 0..4 {
            for j in 0..=4 {
                let p: f64 = *exact.prob(i, j);
                let sigma = (p * (1.0 - p) / 200_000.0).sqrt();
                assert!((est.prob(i, j) - p).abs() <= 4.0 * sigma + 1e-12, "{i}->{j}");
            }
        }
    }
}
