use std::collections::HashMap;

use crate::chain::{LumpedChain, StateLabel};
use crate::ea::SelectionRule;
use crate::error::{invalid, Error, Result};
use crate::noise::{prob_diff_at_least, prob_diff_equal, NoiseModel, NoisyLaw};
use crate::problems::ProblemSpec;
use crate::scalar::{sum_compensated, CompensatedSum, Scalar};

fn check_rate<T: Scalar>(p: &T) -> Result<()> {
    if !(*p > T::zero() && *p < T::one()) {
        return Err(invalid(format!("mutation probability must lie in (0, 1), got {p:?}")));
    }
    Ok(())
}

/// `P[Bin(m, p) = k]` for `k = 0..=m`.
fn binomial_pmf<T: Scalar>(m: usize, p: &T) -> Vec<T> {
    let q = T::one() - p.clone();
    let p_pow: Vec<T> = (0..=m).map(|k| p.powu(k)).collect();
    let q_pow: Vec<T> = (0..=m).map(|k| q.powu(k)).collect();
    let mut coef = T::one();
    let mut out = Vec::with_capacity(m + 1);
    for k in 0..=m {
        if k > 0 {
            coef = coef * T::from_count(m - k + 1) / T::from_count(k);
        }
        out.push(coef.clone() * p_pow[k].clone() * q_pow[m - k].clone());
    }
    out
}

/// Law of `|mutate(x)|₁` given `|x|₁ = i`, indexed by the resulting
/// ones-count: `a` of the `i` ones flip down and `b` of the `n − i` zeros
/// flip up, landing on `i − a + b`.
pub fn offspring_ones_distribution<T: Scalar>(n: usize, i: usize, p: &T) -> Result<Vec<T>> {
    if i > n {
        return Err(invalid(format!("parent ones-count {i} exceeds n = {n}")));
    }
    check_rate(p)?;
    let down = binomial_pmf(i, p);
    let up = binomial_pmf(n - i, p);
    let mut acc: Vec<CompensatedSum<T>> = (0..=n).map(|_| CompensatedSum::default()).collect();
    for (a, pa) in down.iter().enumerate() {
        for (b, pb) in up.iter().enumerate() {
            acc[i - a + b].add(pa.clone() * pb.clone());
        }
    }
    Ok(acc.into_iter().map(|s| s.value()).collect())
}

/// Fills the diagonal with whatever mass the off-diagonal entries leave.
fn close_row<T: Scalar>(row: &mut [T], i: usize) -> Result<()> {
    row[i] = T::zero();
    let off = sum_compensated(row.iter().cloned());
    let rest = T::one() - off;
    if rest < T::zero() {
        if rest.abs() > T::row_tolerance() {
            return Err(invalid(format!("row {i} overflows by {rest:?}")));
        }
        row[i] = T::zero();
    } else {
        row[i] = rest;
    }
    Ok(())
}

fn ones_states(n: usize) -> (Vec<StateLabel>, Vec<bool>) {
    ((0..=n).map(StateLabel::Ones).collect(), (0..=n).map(|k| k == n).collect())
}

fn uniform_start<T: Scalar>(n: usize) -> Vec<T> {
    binomial_pmf(n, &T::lit(0.5))
}

/// Noiseless (1+λ)-EA on ones-count states.
///
/// With `λ = 1` an offspring of equal fitness replaces the parent. With
/// `λ > 1` the next parent is the fittest of parent and offspring, the parent
/// winning ties and otherwise the lowest-indexed offspring.
pub fn noiseless_chain<T: Scalar>(spec: &ProblemSpec, lambda: usize, p: &T) -> Result<LumpedChain<T>> {
    if lambda == 0 {
        return Err(invalid("lambda must be positive"));
    }
    check_rate(p)?;
    let n = spec.n();
    let values: Vec<i64> = (0..=n).map(|k| spec.value_at(k)).collect();
    let mut kernel = Vec::with_capacity(n + 1);
    for i in 0..=n {
        let q = offspring_ones_distribution(n, i, p)?;
        let mut row = vec![T::zero(); n + 1];
        for j in 0..=n {
            if j == i {
                continue;
            }
            if lambda == 1 {
                if values[j] >= values[i] {
                    row[j] = q[j].clone();
                }
            } else if values[j] > values[i] {
                let below = sum_compensated((0..=n).filter(|&k| values[k] < values[j]).map(|k| q[k].clone()));
                let at_most = sum_compensated((0..=n).filter(|&k| values[k] <= values[j]).map(|k| q[k].clone()));
                // offspring t wins: t-1 earlier strictly worse, the rest no better
                let ways = sum_compensated((0..lambda).map(|t| below.powu(t) * at_most.powu(lambda - 1 - t)));
                row[j] = q[j].clone() * ways;
            }
        }
        close_row(&mut row, i)?;
        kernel.push(row);
    }
    let (states, optimal) = ones_states(n);
    LumpedChain::new(states, kernel, optimal, uniform_start(n))
}

/// Probability that `rule` accepts an offspring whose noisy value has law
/// `off` against a parent with law `par`.
fn acceptance<T: Scalar>(rule: &SelectionRule, n: usize, off: &NoisyLaw<T>, par: &NoisyLaw<T>) -> T {
    match *rule {
        SelectionRule::Standard => prob_diff_at_least(off, par, &T::zero()),
        SelectionRule::HardThreshold { tau } => prob_diff_at_least(off, par, &T::lit(tau)),
        SelectionRule::SmoothThreshold => {
            let one = T::one();
            let at_least = prob_diff_at_least(off, par, &one);
            let unit = prob_diff_equal(off, par, &one);
            let keep = one.clone() / T::from_count(5 * n);
            // gap > 1 always, gap = 1 with probability 1/(5n)
            at_least - unit.clone() + unit * keep
        }
    }
}

/// (1+1)-EA with re-evaluation: parent and offspring are evaluated afresh
/// and independently every iteration.
pub fn noisy_chain_reeval<T: Scalar>(
    spec: &ProblemSpec,
    model: &NoiseModel,
    rule: &SelectionRule,
    lambda: usize,
    p: &T,
) -> Result<LumpedChain<T>> {
    if lambda != 1 {
        return Err(Error::Unsupported(format!(
            "exact noisy kernels need lambda = 1 (got {lambda}); estimate rows by simulation instead"
        )));
    }
    check_rate(p)?;
    let n = spec.n();
    let laws: Vec<NoisyLaw<T>> = (0..=n).map(|k| model.law(spec, k)).collect();
    let mut kernel = Vec::with_capacity(n + 1);
    for i in 0..=n {
        let q = offspring_ones_distribution(n, i, p)?;
        let mut row = vec![T::zero(); n + 1];
        for j in (0..=n).filter(|&j| j != i) {
            if q[j].is_zero() {
                continue;
            }
            row[j] = q[j].clone() * acceptance(rule, n, &laws[j], &laws[i]);
        }
        close_row(&mut row, i)?;
        kernel.push(row);
    }
    let (states, optimal) = ones_states(n);
    LumpedChain::new(states, kernel, optimal, uniform_start(n))
}

/// (1+1)-EA with single evaluation under one-bit noise, standard rule.
///
/// States are `(|x|₁, L)` where `L` is the stored noisy value of the current
/// solution; `L` is always the true fitness of a solution at Hamming distance
/// at most one. Any state with `|x|₁ = n` is optimal.
pub fn noisy_chain_singleeval<T: Scalar>(spec: &ProblemSpec, pn: f64, p: &T) -> Result<LumpedChain<T>> {
    check_rate(p)?;
    let model = NoiseModel::one_bit(pn)
        .map_err(|e| Error::Unsupported(format!("single-evaluation chain needs one-bit noise: {e}")))?;
    let n = spec.n();
    let laws: Vec<Vec<(T, T)>> = (0..=n)
        .map(|k| match model.law::<T>(spec, k) {
            NoisyLaw::Atoms(a) => a,
            NoisyLaw::Uniform { .. } => unreachable!("one-bit noise is atomic"),
        })
        .collect();

    let mut states = Vec::new();
    for i in 0..=n {
        let mut vals: Vec<i64> = [i.checked_sub(1), Some(i), (i < n).then_some(i + 1)]
            .into_iter()
            .flatten()
            .map(|k| spec.value_at(k))
            .collect();
        vals.sort_unstable();
        vals.dedup();
        states.extend(vals.into_iter().map(|value| StateLabel::Stored { ones: i, value }));
    }
    let index: HashMap<StateLabel, usize> = states.iter().enumerate().map(|(k, &s)| (s, k)).collect();
    let label_of = |ones: usize, v: &T| StateLabel::Stored { ones, value: v.to_f64_lossy().round() as i64 };

    let mut kernel = Vec::with_capacity(states.len());
    for &state in &states {
        let StateLabel::Stored { ones: i, value: stored } = state else { unreachable!() };
        let stored = T::lit(stored as f64);
        let q = offspring_ones_distribution(n, i, p)?;
        let mut acc: Vec<CompensatedSum<T>> = states.iter().map(|_| CompensatedSum::default()).collect();
        let here = index[&state];
        for (j, qj) in q.iter().enumerate() {
            if qj.is_zero() {
                continue;
            }
            for (v, w) in &laws[j] {
                let target = if *v >= stored { index[&label_of(j, v)] } else { here };
                if target != here {
                    acc[target].add(qj.clone() * w.clone());
                }
            }
        }
        let mut row: Vec<T> = acc.into_iter().map(|s| s.value()).collect();
        close_row(&mut row, here)?;
        kernel.push(row);
    }

    let start = uniform_start::<T>(n);
    let mut initial = vec![T::zero(); states.len()];
    for (i, wi) in start.iter().enumerate() {
        for (v, w) in &laws[i] {
            let k = index[&label_of(i, v)];
            initial[k] = initial[k].clone() + wi.clone() * w.clone();
        }
    }
    let optimal = states.iter().map(|s| s.ones() == n).collect();
    LumpedChain::new(states, kernel, optimal, initial)
}
