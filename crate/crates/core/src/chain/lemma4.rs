//! Expectation ordering of an increasing function under prefix-dominated
//! distributions, as a checkable oracle with a random-instance fuzzer.

use rand::Rng;

use crate::error::{invalid, Error, Result};
use crate::noise::RandomSource;
use crate::scalar::{sum_compensated, Scalar};

/// Checks the hypotheses on `(p, q, e)` and returns whether
/// `Σ pᵢ eᵢ ≥ Σ qᵢ eᵢ`.
///
/// Hypotheses: `p` and `q` are probability vectors of equal length, `e` is
/// non-negative and strictly increasing, and every prefix sum of `p` is at most
/// the matching prefix sum of `q`.
pub fn lemma4_oracle<T: Scalar>(p: &[T], q: &[T], e: &[T]) -> Result<bool> {
    if p.len() != q.len() || p.len() != e.len() {
        return Err(invalid(format!("lengths differ: |P| = {}, |Q| = {}, |E| = {}", p.len(), q.len(), e.len())));
    }
    if p.is_empty() {
        return Err(invalid("empty vectors"));
    }
    let sum_tol = T::solve_tolerance();
    for (name, v) in [("P", p), ("Q", q)] {
        if let Some(i) = v.iter().position(|x| *x < T::zero()) {
            return Err(Error::Precondition(format!("{name}[{i}] is negative")));
        }
        let total = sum_compensated(v.iter().cloned());
        if (total.clone() - T::one()).abs() > sum_tol {
            return Err(Error::Precondition(format!("{name} sums to {}, not 1", total.to_f64_lossy())));
        }
    }
    if e[0] < T::zero() {
        return Err(Error::Precondition("E[0] is negative".into()));
    }
    if let Some(i) = e.windows(2).position(|w| w[1] <= w[0]) {
        return Err(Error::Precondition(format!("E is not strictly increasing at index {}", i + 1)));
    }
    let slack = T::row_tolerance();
    let (mut cp, mut cq) = (T::zero(), T::zero());
    for i in 0..p.len() {
        cp = cp + p[i].clone();
        cq = cq + q[i].clone();
        if cp > cq.clone() + slack.clone() {
            return Err(Error::Precondition(format!("prefix sum of P exceeds that of Q at index {i}")));
        }
    }

    let margin = sum_compensated(p.iter().zip(q).zip(e).map(|((a, b), x)| (a.clone() - b.clone()) * x.clone()));
    let scale = sum_compensated(p.iter().zip(q).zip(e).map(|((a, b), x)| (a.clone() + b.clone()) * x.abs()));
    Ok(margin >= -(slack * scale))
}

/// One random `(P, Q, E)` triple satisfying the oracle's hypotheses.
#[derive(Debug, Clone, PartialEq)]
pub struct Lemma4Instance {
    pub p: Vec<f64>,
    pub q: Vec<f64>,
    pub e: Vec<f64>,
}

impl Lemma4Instance {
    /// `Σ pᵢ eᵢ − Σ qᵢ eᵢ`
    pub fn margin(&self) -> f64 {
        sum_compensated(self.p.iter().zip(&self.q).zip(&self.e).map(|((a, b), x)| (a - b) * x))
    }
}

fn random_simplex<R: Rng + ?Sized>(len: usize, rng: &mut R) -> Vec<f64> {
    let mut v: Vec<f64> = (0..len).map(|_| -(1.0 - rng.random::<f64>()).ln()).collect();
    // sparse vectors exercise the boundary of the prefix condition
    for x in v.iter_mut() {
        if rng.random_bool(0.2) {
            *x = 0.0;
        }
    }
    let total: f64 = v.iter().sum();
    if total == 0.0 {
        v[rng.random_range(0..len)] = 1.0;
        return v;
    }
    v.iter().map(|x| x / total).collect()
}

/// Draws an instance with `m + 1` entries, `m` uniform in `1..=max_m`.
pub fn random_lemma4_instance<R: Rng + ?Sized>(max_m: usize, rng: &mut R) -> Lemma4Instance {
    let len = rng.random_range(1..=max_m.max(1)) + 1;
    let q = random_simplex(len, rng);
    let mut p = q.clone();
    for i in 0..len - 1 {
        if rng.random_bool(0.3) {
            continue;
        }
        let j = rng.random_range(i + 1..len);
        let moved = p[i] * rng.random::<f64>();
        p[i] -= moved;
        p[j] += moved;
    }
    let mut e = Vec::with_capacity(len);
    let mut acc = if rng.random_bool(0.5) { 0.0 } else { 10.0 * rng.random::<f64>() };
    for _ in 0..len {
        e.push(acc);
        acc += 1e-3 + 10.0 * rng.random::<f64>().powi(3);
    }
    Lemma4Instance { p, q, e }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FuzzReport {
    pub instances: u64,
    pub violations: u64,
    /// Smallest `Σ PE − Σ QE` seen.
    pub min_margin: f64,
    pub first_violation: Option<Lemma4Instance>,
}

impl FuzzReport {
    pub fn passed(&self) -> bool {
        self.violations == 0
    }
}

/// Runs the oracle on `instances` random valid instances. A generated instance
/// failing the hypotheses is a generator bug and is returned as an error.
pub fn lemma4_fuzz(instances: u64, max_m: usize, seed: u64) -> Result<FuzzReport> {
    let mut rng = RandomSource::new(seed);
    let mut report = FuzzReport { instances, violations: 0, min_margin: f64::INFINITY, first_violation: None };
    for _ in 0..instances {
        let inst = random_lemma4_instance(max_m, &mut rng);
        let holds = lemma4_oracle(&inst.p, &inst.q, &inst.e)?;
        report.min_margin = report.min_margin.min(inst.margin());
        if !holds {
            report.violations += 1;
            report.first_violation.get_or_insert(inst);
        }
    }
    Ok(report)
}
