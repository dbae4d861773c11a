use std::collections::VecDeque;

use crate::chain::{EfhtVector, LumpedChain};
use crate::error::{Error, Result};
use crate::scalar::{sum_compensated, Scalar};

/// Solves `E(x) = 0` on optimal states and `E(x) = 1 + Σ_y P(x, y) E(y)`
/// elsewhere, by dense Gaussian elimination with partial pivoting.
pub fn efht_solve<T: Scalar>(chain: &LumpedChain<T>) -> Result<EfhtVector<T>> {
    let s = chain.len();

    // states that can reach the optimal set, by reverse search
    let mut reaches = (0..s).map(|i| chain.is_optimal(i)).collect::<Vec<_>>();
    let mut queue: VecDeque<usize> = (0..s).filter(|&i| reaches[i]).collect();
    while let Some(t) = queue.pop_front() {
        for (from, reached) in reaches.iter_mut().enumerate() {
            if !*reached && !chain.prob(from, t).is_zero() {
                *reached = true;
                queue.push_back(from);
            }
        }
    }
    let stuck: Vec<String> = (0..s).filter(|&i| !reaches[i]).map(|i| chain.states()[i].to_string()).collect();
    if !stuck.is_empty() {
        return Err(Error::Singular { states: stuck });
    }

    let transient: Vec<usize> = chain.non_optimal().collect();
    let k = transient.len();
    // (I − Q) E = 1 over transient states, augmented with the right-hand side.
    // The diagonal 1 − P(i, i) is taken as the off-diagonal row mass, which
    // keeps its relative accuracy when the chain almost never leaves i.
    let mut a: Vec<Vec<T>> = transient
        .iter()
        .map(|&i| {
            let mut row: Vec<T> = transient.iter().map(|&j| T::zero() - chain.prob(i, j).clone()).collect();
            let pos = transient.iter().position(|&j| j == i).unwrap();
            row[pos] = sum_compensated((0..s).filter(|&j| j != i).map(|j| chain.prob(i, j).clone()));
            row.push(T::one());
            row
        })
        .collect();

    for col in 0..k {
        let pivot = (col..k).max_by(|&x, &y| a[x][col].abs().partial_cmp(&a[y][col].abs()).unwrap()).unwrap();
        if a[pivot][col].is_zero() {
            let states = transient[col..].iter().map(|&i| chain.states()[i].to_string()).collect();
            return Err(Error::Singular { states });
        }
        a.swap(col, pivot);
        let head = a[col].clone();
        for row in a.iter_mut().skip(col + 1) {
            if row[col].is_zero() {
                continue;
            }
            let factor = row[col].clone() / head[col].clone();
            for c in col..=k {
                row[c] = row[c].clone() - factor.clone() * head[c].clone();
            }
        }
    }
    let mut x = vec![T::zero(); k];
    for r in (0..k).rev() {
        let tail = sum_compensated((r + 1..k).map(|c| a[r][c].clone() * x[c].clone()));
        x[r] = (a[r][k].clone() - tail) / a[r][r].clone();
    }

    let mut values = vec![T::zero(); s];
    for (&i, v) in transient.iter().zip(x) {
        values[i] = v;
    }

    let tol = T::solve_tolerance();
    for &i in &transient {
        let expected = sum_compensated(
            std::iter::once(T::one()).chain((0..s).map(|j| chain.prob(i, j).clone() * values[j].clone())),
        );
        let residual = (values[i].clone() - expected).abs();
        let scale = T::one() + values[i].abs();
        if residual > tol.clone() * scale {
            return Err(Error::Residual { state: chain.states()[i].to_string(), residual: residual.to_f64_lossy() });
        }
    }

    EfhtVector::new(chain.states().to_vec(), values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::{noiseless_chain, StateLabel};
    use crate::problems::ProblemSpec;
    use crate::scalar::Rational;

    fn two_state(q: f64) -> LumpedChain<f64> {
        LumpedChain::new(
            vec![StateLabel::Ones(0), StateLabel::Ones(1)],
            vec![vec![1.0 - q, q], vec![0.0, 1.0]],
            vec![false, true],
            vec![0.5, 0.5],
        )
        .unwrap()
    }

    #[test]
    fn geometric_escape() {
        for q in [1.0, 0.5, 0.01, 1e-6] {
            let e = efht_solve(&two_state(q)).unwrap();
            assert_eq!(e.values()[1], 0.0);
            assert!((e.values()[0] - 1.0 / q).abs() <= 1e-9 / q);
        }
    }

    #[test]
    fn unreachable_optimum_is_named() {
        let chain = LumpedChain::new(
            vec![StateLabel::Ones(0), StateLabel::Ones(1), StateLabel::Ones(2)],
            vec![vec![0.5, 0.5, 0.0], vec![0.5, 0.5, 0.0], vec![0.0, 0.0, 1.0]],
            vec![false, false, true],
            vec![0.5, 0.5, 0.0],
        )
        .unwrap();
        match efht_solve(&chain) {
            Err(Error::Singular { states }) => assert_eq!(states, vec!["0", "1"]),
            other => panic!("expected singular error, got {other:?}"),
        }
    }

    #[test]
    fn trap_closed_form_exact() {
        // 1/(1 − (1 − p^n)^λ) at λ = 1, p = 1/3, n = 3 is 27
        let spec = ProblemSpec::trap(3).unwrap();
        let p = Rational::new(1.into(), 3.into());
        let e = efht_solve(&noiseless_chain(&spec, 1, &p).unwrap()).unwrap();
        assert_eq!(e.get(StateLabel::Ones(0)).unwrap(), &Rational::from_integer(27.into()));
        assert_eq!(e.get(StateLabel::Ones(3)).unwrap(), &Rational::from_integer(0.into()));
        let ef = efht_solve(&noiseless_chain(&spec, 1, &(1.0f64 / 3.0)).unwrap()).unwrap();
        assert!((ef.values()[0] - 27.0).abs() < 1e-9 * 27.0);
    }

    #[test]
    fn float_widths_agree() {
        let spec = ProblemSpec::one_max(6).unwrap();
        let e64 = efht_solve(&noiseless_chain(&spec, 2, &0.2f64).unwrap()).unwrap();
        let e32 = efht_solve(&noiseless_chain(&spec, 2, &0.2f32).unwrap()).unwrap();
        for (a, b) in e64.values().iter().zip(e32.values()) {
            assert!((a - *b as f64).abs() <= 1e-3 * a.max(1.0));
        }
    }
}
