//! Additive drift bounds on the hitting time from a distance function.

use crate::chain::{EfhtVector, LumpedChain};
use crate::error::{invalid, Result};
use crate::scalar::{sum_compensated, Scalar};

#[derive(Debug, Clone, PartialEq)]
pub struct DriftReport<T> {
    /// `V(x) − E[V(ξ₁) | ξ₀ = x]`, zero on optimal states.
    pub drift: Vec<T>,
    /// Smallest drift over non-optimal states.
    pub c_l: T,
    /// Largest drift over non-optimal states.
    pub c_u: T,
    /// `V / c_u`, absent unless `c_u > 0`.
    pub lower: Option<EfhtVector<T>>,
    /// `V / c_l`, absent unless `c_l > 0`.
    pub upper: Option<EfhtVector<T>>,
}

/// Computes the one-step drift of `v` under `chain` and the resulting
/// hitting-time bounds `V/c_u ≤ E[τ] ≤ V/c_l`.
pub fn drift_report<T: Scalar>(chain: &LumpedChain<T>, v: &EfhtVector<T>) -> Result<DriftReport<T>> {
    if v.states() != chain.states() {
        return Err(invalid("distance function and chain have different state spaces"));
    }
    let values = v.values();
    for (i, value) in values.iter().enumerate() {
        let label = chain.states()[i];
        if chain.is_optimal(i) && !value.is_zero() {
            return Err(invalid(format!("V must vanish on optimal state {label}")));
        }
        if !chain.is_optimal(i) && *value <= T::zero() {
            return Err(invalid(format!("V must be positive on non-optimal state {label}")));
        }
    }

    let mut drift = vec![T::zero(); chain.len()];
    let mut c_l: Option<T> = None;
    let mut c_u: Option<T> = None;
    for x in chain.non_optimal() {
        let next = sum_compensated(chain.row(x).iter().zip(values).map(|(p, v)| p.clone() * v.clone()));
        let d = values[x].clone() - next;
        if c_l.as_ref().is_none_or(|c| d < *c) {
            c_l = Some(d.clone());
        }
        if c_u.as_ref().is_none_or(|c| d > *c) {
            c_u = Some(d.clone());
        }
        drift[x] = d;
    }
    // non_optimal() may be empty only for an all-optimal chain
    let c_l = c_l.unwrap_or_else(T::zero);
    let c_u = c_u.unwrap_or_else(T::zero);

    let scaled = |c: &T| -> Result<Option<EfhtVector<T>>> {
        if *c <= T::zero() {
            return Ok(None);
        }
        let vals = values.iter().map(|x| x.clone() / c.clone()).collect();
        EfhtVector::new(v.states().to_vec(), vals).map(Some)
    };
    Ok(DriftReport { lower: scaled(&c_u)?, upper: scaled(&c_l)?, drift, c_l, c_u })
}
