//! Scalar abstraction for the exact-analysis code paths.
//!
//! Kernel construction, hitting-time solves and dominance checks are written
//! once over [`Scalar`] and instantiated at `f64` for everyday use, at `f32`
//! when memory matters more than digits, and at [`Rational`] when a result has
//! to be exact (closed-form comparisons, tie-sensitive partitions).

use std::fmt::Debug;

use num_bigint::BigInt;
use num_rational::Ratio;
use num_traits::{FromPrimitive, Num, Signed, ToPrimitive};

/// Arbitrary-precision rational.
pub type Rational = Ratio<BigInt>;

/// A field element usable by the chain solver.
pub trait Scalar:
    Clone + Debug + PartialOrd + Num + Signed + FromPrimitive + ToPrimitive + Send + Sync + 'static
{
    /// Largest relative residual the linear solver accepts. Zero for exact types.
    fn solve_tolerance() -> Self;

    /// Slack allowed on probability bookkeeping (row sums, cumulative class
    /// masses). Zero for exact types.
    fn row_tolerance() -> Self;

    /// Converts a finite `f64` literal. Exact for every binary-float value when
    /// `Self` is [`Rational`].
    fn lit(x: f64) -> Self {
        Self::from_f64(x).unwrap_or_else(|| panic!("{x} is not representable"))
    }

    fn from_count(k: usize) -> Self {
        Self::from_usize(k).expect("count fits scalar")
    }

    fn to_f64_lossy(&self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    /// `self^k` by repeated squaring.
    fn powu(&self, k: usize) -> Self {
        num_traits::pow::pow(self.clone(), k)
    }
}

impl Scalar for f64 {
    fn solve_tolerance() -> Self {
        1e-9
    }

    fn row_tolerance() -> Self {
        1e-12
    }
}

impl Scalar for f32 {
    fn solve_tolerance() -> Self {
        1e-3
    }

    fn row_tolerance() -> Self {
        1e-5
    }
}

impl Scalar for Rational {
    fn solve_tolerance() -> Self {
        Rational::from_integer(BigInt::from(0))
    }

    fn row_tolerance() -> Self {
        Rational::from_integer(BigInt::from(0))
    }
}

/// Neumaier-compensated accumulator. For exact scalars the compensation term
/// stays zero.
#[derive(Debug, Clone)]
pub struct CompensatedSum<T> {
    sum: T,
    carry: T,
}

impl<T: Scalar> Default for CompensatedSum<T> {
    fn default() -> Self {
        Self { sum: T::zero(), carry: T::zero() }
    }
}

impl<T: Scalar> CompensatedSum<T> {
    pub fn add(&mut self, x: T) {
        let t = self.sum.clone() + x.clone();
        if self.sum.abs() >= x.abs() {
            self.carry = self.carry.clone() + ((self.sum.clone() - t.clone()) + x);
        } else {
            self.carry = self.carry.clone() + ((x - t.clone()) + self.sum.clone());
        }
        self.sum = t;
    }

    pub fn value(&self) -> T {
        self.sum.clone() + self.carry.clone()
    }
}

impl<T: Scalar> FromIterator<T> for CompensatedSum<T> {
    fn from_iter<I: IntoIterator<Item = T>>(iter: I) -> Self {
        let mut acc = Self::default();
        for x in iter {
            acc.add(x);
        }
        acc
    }
}

/// Compensated sum of an iterator.
pub fn sum_compensated<T: Scalar, I: IntoIterator<Item = T>>(iter: I) -> T {
    iter.into_iter().collect::<CompensatedSum<T>>().value()
}
