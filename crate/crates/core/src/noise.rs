//! Fitness noise channels and the noisy evaluation `fᴺ`.
//!
//! Besides sampling, each channel exposes the exact law of `fᴺ(x)` given
//! `|x|₁`. The chain builders only ever need probabilities of the form
//! `P[fᴺ(a) − fᴺ(b) ≥ c]` for independent evaluations, which
//! [`comparison_probabilities`] computes in closed form.

use std::fmt;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::problems::{BitString, ProblemSpec};
use crate::scalar::{sum_compensated, Scalar};

/// Noise channel applied to every fitness evaluation. Parameters are fixed
/// for the lifetime of a run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawNoise", into = "RawNoise")]
pub enum NoiseModel {
    Noiseless,
    /// `f(x) + δ`, `δ ~ U[d1, d2]`
    Additive {
        d1: f64,
        d2: f64,
    },
    /// `f(x) · δ`, `δ ~ U[d1, d2]`
    Multiplicative {
        d1: f64,
        d2: f64,
    },
    /// With probability `pn` report the fitness of `x` with one uniformly
    /// chosen bit flipped.
    OneBit {
        pn: f64,
    },
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "noise", rename_all = "snake_case")]
enum RawNoise {
    None,
    Additive { d1: f64, d2: f64 },
    Multiplicative { d1: f64, d2: f64 },
    OneBit { pn: f64 },
}

impl TryFrom<RawNoise> for NoiseModel {
    type Error = Error;

    fn try_from(raw: RawNoise) -> Result<Self> {
        match raw {
            RawNoise::None => Ok(Self::Noiseless),
            RawNoise::Additive { d1, d2 } => Self::additive(d1, d2),
            RawNoise::Multiplicative { d1, d2 } => Self::multiplicative(d1, d2),
            RawNoise::OneBit { pn } => Self::one_bit(pn),
        }
    }
}

impl From<NoiseModel> for RawNoise {
    fn from(model: NoiseModel) -> Self {
        match model {
            NoiseModel::Noiseless => RawNoise::None,
            NoiseModel::Additive { d1, d2 } => RawNoise::Additive { d1, d2 },
            NoiseModel::Multiplicative { d1, d2 } => RawNoise::Multiplicative { d1, d2 },
            NoiseModel::OneBit { pn } => RawNoise::OneBit { pn },
        }
    }
}

impl NoiseModel {
    pub fn additive(d1: f64, d2: f64) -> Result<Self> {
        check_interval(d1, d2)?;
        Ok(Self::Additive { d1, d2 })
    }

    pub fn multiplicative(d1: f64, d2: f64) -> Result<Self> {
        check_interval(d1, d2)?;
        Ok(Self::Multiplicative { d1, d2 })
    }

    pub fn one_bit(pn: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&pn) {
            return Err(invalid(format!("one-bit noise level must lie in [0, 1], got {pn}")));
        }
        Ok(Self::OneBit { pn })
    }

    pub fn is_noiseless(&self) -> bool {
        matches!(self, Self::Noiseless)
    }

    /// Samples `fᴺ` for a solution with `ones` one-bits. `x` is consulted
    /// only to decide which way a one-bit flip moves `|x|₁`.
    pub(crate) fn sample<R: Rng + ?Sized>(&self, spec: &ProblemSpec, x: &BitString, ones: usize, rng: &mut R) -> f64 {
        let f = spec.value_at(ones) as f64;
        match *self {
            Self::Noiseless => f,
            Self::Additive { d1, d2 } => f + uniform(d1, d2, rng),
            Self::Multiplicative { d1, d2 } => f * uniform(d1, d2, rng),
            Self::OneBit { pn } => {
                if rng.random::<f64>() < pn {
                    let k = rng.random_range(0..x.len());
                    let flipped = if x.get(k) { ones - 1 } else { ones + 1 };
                    spec.value_at(flipped) as f64
                } else {
                    f
                }
            }
        }
    }

    /// Exact law of `fᴺ(x)` for `|x|₁ = ones`.
    pub fn law<T: Scalar>(&self, spec: &ProblemSpec, ones: usize) -> NoisyLaw<T> {
        let n = spec.n();
        let f = spec.value_at(ones);
        let ft = T::lit(f as f64);
        match *self {
            Self::Noiseless => NoisyLaw::point(ft),
            Self::Additive { d1, d2 } => {
                if d1 == d2 {
                    NoisyLaw::point(ft + T::lit(d1))
                } else {
                    NoisyLaw::Uniform { lo: ft.clone() + T::lit(d1), hi: ft + T::lit(d2) }
                }
            }
            Self::Multiplicative { d1, d2 } => {
                let (a, b) = (ft.clone() * T::lit(d1), ft * T::lit(d2));
                if f == 0 || d1 == d2 {
                    NoisyLaw::point(a)
                } else if a < b {
                    NoisyLaw::Uniform { lo: a, hi: b }
                } else {
                    NoisyLaw::Uniform { lo: b, hi: a }
                }
            }
            Self::OneBit { pn } => {
                let pn = T::lit(pn);
                let nn = T::from_count(n);
                let mut atoms = vec![(ft, T::one() - pn.clone())];
                if ones > 0 {
                    let w = pn.clone() * T::from_count(ones) / nn.clone();
                    atoms.push((T::lit(spec.value_at(ones - 1) as f64), w));
                }
                if ones < n {
                    let w = pn * T::from_count(n - ones) / nn;
                    atoms.push((T::lit(spec.value_at(ones + 1) as f64), w));
                }
                NoisyLaw::Atoms(merge_atoms(atoms))
            }
        }
    }
}

impl fmt::Display for NoiseModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Noiseless => write!(f, "none"),
            Self::Additive { d1, d2 } => write!(f, "additive[{d1},{d2}]"),
            Self::Multiplicative { d1, d2 } => write!(f, "multiplicative[{d1},{d2}]"),
            Self::OneBit { pn } => write!(f, "one_bit({pn})"),
        }
    }
}

fn check_interval(d1: f64, d2: f64) -> Result<()> {
    if !d1.is_finite() || !d2.is_finite() || d1 > d2 {
        return Err(invalid(format!("noise interval requires finite d1 <= d2, got [{d1}, {d2}]")));
    }
    Ok(())
}

fn uniform<R: Rng + ?Sized>(lo: f64, hi: f64, rng: &mut R) -> f64 {
    lo + (hi - lo) * rng.random::<f64>()
}

fn merge_atoms<T: Scalar>(atoms: Vec<(T, T)>) -> Vec<(T, T)> {
    let mut out: Vec<(T, T)> = Vec::with_capacity(atoms.len());
    for (v, w) in atoms {
        if w.is_zero() {
            continue;
        }
        match out.iter_mut().find(|(u, _)| *u == v) {
            Some((_, acc)) => *acc = acc.clone() + w,
            None => out.push((v, w)),
        }
    }
    out
}

/// Distribution of a single noisy evaluation.
#[derive(Debug, Clone, PartialEq)]
pub enum NoisyLaw<T> {
    /// Finitely many `(value, probability)` atoms.
    Atoms(Vec<(T, T)>),
    /// Continuous uniform on `[lo, hi]`, `lo < hi`.
    Uniform { lo: T, hi: T },
}

impl<T: Scalar> NoisyLaw<T> {
    fn point(v: T) -> Self {
        Self::Atoms(vec![(v, T::one())])
    }

    /// `P[X ≥ t]`
    pub fn tail(&self, t: &T) -> T {
        match self {
            Self::Atoms(atoms) => sum_compensated(atoms.iter().filter(|(v, _)| v >= t).map(|(_, w)| w.clone())),
            Self::Uniform { lo, hi } => clamp01((hi.clone() - t.clone()) / (hi.clone() - lo.clone())),
        }
    }
}

fn clamp01<T: Scalar>(x: T) -> T {
    if x < T::zero() {
        T::zero()
    } else if x > T::one() {
        T::one()
    } else {
        x
    }
}

/// `P[A − B ≥ c]` for independent `A`, `B`.
pub fn prob_diff_at_least<T: Scalar>(a: &NoisyLaw<T>, b: &NoisyLaw<T>, c: &T) -> T {
    match (a, b) {
        (NoisyLaw::Atoms(xs), _) => {
            sum_compensated(xs.iter().map(|(x, w)| w.clone() * lower_tail(b, &(x.clone() - c.clone()))))
        }
        (_, NoisyLaw::Atoms(ys)) => {
            sum_compensated(ys.iter().map(|(y, w)| w.clone() * a.tail(&(y.clone() + c.clone()))))
        }
        (NoisyLaw::Uniform { lo: la, hi: ha }, NoisyLaw::Uniform { lo: lb, hi: hb }) => {
            if la.clone() - hb.clone() >= *c {
                return T::one();
            }
            if ha.clone() - lb.clone() <= *c {
                return T::zero();
            }
            let rect = [
                (la.clone(), lb.clone()),
                (ha.clone(), lb.clone()),
                (ha.clone(), hb.clone()),
                (la.clone(), hb.clone()),
            ];
            let clipped = clip_half_plane(&rect, c);
            let area = polygon_area(&clipped);
            clamp01(area / ((ha.clone() - la.clone()) * (hb.clone() - lb.clone())))
        }
    }
}

/// `P[A − B = c]`; nonzero only when both laws are atomic.
pub fn prob_diff_equal<T: Scalar>(a: &NoisyLaw<T>, b: &NoisyLaw<T>, c: &T) -> T {
    match (a, b) {
        (NoisyLaw::Atoms(xs), NoisyLaw::Atoms(ys)) => sum_compensated(xs.iter().flat_map(|(x, wx)| {
            ys.iter().filter(move |(y, _)| x.clone() - y.clone() == *c).map(move |(_, wy)| wx.clone() * wy.clone())
        })),
        _ => T::zero(),
    }
}

/// `P[X ≤ t]`
fn lower_tail<T: Scalar>(law: &NoisyLaw<T>, t: &T) -> T {
    match law {
        NoisyLaw::Atoms(atoms) => sum_compensated(atoms.iter().filter(|(v, _)| v <= t).map(|(_, w)| w.clone())),
        NoisyLaw::Uniform { lo, hi } => clamp01((t.clone() - lo.clone()) / (hi.clone() - lo.clone())),
    }
}

/// Clips a convex polygon in the `(u, v)` plane to `u − v ≥ c`.
fn clip_half_plane<T: Scalar>(poly: &[(T, T)], c: &T) -> Vec<(T, T)> {
    let g = |p: &(T, T)| p.0.clone() - p.1.clone() - c.clone();
    let mut out = Vec::with_capacity(poly.len() + 1);
    for (k, p) in poly.iter().enumerate() {
        let q = &poly[(k + 1) % poly.len()];
        let (gp, gq) = (g(p), g(q));
        let zero = T::zero();
        if gp >= zero {
            out.push(p.clone());
        }
        if (gp > zero && gq < zero) || (gp < zero && gq > zero) {
            let s = gp.clone() / (gp - gq);
            out.push((
                p.0.clone() + s.clone() * (q.0.clone() - p.0.clone()),
                p.1.clone() + s * (q.1.clone() - p.1.clone()),
            ));
        }
    }
    out
}

fn polygon_area<T: Scalar>(poly: &[(T, T)]) -> T {
    if poly.len() < 3 {
        return T::zero();
    }
    let twice = sum_compensated((0..poly.len()).map(|k| {
        let (p, q) = (&poly[k], &poly[(k + 1) % poly.len()]);
        p.0.clone() * q.1.clone() - q.0.clone() * p.1.clone()
    }));
    twice.abs() / T::lit(2.0)
}

/// Exact `P[fᴺ(a) ≥ fᴺ(b) + threshold]` for two independent evaluations of
/// solutions with `ones_a` and `ones_b` one-bits. Ties count as `≥`.
pub fn comparison_probabilities<T: Scalar>(
    model: &NoiseModel,
    spec: &ProblemSpec,
    ones_a: usize,
    ones_b: usize,
    threshold: &T,
) -> Result<T> {
    let n = spec.n();
    if ones_a > n || ones_b > n {
        return Err(invalid(format!("ones-counts ({ones_a}, {ones_b}) out of range for n = {n}")));
    }
    let a = model.law(spec, ones_a);
    let b = model.law(spec, ones_b);
    Ok(prob_diff_at_least(&a, &b, threshold))
}

/// Evaluates `fᴺ(x)`. `x` is never modified.
pub fn noisy_fitness(model: &NoiseModel, spec: &ProblemSpec, x: &BitString, rng: &mut RandomSource) -> Result<f64> {
    spec.check_len(x)?;
    Ok(model.sample(spec, x, x.ones(), rng))
}

/// Deterministic pseudo-random stream.
#[derive(Debug, Clone)]
pub struct RandomSource {
    inner: ChaCha8Rng,
}

impl RandomSource {
    pub fn new(seed: u64) -> Self {
        Self { inner: ChaCha8Rng::seed_from_u64(seed) }
    }

    /// Source for run `index` of an experiment seeded with `master`.
    pub fn for_run(master: u64, index: u64) -> Self {
        Self::new(derive_seed(master, index))
    }
}

/// SplitMix64 finaliser applied to `(master, index)`. Distinct indices map to
/// distinct seeds for a fixed master.
pub fn derive_seed(master: u64, index: u64) -> u64 {
    let mut z = master ^ index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

impl RngCore for RandomSource {
    fn next_u32(&mut self) -> u32 {
        self.inner.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.inner.fill_bytes(dst)
    }
}
