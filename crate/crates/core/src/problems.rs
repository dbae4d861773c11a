//! Bit-string solutions and the three `|x|₁`-symmetric benchmark families.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

const WORD: usize = 64;

/// Fixed-length binary string. Bit `i` is the `(i+1)`-th character of the
/// textual form, so `"100"` has bit 0 set.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct BitString {
    n: usize,
    words: Vec<u64>,
}

impl BitString {
    pub fn zeros(n: usize) -> Self {
        Self { n, words: vec![0; n.div_ceil(WORD)] }
    }

    pub fn ones_string(n: usize) -> Self {
        let mut x = Self::zeros(n);
        for i in 0..n {
            x.set(i, true);
        }
        x
    }

    pub fn from_bits(bits: &[bool]) -> Self {
        let mut x = Self::zeros(bits.len());
        for (i, &b) in bits.iter().enumerate() {
            x.set(i, b);
        }
        x
    }

    /// The solution whose textual form is the `n`-digit binary numeral of
    /// `value`; `from_index(n, 2ⁿ-1)` is `1ⁿ`.
    pub fn from_index(n: usize, value: u64) -> Self {
        assert!(n <= 64, "index labels only cover n <= 64");
        let mut x = Self::zeros(n);
        for i in 0..n {
            x.set(i, (value >> (n - 1 - i)) & 1 == 1);
        }
        x
    }

    /// Inverse of [`BitString::from_index`].
    pub fn index(&self) -> u64 {
        assert!(self.n <= 64, "index labels only cover n <= 64");
        (0..self.n).fold(0u64, |acc, i| (acc << 1) | u64::from(self.get(i)))
    }

    pub fn random<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Self {
        let mut x = Self::zeros(n);
        for (k, w) in x.words.iter_mut().enumerate() {
            let live = (n - k * WORD).min(WORD);
            let r: u64 = rng.random();
            *w = if live == WORD { r } else { r & ((1u64 << live) - 1) };
        }
        x
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn get(&self, i: usize) -> bool {
        debug_assert!(i < self.n);
        (self.words[i / WORD] >> (i % WORD)) & 1 == 1
    }

    pub fn set(&mut self, i: usize, bit: bool) {
        assert!(i < self.n, "bit {i} out of range for length {}", self.n);
        let mask = 1u64 << (i % WORD);
        if bit {
            self.words[i / WORD] |= mask;
        } else {
            self.words[i / WORD] &= !mask;
        }
    }

    pub fn flip(&mut self, i: usize) {
        assert!(i < self.n, "bit {i} out of range for length {}", self.n);
        self.words[i / WORD] ^= 1u64 << (i % WORD);
    }

    /// `|x|₁`
    pub fn ones(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    /// `|x|₀`
    pub fn zeros_count(&self) -> usize {
        self.n - self.ones()
    }

    pub fn is_all_ones(&self) -> bool {
        self.ones() == self.n
    }
}

impl fmt::Display for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.n {
            f.write_str(if self.get(i) { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl fmt::Debug for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BitString({self})")
    }
}

impl FromStr for BitString {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bits = s
            .chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(invalid(format!("'{other}' is not a binary digit"))),
            })
            .collect::<Result<Vec<_>>>()?;
        if bits.is_empty() {
            return Err(invalid("empty bit string"));
        }
        Ok(Self::from_bits(&bits))
    }
}

impl Serialize for BitString {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for BitString {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    OneMax,
    Trap,
    Jump,
}

/// A benchmark instance. Every family has the unique optimum `1ⁿ` and a
/// fitness that depends on `x` only through `|x|₁`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "RawProblem", into = "RawProblem")]
pub enum ProblemSpec {
    OneMax { n: usize },
    Trap { n: usize },
    Jump { n: usize, m: usize },
}

#[derive(Serialize, Deserialize)]
struct RawProblem {
    family: Family,
    n: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    m: Option<usize>,
}

impl TryFrom<RawProblem> for ProblemSpec {
    type Error = Error;

    fn try_from(raw: RawProblem) -> Result<Self> {
        match raw.family {
            Family::OneMax => Self::one_max(raw.n),
            Family::Trap => Self::trap(raw.n),
            Family::Jump => {
                let m = raw.m.ok_or_else(|| invalid("jump requires m"))?;
                Self::jump(raw.n, m)
            }
        }
    }
}

impl From<ProblemSpec> for RawProblem {
    fn from(spec: ProblemSpec) -> Self {
        let m = match spec {
            ProblemSpec::Jump { m, .. } => Some(m),
            _ => None,
        };
        RawProblem { family: spec.family(), n: spec.n(), m }
    }
}

impl ProblemSpec {
    pub fn one_max(n: usize) -> Result<Self> {
        check_n(n)?;
        Ok(Self::OneMax { n })
    }

    pub fn trap(n: usize) -> Result<Self> {
        check_n(n)?;
        Ok(Self::Trap { n })
    }

    pub fn jump(n: usize, m: usize) -> Result<Self> {
        check_n(n)?;
        if m == 0 || m > n {
            return Err(invalid(format!("jump requires 1 <= m <= n, got m = {m}, n = {n}")));
        }
        Ok(Self::Jump { n, m })
    }

    /// Same family (and `m`) at another size.
    pub fn with_n(&self, n: usize) -> Result<Self> {
        match *self {
            Self::OneMax { .. } => Self::one_max(n),
            Self::Trap { .. } => Self::trap(n),
            Self::Jump { m, .. } => Self::jump(n, m),
        }
    }

    pub fn n(&self) -> usize {
        match *self {
            Self::OneMax { n } | Self::Trap { n } | Self::Jump { n, .. } => n,
        }
    }

    pub fn family(&self) -> Family {
        match self {
            Self::OneMax { .. } => Family::OneMax,
            Self::Trap { .. } => Family::Trap,
            Self::Jump { .. } => Family::Jump,
        }
    }

    /// Exact fitness of any solution with `ones` one-bits.
    pub fn value_at(&self, ones: usize) -> i64 {
        let n = self.n();
        debug_assert!(ones <= n);
        let k = ones as i64;
        match *self {
            Self::OneMax { .. } => k,
            Self::Trap { n } => {
                if ones == n {
                    2 * n as i64
                } else {
                    -k
                }
            }
            Self::Jump { n, m } => {
                if ones <= n - m || ones == n {
                    m as i64 + k
                } else {
                    (n - ones) as i64
                }
            }
        }
    }

    pub fn optimum_value(&self) -> i64 {
        self.value_at(self.n())
    }

    pub fn fitness(&self, x: &BitString) -> Result<f64> {
        self.check_len(x)?;
        Ok(self.value_at(x.ones()) as f64)
    }

    pub fn is_optimum(&self, x: &BitString) -> Result<bool> {
        self.check_len(x)?;
        Ok(x.is_all_ones())
    }

    pub(crate) fn check_len(&self, x: &BitString) -> Result<()> {
        if x.len() != self.n() {
            return Err(Error::LengthMismatch { expected: self.n(), got: x.len() });
        }
        Ok(())
    }
}

impl fmt::Display for ProblemSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::OneMax { n } => write!(f, "OneMax(n={n})"),
            Self::Trap { n } => write!(f, "Trap(n={n})"),
            Self::Jump { n, m } => write!(f, "Jump(m={m}, n={n})"),
        }
    }
}

fn check_n(n: usize) -> Result<()> {
    if n == 0 {
        return Err(invalid("problem size n must be positive"));
    }
    Ok(())
}
