//! Full-state-space reference kernels, built directly from bit strings without
//! any of the crate's lumping or comparison code.

#![allow(dead_code)]

use std::collections::BTreeMap;

use noisy_ea::chain::LumpedChain;
use noisy_ea::{NoiseModel, ProblemSpec, SelectionRule, StateLabel};

pub fn true_fitness(spec: &ProblemSpec, x: u32) -> f64 {
    let n = spec.n();
    let ones = x.count_ones() as usize;
    match *spec {
        ProblemSpec::OneMax { .. } => ones as f64,
        ProblemSpec::Trap { .. } => {
            let all = if ones == n { 1.0 } else { 0.0 };
            3.0 * n as f64 * all - ones as f64
        }
        ProblemSpec::Jump { m, .. } => {
            if ones <= n - m || ones == n {
                (m + ones) as f64
            } else {
                (n - ones) as f64
            }
        }
    }
}

/// Law of one noisy evaluation of the full solution `x`.
#[derive(Debug, Clone)]
pub enum Law {
    Atoms(Vec<(f64, f64)>),
    Uniform(f64, f64),
}

pub fn noisy_law(model: &NoiseModel, spec: &ProblemSpec, x: u32) -> Law {
    let f = true_fitness(spec, x);
    match *model {
        NoiseModel::Noiseless => Law::Atoms(vec![(f, 1.0)]),
        NoiseModel::Additive { d1, d2 } => {
            if d1 == d2 {
                Law::Atoms(vec![(f + d1, 1.0)])
            } else {
                Law::Uniform(f + d1, f + d2)
            }
        }
        NoiseModel::Multiplicative { d1, d2 } => {
            if f == 0.0 || d1 == d2 {
                Law::Atoms(vec![(f * d1, 1.0)])
            } else if f > 0.0 {
                Law::Uniform(f * d1, f * d2)
            } else {
                Law::Uniform(f * d2, f * d1)
            }
        }
        NoiseModel::OneBit { pn } => {
            let n = spec.n();
            let mut atoms = vec![(f, 1.0 - pn)];
            for i in 0..n {
                atoms.push((true_fitness(spec, x ^ (1 << i)), pn / n as f64));
            }
            Law::Atoms(atoms)
        }
    }
}

fn uniform_tail(lo: f64, hi: f64, t: f64) -> f64 {
    ((hi - t) / (hi - lo)).clamp(0.0, 1.0)
}

/// `P[A ≥ B + t]`. Two uniforms are handled by integrating the piecewise
/// linear map `b ↦ P[A ≥ b + t]` exactly between its breakpoints.
pub fn prob_ge(a: &Law, b: &Law, t: f64) -> f64 {
    match (a, b) {
        (Law::Atoms(xs), Law::Atoms(ys)) => {
            xs.iter().flat_map(|&(x, wx)| ys.iter().map(move |&(y, wy)| if x >= y + t { wx * wy } else { 0.0 })).sum()
        }
        (Law::Uniform(lo, hi), Law::Atoms(ys)) => ys.iter().map(|&(y, w)| w * uniform_tail(*lo, *hi, y + t)).sum(),
        (Law::Atoms(xs), Law::Uniform(lo, hi)) => {
            xs.iter().map(|&(x, w)| w * ((x - t - lo) / (hi - lo)).clamp(0.0, 1.0)).sum()
        }
        (&Law::Uniform(la, ha), &Law::Uniform(lb, hb)) => {
            let g = |y: f64| uniform_tail(la, ha, y + t);
            let mut knots = vec![lb, hb];
            for k in [la - t, ha - t] {
                if k > lb && k < hb {
                    knots.push(k);
                }
            }
            knots.sort_by(|p, q| p.partial_cmp(q).unwrap());
            let area: f64 = knots.windows(2).map(|w| 0.5 * (g(w[0]) + g(w[1])) * (w[1] - w[0])).sum();
            area / (hb - lb)
        }
    }
}

/// Probability that `rule` accepts an offspring with law `y` over a parent
/// with law `x`, evaluated independently.
pub fn accept_prob(rule: &SelectionRule, n: usize, y: &Law, x: &Law) -> f64 {
    match *rule {
        SelectionRule::Standard => prob_ge(y, x, 0.0),
        SelectionRule::HardThreshold { tau } => prob_ge(y, x, tau),
        SelectionRule::SmoothThreshold => match (y, x) {
            (Law::Atoms(ys), Law::Atoms(xs)) => {
                let unit = 1.0 / (5.0 * n as f64);
                ys.iter()
                    .flat_map(|&(a, wa)| {
                        xs.iter().map(move |&(b, wb)| {
                            let g = a - b;
                            if g > 1.0 {
                                wa * wb
                            } else if g == 1.0 {
                                wa * wb * unit
                            } else {
                                0.0
                            }
                        })
                    })
                    .sum()
            }
            // a unit gap has probability zero once either side is continuous
            _ => prob_ge(y, x, 1.0),
        },
    }
}

fn mask_prob(n: usize, mask: u32, p: f64) -> f64 {
    let k = mask.count_ones() as i32;
    p.powi(k) * (1.0 - p).powi(n as i32 - k)
}

/// Full-space row of `x` aggregated onto ones-counts.
pub fn noiseless_row(spec: &ProblemSpec, lambda: usize, p: f64, x: u32) -> Vec<f64> {
    let n = spec.n();
    let size = 1u32 << n;
    let mut row = vec![0.0; n + 1];
    let fx = true_fitness(spec, x);
    match lambda {
        1 => {
            for mask in 0..size {
                let y = x ^ mask;
                let next = if true_fitness(spec, y) >= fx { y } else { x };
                row[next.count_ones() as usize] += mask_prob(n, mask, p);
            }
        }
        2 => {
            for m1 in 0..size {
                let w1 = mask_prob(n, m1, p);
                for m2 in 0..size {
                    let (y1, y2) = (x ^ m1, x ^ m2);
                    // parent wins ties, then the lower offspring index
                    let mut best = (x, fx);
                    for y in [y1, y2] {
                        let fy = true_fitness(spec, y);
                        if fy > best.1 {
                            best = (y, fy);
                        }
                    }
                    row[best.0.count_ones() as usize] += w1 * mask_prob(n, m2, p);
                }
            }
        }
        _ => panic!("oracle covers lambda 1 and 2"),
    }
    row
}

pub fn reeval_row(spec: &ProblemSpec, rule: &SelectionRule, p: f64, x: u32, laws: &[Law]) -> Vec<f64> {
    let n = spec.n();
    let mut row = vec![0.0; n + 1];
    for mask in 0..(1u32 << n) {
        let y = x ^ mask;
        let w = mask_prob(n, mask, p);
        let acc = accept_prob(rule, n, &laws[y as usize], &laws[x as usize]);
        row[y.count_ones() as usize] += w * acc;
        row[x.count_ones() as usize] += w * (1.0 - acc);
    }
    row
}

pub fn all_laws(model: &NoiseModel, spec: &ProblemSpec) -> Vec<Law> {
    (0..(1u32 << spec.n())).map(|z| noisy_law(model, spec, z)).collect()
}

/// Row of the single-evaluation chain from `(x, stored)`, aggregated onto
/// `(ones, stored)` labels.
pub fn singleeval_row(spec: &ProblemSpec, pn: f64, p: f64, x: u32, stored: i64) -> BTreeMap<StateLabel, f64> {
    let n = spec.n();
    let model = NoiseModel::OneBit { pn };
    let mut row = BTreeMap::new();
    let here = StateLabel::Stored { ones: x.count_ones() as usize, value: stored };
    for mask in 0..(1u32 << n) {
        let y = x ^ mask;
        let w = mask_prob(n, mask, p);
        let Law::Atoms(atoms) = noisy_law(&model, spec, y) else { unreachable!() };
        for (v, wv) in atoms {
            let label = if v >= stored as f64 {
                StateLabel::Stored { ones: y.count_ones() as usize, value: v as i64 }
            } else {
                here
            };
            *row.entry(label).or_insert(0.0) += w * wv;
        }
    }
    row
}

/// Largest entrywise difference between `chain` and the full-space oracle,
/// over every solution of every lumped state.
pub fn max_deviation_ones(chain: &LumpedChain<f64>, oracle: impl Fn(u32) -> Vec<f64>) -> f64 {
    let n = chain.len() - 1;
    let mut worst: f64 = 0.0;
    for x in 0..(1u32 << n) {
        let i = chain.index_of(StateLabel::Ones(x.count_ones() as usize)).expect("ones-count state");
        let full = oracle(x);
        for (j, value) in full.iter().enumerate() {
            let k = chain.index_of(StateLabel::Ones(j)).unwrap();
            worst = worst.max((chain.prob(i, k) - value).abs());
        }
    }
    worst
}

pub fn max_deviation_singleeval(chain: &LumpedChain<f64>, spec: &ProblemSpec, pn: f64, p: f64) -> f64 {
    let n = spec.n();
    let mut worst: f64 = 0.0;
    for (i, label) in chain.states().iter().enumerate() {
        let StateLabel::Stored { ones, value } = *label else { panic!("unexpected label {label}") };
        for x in (0..(1u32 << n)).filter(|x| x.count_ones() as usize == ones) {
            let full = singleeval_row(spec, pn, p, x, value);
            for (target, prob) in &full {
                match chain.index_of(*target) {
                    Some(k) => worst = worst.max((chain.prob(i, k) - prob).abs()),
                    None => worst = worst.max(*prob),
                }
            }
            let covered: f64 = chain
                .states()
                .iter()
                .enumerate()
                .filter(|(_, s)| !full.contains_key(s))
                .map(|(k, _)| *chain.prob(i, k))
                .sum();
            worst = worst.max(covered);
        }
    }
    worst
}

/// Start law of the single-evaluation chain: a uniform solution and one noisy
/// evaluation of it.
pub fn singleeval_initial(spec: &ProblemSpec, pn: f64) -> BTreeMap<StateLabel, f64> {
    let n = spec.n();
    let model = NoiseModel::OneBit { pn };
    let mut law = BTreeMap::new();
    let w = 1.0 / (1u64 << n) as f64;
    for x in 0..(1u32 << n) {
        let Law::Atoms(atoms) = noisy_law(&model, spec, x) else { unreachable!() };
        for (v, wv) in atoms {
            *law.entry(StateLabel::Stored { ones: x.count_ones() as usize, value: v as i64 }).or_insert(0.0) += w * wv;
        }
    }
    law
}

/// Every configuration the exact builders support at size `n`, with the
/// oracle's deviation from the lumped kernel.
pub fn oracle_sweep(n: usize) -> Vec<(String, f64)> {
    let mut out = Vec::new();
    let specs = {
        let mut v = vec![ProblemSpec::one_max(n).unwrap(), ProblemSpec::trap(n).unwrap()];
        if n >= 2 {
            v.push(ProblemSpec::jump(n, 2).unwrap());
        }
        v
    };
    let models = [
        NoiseModel::additive(-1.0, 2.0).unwrap(),
        NoiseModel::multiplicative(0.5, 2.0).unwrap(),
        NoiseModel::one_bit(0.4).unwrap(),
    ];
    let rules = [SelectionRule::Standard, SelectionRule::hard(1.0).unwrap(), SelectionRule::SmoothThreshold];
    let rates = [1.0 / n as f64, 0.3];
    for spec in &specs {
        for &p in &rates {
            for lambda in [1, 2] {
                let chain = noisy_ea::noiseless_chain(spec, lambda, &p).unwrap();
                let d = max_deviation_ones(&chain, |x| noiseless_row(spec, lambda, p, x));
                out.push((format!("{spec} noiseless lambda={lambda} p={p:.3}"), d));
            }
            for model in &models {
                let laws = all_laws(model, spec);
                for rule in &rules {
                    let chain = noisy_ea::noisy_chain_reeval(spec, model, rule, 1, &p).unwrap();
                    let d = max_deviation_ones(&chain, |x| reeval_row(spec, rule, p, x, &laws));
                    out.push((format!("{spec} reeval {model:?} {rule:?} p={p:.3}"), d));
                }
            }
            let pn = 0.4;
            let chain = noisy_ea::noisy_chain_singleeval(spec, pn, &p).unwrap();
            let mut d = max_deviation_singleeval(&chain, spec, pn, p);
            for (label, w) in singleeval_initial(spec, pn) {
                let k = chain.index_of(label).expect("initial state in chain");
                d = d.max((chain.initial()[k] - w).abs());
            }
            out.push((format!("{spec} singleeval pn={pn} p={p:.3}"), d));
        }
    }
    out
}
