//! Agreement of a classifier with the range-membership function under the
//! half-uniform, half-pseudorandom mixture, and the fooling-based upper bound.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use forge_compiler::{index_point, LtfCircuit};
use forge_core::error::{ensure_dim, invalid, Result};
use forge_core::rng::{stream_rng, RngSeed};
use forge_core::{FixedScalar, ReluNet};

use crate::range::{pack, HardFunction};

/// Largest output length enumerated in exact mode.
pub const MAX_EXACT_D: usize = 24;

/// Slack allowed in [`check_hardness_bound`].
pub const BOUND_TOLERANCE: f64 = 1.0 / (1u64 << 50) as f64;

/// A ±1-valued test on `{±1}^d`.
#[derive(Clone, Debug)]
pub enum Classifier {
    Circuit(LtfCircuit),
    /// `x -> sgn(net(x))` with `sgn(0) = +1`, evaluated exactly.
    SignNet(ReluNet),
    /// Values on all `2^d` points, indexed as in [`index_point`].
    Table(Vec<i8>),
    Constant {
        d: usize,
        value: i8,
    },
}

impl Classifier {
    pub fn d(&self) -> usize {
        match self {
            Classifier::Circuit(c) => c.n(),
            Classifier::SignNet(n) => n.d_in(),
            Classifier::Table(t) => t.len().trailing_zeros() as usize,
            Classifier::Constant { d, .. } => *d,
        }
    }

    pub fn eval(&self, x: &[i8]) -> Result<i8> {
        ensure_dim(self.d(), x.len(), "classifier input")?;
        match self {
            Classifier::Circuit(c) => c.eval(x),
            Classifier::SignNet(n) => {
                let xs: Vec<FixedScalar> = x.iter().map(|&v| FixedScalar::from_int(v as i64)).collect::<Result<_>>()?;
                let y = n.eval_exact(&xs)?;
                if y.len() != 1 {
                    return invalid("sign network must have one output");
                }
                Ok(if y[0].signum() >= 0 { 1 } else { -1 })
            }
            Classifier::Table(t) => Ok(t[forge_compiler::point_index(x)]),
            Classifier::Constant { value, .. } => Ok(*value),
        }
    }

    /// Truth table of the range-membership function itself.
    pub fn oracle(h: &HardFunction) -> Result<Classifier> {
        let d = h.d();
        if d > MAX_EXACT_D {
            return invalid(format!("d = {d} is above the table limit {MAX_EXACT_D}"));
        }
        let t = (0..1usize << d).into_par_iter().map(|i| h.eval(&index_point(i, d))).collect::<Result<_>>()?;
        Ok(Classifier::Table(t))
    }
}

/// How to evaluate expectations under the mixture.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "kebab-case")]
pub enum Mode {
    Exact,
    MonteCarlo { samples: usize, seed: RngSeed },
}

/// Equal-weight mixture of uniform `{±1}^d` and the PRG image of uniform seeds.
pub struct MixtureDist<'a> {
    h: &'a HardFunction,
}

impl<'a> MixtureDist<'a> {
    pub fn new(h: &'a HardFunction) -> Self {
        MixtureDist { h }
    }

    /// `n` draws; sample `i` comes from its own stream.
    pub fn sample(&self, n: usize, seed: RngSeed) -> Result<Vec<Vec<i8>>> {
        let (m, d) = (self.h.m(), self.h.d());
        (0..n)
            .into_par_iter()
            .map(|i| {
                let mut rng = stream_rng(seed, i as u64);
                let mut draw =
                    |k: usize| -> Vec<i8> { (0..k).map(|_| if rng.random_bool(0.5) { 1 } else { -1 }).collect() };
                if draw(1)[0] > 0 {
                    Ok(draw(d))
                } else {
                    self.h.prg().eval(&draw(m))
                }
            })
            .collect()
    }
}

/// Exact counts over both mixture components.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counts {
    pub m: usize,
    pub d: usize,
    /// `#{x : f(x) = h(x)}` over `{±1}^d`.
    pub agree_uniform: u64,
    /// `#{y : f(G(y)) = +1}` over `{±1}^m`.
    pub accept_prg: u64,
    /// `sum_x f(x)` over `{±1}^d`.
    pub sum_uniform: i64,
    /// `sum_y f(G(y))` over `{±1}^m`.
    pub sum_prg: i64,
}

impl Counts {
    /// Every quantity scaled by `2^{m+d+2}`, as exact integers `(lhs, rhs)`.
    pub fn scaled(&self) -> (i128, i128) {
        let (m, d) = (self.m as u32, self.d as u32);
        let lhs = 2 * ((self.agree_uniform as i128) << m) + 2 * ((self.accept_prg as i128) << d);
        let eps = ((self.sum_prg as i128) << d) - ((self.sum_uniform as i128) << m);
        let rhs = (1i128 << (m + d + 1)) + eps.abs() + (1i128 << (2 * m + 1));
        (lhs, rhs)
    }

    pub fn agreement(&self) -> f64 {
        0.5 * self.agree_uniform as f64 / (self.d as f64).exp2() + 0.5 * self.accept_prg as f64 / (self.m as f64).exp2()
    }

    pub fn epsilon(&self) -> f64 {
        (self.sum_prg as f64 / (self.m as f64).exp2() - self.sum_uniform as f64 / (self.d as f64).exp2()).abs()
    }
}

fn check_dims(f: &Classifier, h: &HardFunction) -> Result<()> {
    ensure_dim(h.d(), f.d(), "classifier dimension")
}

/// Enumerates `{±1}^d` and all seeds.
pub fn exact_counts(f: &Classifier, h: &HardFunction) -> Result<Counts> {
    check_dims(f, h)?;
    let (m, d) = (h.m(), h.d());
    if d > MAX_EXACT_D {
        return invalid(format!("exact mode needs d <= {MAX_EXACT_D}, got {d}"));
    }
    let (agree_uniform, sum_uniform) = (0..1usize << d)
        .into_par_iter()
        .map(|i| -> Result<(u64, i64)> {
            let x = index_point(i, d);
            let v = f.eval(&x)?;
            let hv = if h.contains_packed(&pack(&x)) { 1 } else { -1 };
            Ok((u64::from(v == hv), v as i64))
        })
        .try_reduce(|| (0, 0), |a, b| Ok((a.0 + b.0, a.1 + b.1)))?;
    let (accept_prg, sum_prg) = (0..1usize << m)
        .into_par_iter()
        .map(|i| -> Result<(u64, i64)> {
            let v = f.eval(&h.prg().eval(&index_point(i, m))?)?;
            Ok((u64::from(v > 0), v as i64))
        })
        .try_reduce(|| (0, 0), |a, b| Ok((a.0 + b.0, a.1 + b.1)))?;
    Ok(Counts { m, d, agree_uniform, accept_prg, sum_uniform, sum_prg })
}

/// `Pr_{x ~ mixture}[f(x) = h(x)]`.
pub fn agreement_probability(f: &Classifier, h: &HardFunction, mode: Mode) -> Result<f64> {
    match mode {
        Mode::Exact => Ok(exact_counts(f, h)?.agreement()),
        Mode::MonteCarlo { samples, seed } => {
            check_dims(f, h)?;
            if samples == 0 {
                return invalid("need at least one sample");
            }
            let xs = MixtureDist::new(h).sample(samples, seed)?;
            let hits = xs
                .par_iter()
                .map(|x| -> Result<u64> { Ok(u64::from(f.eval(x)? == h.eval(x)?)) })
                .try_reduce(|| 0, |a, b| Ok(a + b))?;
            Ok(hits as f64 / samples as f64)
        }
    }
}

/// Outcome of [`check_hardness_bound`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HardnessReport {
    pub m: usize,
    pub d: usize,
    pub image_size: usize,
    /// `|E f(G(U_m)) - E f(U_d)|`.
    pub epsilon: f64,
    pub lhs: f64,
    /// `1/2 + epsilon/4 + 2^{m-d-1}`.
    pub rhs: f64,
    pub holds: bool,
    /// `rhs - lhs` as an exact fraction `slack_num / 2^{m+d+2}`.
    pub slack_num: i128,
    pub witnesses_checked: usize,
    pub witness_failures: usize,
    /// `d / (m log2 m)`; informative only.
    pub stretch_ratio: f64,
    pub counts: Counts,
}

/// Exact agreement vs. the fooling bound, plus witness spot checks on every
/// `witness_stride`-th image point.
pub fn check_hardness_bound(f: &Classifier, h: &HardFunction, witness_stride: usize) -> Result<HardnessReport> {
    let c = exact_counts(f, h)?;
    let (lhs_num, rhs_num) = c.scaled();
    let scale = ((c.m + c.d + 2) as f64).exp2();
    let (lhs, rhs) = (lhs_num as f64 / scale, rhs_num as f64 / scale);
    let (witnesses_checked, witness_failures) = h.check_witnesses(witness_stride)?;
    let m = c.m as f64;
    Ok(HardnessReport {
        m: c.m,
        d: c.d,
        image_size: h.image_size(),
        epsilon: c.epsilon(),
        lhs,
        rhs,
        holds: lhs <= rhs + BOUND_TOLERANCE,
        slack_num: rhs_num - lhs_num,
        witnesses_checked,
        witness_failures,
        stretch_ratio: if c.m > 1 { c.d as f64 / (m * m.log2()) } else { f64::INFINITY },
        counts: c,
    })
}
