//! Sequential composition of networks.
//!
//! `chain(inner, outer)` feeds the outputs of `inner` into `outer`. The
//! junction needs one ReLU per passed value: each inner output `z_i` is
//! shifted by an integer `c_i >= -min z_i` (taken from bound propagation over
//! the inner domain), so `relu(z_i + c_i) = z_i + c_i` exactly, and the shift is
//! undone in the outer first-layer bias. When an inner output has no finite
//! lower bound the junction falls back to the pair `(relu(z), relu(-z))`,
//! which costs two units per value.

use forge_core::bounds::{output_bounds, Interval};
use forge_core::error::{ensure_dim, invalid, Result};
use forge_core::{FixedScalar, Layer, Matrix, ReluNet};

use crate::combine::{neg, pad_depth, pad_size, stack};

/// Which junction a composition used.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Junction {
    /// One shifted unit per value.
    Offset,
    /// Two units per value; used when an inner output is unbounded below.
    SignSplit,
}

fn contains_loosely(outer: &Interval, inner: &Interval) -> bool {
    let tol = |v: f64| 1e-6 * (1.0 + v.abs());
    inner.lo >= outer.lo - tol(outer.lo) && inner.hi <= outer.hi + tol(outer.hi)
}

/// `outer ∘ inner`, with the Lipschitz claim `Λ_inner · Λ_outer`.
pub fn chain(inner: &ReluNet, outer: &ReluNet) -> Result<ReluNet> {
    chain_with(inner, outer).map(|(n, _)| n)
}

/// Like [`chain`], also reporting which junction was used.
pub fn chain_with(inner: &ReluNet, outer: &ReluNet) -> Result<(ReluNet, Junction)> {
    ensure_dim(outer.d_in(), inner.d_out(), "composition width")?;
    let bounds = output_bounds(inner)?;
    if let Some(dom) = outer.domain() {
        for (i, (d, b)) in dom.iter().zip(&bounds).enumerate() {
            if !contains_loosely(d, b) {
                return invalid(format!(
                    "inner output {i} ranges over [{}, {}], outside the outer domain [{}, {}]",
                    b.lo, b.hi, d.lo, d.hi
                ));
            }
        }
    }
    let li = inner.depth();
    let mut layers: Vec<Layer> = inner.layers()[..li - 1].to_vec();
    let in_last = &inner.layers()[li - 1];
    let out_first = &outer.layers()[0];

    let junction = if bounds.iter().all(|b| b.lo.is_finite()) { Junction::Offset } else { Junction::SignSplit };
    match junction {
        Junction::Offset => {
            let shifts: Vec<FixedScalar> = bounds
                .iter()
                .map(|b| {
                    let c = (-b.lo).ceil().max(0.0);
                    if c >= 2f64.powi(62) {
                        return invalid("inner output bound too large for an offset junction");
                    }
                    FixedScalar::from_int(c as i64)
                })
                .collect::<Result<_>>()?;
            let bias = in_last.bias.iter().zip(&shifts).map(|(b, c)| b.checked_add(c)).collect::<Result<Vec<_>>>()?;
            layers.push(Layer::new(in_last.weights.clone(), bias));
            // b' = b - W c
            let mut ob = out_first.bias.clone();
            for (row, c, w) in out_first.weights.triplets() {
                ob[row] = ob[row].checked_sub(&w.checked_mul(&shifts[c])?)?;
            }
            layers.push(Layer::new(out_first.weights.clone(), ob));
        }
        Junction::SignSplit => {
            let w = Matrix::vstack(&[&in_last.weights, &neg(&in_last.weights)])?;
            let mut b = in_last.bias.clone();
            b.extend(in_last.bias.iter().map(|v| v.neg()));
            layers.push(Layer::new(w, b));
            let ow = Matrix::hstack(&[&out_first.weights, &neg(&out_first.weights)])?;
            layers.push(Layer::new(ow, out_first.bias.clone()));
        }
    }
    layers.extend(outer.layers()[1..].iter().cloned());
    debug_assert_eq!(layers.len(), li + outer.depth());

    let lambda = inner.profile().lambda * outer.profile().lambda;
    let mut net = ReluNet::new(layers)?.with_lambda(lambda)?;
    if let Some(d) = inner.domain() {
        net = net.with_domain(d.to_vec())?;
    }
    if let Some(h) = outer.range_hint() {
        net = net.with_range_hint(h.to_vec())?;
    }
    Ok((net, junction))
}

/// `outer(inner_1(x), ..., inner_r(x))` for scalar inner networks.
///
/// Inner networks are padded to a common depth and a common size, stacked,
/// and chained into `outer`. With offset junctions the profile satisfies
/// `L = L1 + L2`, `S = (S1 + 1) r + S2`; the Lipschitz claim is
/// `Λ1 Λ2 sqrt(r)` with `Λ1` the largest inner claim.
pub fn compose(inners: &[&ReluNet], outer: &ReluNet) -> Result<ReluNet> {
    let r = inners.len();
    if r == 0 {
        return invalid("compose needs at least one inner network");
    }
    ensure_dim(outer.d_in(), r, "outer input dimension")?;
    for n in inners {
        ensure_dim(1, n.d_out(), "inner networks must be scalar")?;
    }
    let depth = inners.iter().map(|n| n.depth()).max().unwrap();
    let mut padded: Vec<ReluNet> = inners.iter().map(|n| pad_depth(n, depth)).collect::<Result<_>>()?;
    let size = padded.iter().map(|n| n.size()).max().unwrap();
    padded = padded.iter().map(|n| pad_size(n, size)).collect::<Result<_>>()?;
    let refs: Vec<&ReluNet> = padded.iter().collect();
    let lambda1 = inners.iter().map(|n| n.profile().lambda).fold(0.0, f64::max);
    let stacked = stack(&refs)?;
    let net = chain(&stacked, outer)?;
    net.with_lambda(lambda1 * outer.profile().lambda * (r as f64).sqrt())
}
