//! Layered affine + ReLU networks with exact and floating evaluation.
//!
//! A network with layers `(W_1, b_1), ..., (W_L, b_L)` computes
//! `W_L relu(... relu(W_1 x + b_1) ...) + b_L`. Every weight and bias is a
//! [`FixedScalar`]. Exact evaluation keeps all intermediates as dyadic
//! rationals; floating evaluation runs on a cached `f64` copy.

use std::sync::Arc;

use num_bigint::BigInt;
use num_traits::{Signed, ToPrimitive, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bounds::Interval;
use crate::dyadic::Dyadic;
use crate::error::{ensure_dim, invalid, ForgeError, Result};
use crate::fixed::FixedScalar;
use crate::lipschitz::lipschitz_upper;
use crate::matrix::{CsrF64, Matrix};

pub const SCHEMA: &str = "forge.relu-net.v1";

/// Dense JSON is used up to this many entries per layer; larger layers are
/// written as coordinate triplets.
pub const DENSE_JSON_LIMIT: usize = 1 << 20;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Layer {
    pub weights: Matrix,
    pub bias: Vec<FixedScalar>,
}

impl Layer {
    pub fn new(weights: Matrix, bias: Vec<FixedScalar>) -> Self {
        Layer { weights, bias }
    }

    pub fn rows(&self) -> usize {
        self.weights.rows()
    }

    pub fn cols(&self) -> usize {
        self.weights.cols()
    }

    pub fn max_tau(&self) -> u32 {
        self.weights.max_tau().max(self.bias.iter().map(|b| b.tau()).max().unwrap_or(0))
    }
}

/// Depth, size, Lipschitz claim, bit complexity, and dimensions of a network.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComplexityProfile {
    pub depth: usize,
    pub size: usize,
    pub lambda: f64,
    pub tau: u32,
    pub d_in: usize,
    pub d_out: usize,
}

impl ComplexityProfile {
    /// Same structural fields (everything except the Lipschitz claim).
    pub fn same_shape(&self, other: &ComplexityProfile) -> bool {
        self.depth == other.depth
            && self.size == other.size
            && self.tau == other.tau
            && self.d_in == other.d_in
            && self.d_out == other.d_out
    }
}

/// Intermediate-size budget for exact evaluation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExactConfig {
    /// Maximum bits allowed in any layer's common-exponent numerators.
    pub headroom_bits: u64,
}

impl Default for ExactConfig {
    fn default() -> Self {
        ExactConfig { headroom_bits: 128 }
    }
}

/// Integer images of one layer: `w[i] / 2^w_exp` aligned with the CSR values.
#[derive(Debug)]
struct ExactLayer {
    w_exp: u32,
    w: Vec<i128>,
    b_exp: u32,
    b: Vec<i128>,
}

#[derive(Debug)]
struct NetCache {
    float: Vec<(CsrF64, Vec<f64>)>,
    exact: Vec<ExactLayer>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(try_from = "NetFile", into = "NetFile")]
pub struct ReluNet {
    layers: Vec<Layer>,
    profile: ComplexityProfile,
    domain: Option<Vec<Interval>>,
    range_hint: Option<Vec<Interval>>,
    cache: Arc<NetCache>,
}

impl PartialEq for ReluNet {
    fn eq(&self, other: &Self) -> bool {
        self.layers == other.layers
            && self.profile == other.profile
            && self.domain == other.domain
            && self.range_hint == other.range_hint
    }
}

fn common_exp(vals: &[FixedScalar]) -> u32 {
    vals.iter().map(|v| v.frac_bits()).max().unwrap_or(0)
}

fn build_cache(layers: &[Layer]) -> NetCache {
    let float = layers.iter().map(|l| (l.weights.to_f64(), l.bias.iter().map(|b| b.to_f64()).collect())).collect();
    let exact = layers
        .iter()
        .map(|l| {
            let w_exp = common_exp(l.weights.values());
            let b_exp = common_exp(&l.bias);
            // |v| <= 2^63 and exp <= 63, so the scaled integers fit in i128.
            ExactLayer {
                w_exp,
                w: l.weights.values().iter().map(|v| v.scaled_int(w_exp).expect("scaled weight fits")).collect(),
                b_exp,
                b: l.bias.iter().map(|v| v.scaled_int(b_exp).expect("scaled bias fits")).collect(),
            }
        })
        .collect();
    NetCache { float, exact }
}

fn structural_profile(layers: &[Layer], lambda: f64) -> ComplexityProfile {
    let depth = layers.len();
    let size = layers[..depth - 1].iter().map(|l| l.rows()).sum();
    ComplexityProfile {
        depth,
        size,
        lambda,
        tau: layers.iter().map(|l| l.max_tau()).max().unwrap_or(0),
        d_in: layers[0].cols(),
        d_out: layers[depth - 1].rows(),
    }
}

impl ReluNet {
    /// Validates the layer chain and derives the profile. The Lipschitz claim
    /// defaults to the product of per-layer operator-norm upper bounds.
    pub fn new(layers: Vec<Layer>) -> Result<Self> {
        if layers.is_empty() {
            return invalid("a network needs at least one layer");
        }
        for (i, l) in layers.iter().enumerate() {
            ensure_dim(l.rows(), l.bias.len(), "bias length")?;
            if i > 0 {
                ensure_dim(layers[i - 1].rows(), l.cols(), "layer chain")?;
            }
        }
        let cache = build_cache(&layers);
        let lambda = lipschitz_upper(cache.float.iter().map(|(w, _)| w));
        Ok(ReluNet {
            profile: structural_profile(&layers, lambda),
            layers,
            domain: None,
            range_hint: None,
            cache: Arc::new(cache),
        })
    }

    /// Replaces the Lipschitz claim.
    pub fn with_lambda(mut self, lambda: f64) -> Result<Self> {
        if !lambda.is_finite() || lambda < 0.0 {
            return invalid(format!("Lipschitz claim must be finite and non-negative, got {lambda}"));
        }
        self.profile.lambda = lambda;
        Ok(self)
    }

    /// Declares the input box on which the network is meant to be used.
    pub fn with_domain(mut self, domain: Vec<Interval>) -> Result<Self> {
        ensure_dim(self.d_in(), domain.len(), "domain")?;
        if !crate::bounds::all_finite(&domain) {
            return invalid("domain intervals must be finite");
        }
        self.domain = Some(domain);
        Ok(self)
    }

    pub fn without_domain(mut self) -> Self {
        self.domain = None;
        self
    }

    pub fn without_range_hint(mut self) -> Self {
        self.range_hint = None;
        self
    }

    /// Declares a known output range (used to tighten bound propagation).
    pub fn with_range_hint(mut self, range: Vec<Interval>) -> Result<Self> {
        ensure_dim(self.d_out(), range.len(), "range hint")?;
        self.range_hint = Some(range);
        Ok(self)
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn into_layers(self) -> Vec<Layer> {
        self.layers
    }

    pub fn profile(&self) -> &ComplexityProfile {
        &self.profile
    }

    pub fn domain(&self) -> Option<&[Interval]> {
        self.domain.as_deref()
    }

    pub fn range_hint(&self) -> Option<&[Interval]> {
        self.range_hint.as_deref()
    }

    pub fn d_in(&self) -> usize {
        self.profile.d_in
    }

    pub fn d_out(&self) -> usize {
        self.profile.d_out
    }

    pub fn depth(&self) -> usize {
        self.profile.depth
    }

    pub fn size(&self) -> usize {
        self.profile.size
    }

    pub fn hidden_widths(&self) -> Vec<usize> {
        self.layers[..self.depth() - 1].iter().map(|l| l.rows()).collect()
    }

    pub fn nnz(&self) -> usize {
        self.layers.iter().map(|l| l.weights.nnz()).sum()
    }

    pub(crate) fn float_layers(&self) -> impl Iterator<Item = (&CsrF64, &[f64])> {
        self.cache.float.iter().map(|(w, b)| (w, b.as_slice()))
    }

    /// Floating-point layer copies, for callers that propagate their own quantities.
    pub fn float_layer(&self, i: usize) -> (&CsrF64, &[f64]) {
        let (w, b) = &self.cache.float[i];
        (w, b)
    }

    // ---- exact evaluation ----

    /// Exact evaluation on fixed-point inputs; outputs must fit fixed scalars.
    pub fn eval_exact(&self, x: &[FixedScalar]) -> Result<Vec<FixedScalar>> {
        let xs: Vec<Dyadic> = x.iter().map(Dyadic::from).collect();
        self.eval_exact_dyadic(&xs, &ExactConfig::default())?.iter().map(Dyadic::to_fixed).collect()
    }

    /// Exact evaluation with unbounded outputs and a configurable headroom.
    pub fn eval_exact_dyadic(&self, x: &[Dyadic], cfg: &ExactConfig) -> Result<Vec<Dyadic>> {
        ensure_dim(self.d_in(), x.len(), "exact evaluation input")?;
        let e = x.iter().map(|v| v.exponent()).max().unwrap_or(0);
        let ints: Vec<BigInt> = x.iter().map(|v| v.numerator() << (e - v.exponent()) as usize).collect();
        if let Some(small) = ints.iter().map(|v| v.to_i128()).collect::<Option<Vec<_>>>() {
            if let Some(out) = self.exact_i128(small, e, cfg)? {
                return Ok(out);
            }
        }
        self.exact_big(ints, e, cfg)
    }

    /// Fast path; returns `Ok(None)` when a value leaves the i128 range.
    fn exact_i128(&self, mut a: Vec<i128>, mut e: u32, cfg: &ExactConfig) -> Result<Option<Vec<Dyadic>>> {
        let last = self.depth() - 1;
        for (li, (layer, ex)) in self.layers.iter().zip(&self.cache.exact).enumerate() {
            let t = (e + ex.w_exp).max(ex.b_exp);
            let ws = t - e - ex.w_exp;
            let bs = t - ex.b_exp;
            let csr = &self.cache.float[li].0;
            let mut z = Vec::with_capacity(layer.rows());
            for r in 0..layer.rows() {
                let mut acc: i128 = 0;
                for i in csr.row_ptr[r]..csr.row_ptr[r + 1] {
                    let p = match ex.w[i].checked_mul(a[csr.col_idx[i]]) {
                        Some(p) => p,
                        None => return Ok(None),
                    };
                    acc = match acc.checked_add(p) {
                        Some(v) => v,
                        None => return Ok(None),
                    };
                }
                let v = match shl_i128(acc, ws).and_then(|a| shl_i128(ex.b[r], bs).and_then(|b| a.checked_add(b))) {
                    Some(v) => v,
                    None => return Ok(None),
                };
                z.push(if li < last { v.max(0) } else { v });
            }
            // Strip common powers of two so exponents stay small.
            let tz = z.iter().filter(|v| **v != 0).map(|v| v.trailing_zeros()).min().unwrap_or(t).min(t);
            for v in z.iter_mut() {
                *v >>= tz;
            }
            e = t - tz;
            let bits = z.iter().map(|v| 128 - v.unsigned_abs().leading_zeros()).max().unwrap_or(0);
            if bits as u64 > cfg.headroom_bits {
                return Err(headroom_error(li, bits as u64, cfg));
            }
            a = z;
        }
        Ok(Some(a.into_iter().map(|v| Dyadic::new(BigInt::from(v), e)).collect()))
    }

    fn exact_big(&self, mut a: Vec<BigInt>, mut e: u32, cfg: &ExactConfig) -> Result<Vec<Dyadic>> {
        let last = self.depth() - 1;
        for (li, (layer, ex)) in self.layers.iter().zip(&self.cache.exact).enumerate() {
            let t = (e + ex.w_exp).max(ex.b_exp);
            let ws = (t - e - ex.w_exp) as usize;
            let bs = (t - ex.b_exp) as usize;
            let csr = &self.cache.float[li].0;
            let mut z = Vec::with_capacity(layer.rows());
            for r in 0..layer.rows() {
                let mut acc = BigInt::zero();
                for i in csr.row_ptr[r]..csr.row_ptr[r + 1] {
                    acc += &a[csr.col_idx[i]] * ex.w[i];
                }
                let v = (acc << ws) + (BigInt::from(ex.b[r]) << bs);
                z.push(if li < last && v.is_negative() { BigInt::zero() } else { v });
            }
            let tz = z.iter().filter_map(|v| v.trailing_zeros()).min().unwrap_or(t as u64).min(t as u64);
            for v in z.iter_mut() {
                *v = &*v >> tz as usize;
            }
            e = t - tz as u32;
            let bits = z.iter().map(|v| v.bits()).max().unwrap_or(0);
            if bits > cfg.headroom_bits {
                return Err(headroom_error(li, bits, cfg));
            }
            a = z;
        }
        Ok(a.into_iter().map(|v| Dyadic::new(v, e)).collect())
    }

    // ---- floating evaluation ----

    pub fn eval_float(&self, x: &[f64]) -> Result<Vec<f64>> {
        ensure_dim(self.d_in(), x.len(), "float evaluation input")?;
        if x.iter().any(|v| !v.is_finite()) {
            return invalid("non-finite network input");
        }
        Ok(self.forward_unchecked(x))
    }

    pub(crate) fn forward_unchecked(&self, x: &[f64]) -> Vec<f64> {
        let last = self.depth() - 1;
        let mut cur = x.to_vec();
        for (li, (w, b)) in self.cache.float.iter().enumerate() {
            let mut next = vec![0.0; w.rows];
            w.matvec_into(&cur, &mut next);
            for (v, bi) in next.iter_mut().zip(b) {
                *v += bi;
                if li < last && *v < 0.0 {
                    *v = 0.0;
                }
            }
            cur = next;
        }
        cur
    }

    /// Evaluates `n` row-major inputs; rows are processed in parallel, each
    /// with the same fixed summation order as [`ReluNet::eval_float`].
    pub fn eval_float_batch(&self, xs: &[f64]) -> Result<Vec<f64>> {
        let d = self.d_in();
        if d == 0 || xs.len() % d != 0 {
            return invalid("batch length is not a multiple of the input dimension");
        }
        if xs.iter().any(|v| !v.is_finite()) {
            return invalid("non-finite network input");
        }
        let outs: Vec<Vec<f64>> = xs.par_chunks(d).map(|x| self.forward_unchecked(x)).collect();
        Ok(outs.concat())
    }

    /// Hidden pre-activation signs at `x`, used for local linearizations.
    pub fn activation_masks(&self, x: &[f64]) -> Vec<Vec<bool>> {
        let last = self.depth() - 1;
        let mut cur = x.to_vec();
        let mut masks = Vec::with_capacity(last);
        for (li, (w, b)) in self.cache.float.iter().enumerate() {
            let mut next = w.matvec(&cur);
            for (v, bi) in next.iter_mut().zip(b) {
                *v += bi;
            }
            if li < last {
                let m: Vec<bool> = next.iter().map(|v| *v > 0.0).collect();
                for (v, on) in next.iter_mut().zip(&m) {
                    if !on {
                        *v = 0.0;
                    }
                }
                masks.push(m);
            }
            cur = next;
        }
        masks
    }

    /// Jacobian-vector product of the linear piece selected by `masks`.
    pub fn jvp(&self, masks: &[Vec<bool>], v: &[f64]) -> Vec<f64> {
        let mut cur = v.to_vec();
        for (li, (w, _)) in self.cache.float.iter().enumerate() {
            cur = w.matvec(&cur);
            if let Some(m) = masks.get(li) {
                for (c, on) in cur.iter_mut().zip(m) {
                    if !on {
                        *c = 0.0;
                    }
                }
            }
        }
        cur
    }

    /// Transposed Jacobian product of the linear piece selected by `masks`.
    pub fn vjp(&self, masks: &[Vec<bool>], u: &[f64]) -> Vec<f64> {
        let mut cur = u.to_vec();
        for li in (0..self.depth()).rev() {
            if li < self.depth() - 1 {
                for (c, on) in cur.iter_mut().zip(&masks[li]) {
                    if !on {
                        *c = 0.0;
                    }
                }
            }
            cur = self.cache.float[li].0.matvec_t(&cur);
        }
        cur
    }

    // ---- serialization ----

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(&NetFile::from_net(self))?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let file: NetFile = serde_json::from_str(s)?;
        file.into_net()
    }
}

fn shl_i128(v: i128, s: u32) -> Option<i128> {
    if v == 0 {
        return Some(0);
    }
    if s >= 127 {
        return None;
    }
    v.checked_mul(1i128 << s)
}

fn headroom_error(layer: usize, bits: u64, cfg: &ExactConfig) -> ForgeError {
    ForgeError::Overflow(format!("layer {layer} needs {bits} bits, headroom is {}", cfg.headroom_bits))
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LayerFile {
    rows: usize,
    cols: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    weights: Option<Vec<Vec<FixedScalar>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    entries: Option<Vec<(usize, usize, FixedScalar)>>,
    bias: Vec<FixedScalar>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct NetFile {
    schema: String,
    profile: ComplexityProfile,
    #[serde(default)]
    domain: Option<Vec<Interval>>,
    #[serde(default)]
    range_hint: Option<Vec<Interval>>,
    layers: Vec<LayerFile>,
}

impl From<ReluNet> for NetFile {
    fn from(n: ReluNet) -> Self {
        NetFile::from_net(&n)
    }
}

impl TryFrom<NetFile> for ReluNet {
    type Error = ForgeError;
    fn try_from(f: NetFile) -> Result<Self> {
        f.into_net()
    }
}

impl NetFile {
    fn from_net(net: &ReluNet) -> Self {
        let layers = net
            .layers
            .iter()
            .map(|l| {
                let (rows, cols) = (l.rows(), l.cols());
                let (weights, entries) = if rows * cols <= DENSE_JSON_LIMIT {
                    let d = l.weights.to_dense();
                    let nested =
                        if cols == 0 { vec![Vec::new(); rows] } else { d.chunks(cols).map(|c| c.to_vec()).collect() };
                    (Some(nested), None)
                } else {
                    (None, Some(l.weights.triplets().collect()))
                };
                LayerFile { rows, cols, weights, entries, bias: l.bias.clone() }
            })
            .collect();
        NetFile {
            schema: SCHEMA.to_string(),
            profile: net.profile,
            domain: net.domain.clone(),
            range_hint: net.range_hint.clone(),
            layers,
        }
    }

    fn into_net(self) -> Result<ReluNet> {
        if self.schema != SCHEMA {
            return invalid(format!("unsupported network schema '{}'", self.schema));
        }
        let mut layers = Vec::with_capacity(self.layers.len());
        for lf in self.layers {
            let weights = match (lf.weights, lf.entries) {
                (Some(rows), None) => {
                    ensure_dim(lf.rows, rows.len(), "weight rows")?;
                    let mut flat = Vec::with_capacity(lf.rows * lf.cols);
                    for row in rows {
                        ensure_dim(lf.cols, row.len(), "weight row length")?;
                        flat.extend(row);
                    }
                    Matrix::from_dense(lf.rows, lf.cols, &flat)?
                }
                (None, Some(trips)) => Matrix::from_triplets(lf.rows, lf.cols, trips)?,
                _ => return invalid("a layer needs exactly one of 'weights' or 'entries'"),
            };
            layers.push(Layer::new(weights, lf.bias));
        }
        let mut net = ReluNet::new(layers)?;
        if !net.profile.same_shape(&self.profile) {
            return invalid(format!("stored profile {:?} does not match the layers {:?}", self.profile, net.profile));
        }
        net = net.with_lambda(self.profile.lambda)?;
        if let Some(d) = self.domain {
            net = net.with_domain(d)?;
        }
        if let Some(r) = self.range_hint {
            net = net.with_range_hint(r)?;
        }
        Ok(net)
    }
}
