//! Structural network operations: depth and size padding, parallel stacking,
//! linear combination, input embedding and power-of-two rebalancing.

use forge_core::bounds::Interval;
use forge_core::error::{ensure_dim, invalid, Result};
use forge_core::linalg::opnorm_estimate;
use forge_core::{FixedScalar, Layer, Matrix, ReluNet};

pub(crate) fn neg(m: &Matrix) -> Matrix {
    m.try_map(|v| Ok(v.neg())).expect("negation is exact")
}

fn neg_vec(v: &[FixedScalar]) -> Vec<FixedScalar> {
    v.iter().map(|x| x.neg()).collect()
}

/// `(u, v) -> (u - v, v - u)`: carries a signed value through a ReLU as a pair.
fn pair_pass(d: usize) -> Matrix {
    let i = Matrix::identity(d);
    let n = neg(&i);
    let top = Matrix::hstack(&[&i, &n]).expect("square blocks");
    let bot = Matrix::hstack(&[&n, &i]).expect("square blocks");
    Matrix::vstack(&[&top, &bot]).expect("equal widths")
}

/// Re-attaches the metadata of `src` to a rebuilt network with the same function.
fn carry_meta(src: &ReluNet, layers: Vec<Layer>) -> Result<ReluNet> {
    let mut out = ReluNet::new(layers)?.with_lambda(src.profile().lambda)?;
    if let Some(d) = src.domain() {
        out = out.with_domain(d.to_vec())?;
    }
    if let Some(r) = src.range_hint() {
        out = out.with_range_hint(r.to_vec())?;
    }
    Ok(out)
}

/// Extends a network to `target` layers without changing its function.
///
/// The output is split into `(relu(z), relu(-z))` and carried through the
/// extra layers as a pair, adding `2 * d_out` units per extra layer.
pub fn pad_depth(net: &ReluNet, target: usize) -> Result<ReluNet> {
    let l = net.depth();
    if target < l {
        return invalid(format!("cannot pad depth {l} down to {target}"));
    }
    if target == l {
        return Ok(net.clone());
    }
    let d = net.d_out();
    let mut layers = net.layers()[..l - 1].to_vec();
    let last = &net.layers()[l - 1];
    let w = Matrix::vstack(&[&last.weights, &neg(&last.weights)])?;
    let mut b = last.bias.clone();
    b.extend(neg_vec(&last.bias));
    layers.push(Layer::new(w, b));
    for _ in 0..target - l - 1 {
        layers.push(Layer::new(pair_pass(d), vec![FixedScalar::ZERO; 2 * d]));
    }
    let i = Matrix::identity(d);
    layers.push(Layer::new(Matrix::hstack(&[&i, &neg(&i)])?, vec![FixedScalar::ZERO; d]));
    carry_meta(net, layers)
}

/// Adds dead units to the first hidden layer until the size reaches `target`.
pub fn pad_size(net: &ReluNet, target: usize) -> Result<ReluNet> {
    let s = net.size();
    if target < s {
        return invalid(format!("cannot pad size {s} down to {target}"));
    }
    if target == s {
        return Ok(net.clone());
    }
    if net.depth() < 2 {
        return invalid("an affine network has no hidden layer to pad");
    }
    let extra = target - s;
    let mut layers = net.layers().to_vec();
    layers[0].weights = layers[0].weights.pad_rows(extra);
    layers[0].bias.extend(std::iter::repeat_n(FixedScalar::ZERO, extra));
    layers[1].weights = layers[1].weights.pad_cols(extra);
    carry_meta(net, layers)
}

fn shared_domain(nets: &[&ReluNet]) -> Result<Option<Vec<Interval>>> {
    let mut dom: Option<Vec<Interval>> = None;
    for n in nets {
        if let Some(d) = n.domain() {
            dom = Some(match dom {
                None => d.to_vec(),
                Some(cur) => cur.iter().zip(d).map(|(a, b)| a.intersect(b)).collect(),
            });
        }
    }
    if let Some(d) = &dom {
        if d.iter().any(|iv| iv.lo > iv.hi) {
            return invalid("input domains do not overlap");
        }
    }
    Ok(dom)
}

fn check_common(nets: &[&ReluNet], same_out: bool) -> Result<(usize, usize)> {
    let first = match nets.first() {
        Some(n) => n,
        None => return invalid("need at least one network"),
    };
    for n in nets {
        ensure_dim(first.d_in(), n.d_in(), "shared input dimension")?;
        ensure_dim(first.depth(), n.depth(), "shared depth (pad first)")?;
        if same_out {
            ensure_dim(first.d_out(), n.d_out(), "shared output dimension")?;
        }
    }
    Ok((first.d_in(), first.depth()))
}

/// Runs networks side by side on the same input; outputs are concatenated.
pub fn stack(nets: &[&ReluNet]) -> Result<ReluNet> {
    let (_, depth) = check_common(nets, false)?;
    let mut layers = Vec::with_capacity(depth);
    for li in 0..depth {
        let mats: Vec<&Matrix> = nets.iter().map(|n| &n.layers()[li].weights).collect();
        let w = if li == 0 { Matrix::vstack(&mats)? } else { Matrix::block_diag(&mats)? };
        let b = nets.iter().flat_map(|n| n.layers()[li].bias.iter().copied()).collect();
        layers.push(Layer::new(w, b));
    }
    let lambda = nets.iter().map(|n| n.profile().lambda.powi(2)).sum::<f64>().sqrt();
    let mut out = ReluNet::new(layers)?;
    let bound = out.profile().lambda;
    out = out.with_lambda(lambda.min(bound))?;
    if let Some(d) = shared_domain(nets)? {
        out = out.with_domain(d)?;
    }
    if nets.iter().all(|n| n.range_hint().is_some()) {
        let r = nets.iter().flat_map(|n| n.range_hint().unwrap().iter().copied()).collect();
        out = out.with_range_hint(r)?;
    }
    Ok(out)
}

/// `sum_i lambda_i * net_i`, built by stacking hidden layers and mixing the
/// output layers with the coefficients. Size is the sum of sizes.
pub fn linear_combine(nets: &[&ReluNet], lambdas: &[FixedScalar]) -> Result<ReluNet> {
    ensure_dim(nets.len(), lambdas.len(), "one coefficient per network")?;
    let (_, depth) = check_common(nets, true)?;
    let d_out = nets[0].d_out();
    let scaled_last = |n: &ReluNet, lam: &FixedScalar| -> Result<(Matrix, Vec<FixedScalar>)> {
        let last = &n.layers()[depth - 1];
        let w = last.weights.try_map(|v| v.checked_mul(lam))?;
        let b = last.bias.iter().map(|v| v.checked_mul(lam)).collect::<Result<Vec<_>>>()?;
        Ok((w, b))
    };
    let mut layers = Vec::with_capacity(depth);
    for li in 0..depth - 1 {
        let mats: Vec<&Matrix> = nets.iter().map(|n| &n.layers()[li].weights).collect();
        let w = if li == 0 { Matrix::vstack(&mats)? } else { Matrix::block_diag(&mats)? };
        let b = nets.iter().flat_map(|n| n.layers()[li].bias.iter().copied()).collect();
        layers.push(Layer::new(w, b));
    }
    let mut lasts = Vec::with_capacity(nets.len());
    let mut bias = vec![FixedScalar::ZERO; d_out];
    for (n, lam) in nets.iter().zip(lambdas) {
        let (w, b) = scaled_last(n, lam)?;
        for (acc, v) in bias.iter_mut().zip(&b) {
            *acc = acc.checked_add(v)?;
        }
        lasts.push(w);
    }
    let refs: Vec<&Matrix> = lasts.iter().collect();
    let w_last = if depth == 1 {
        // A single affine layer: the weighted matrices are summed.
        let mut trips = Vec::new();
        for m in &refs {
            trips.extend(m.triplets());
        }
        sum_triplets(d_out, nets[0].d_in(), trips)?
    } else {
        Matrix::hstack(&refs)?
    };
    layers.push(Layer::new(w_last, bias));
    let claim: f64 = nets.iter().zip(lambdas).map(|(n, l)| l.to_f64().abs() * n.profile().lambda).sum();
    let mut out = ReluNet::new(layers)?;
    let bound = out.profile().lambda;
    out = out.with_lambda(claim.min(bound))?;
    if let Some(d) = shared_domain(nets)? {
        out = out.with_domain(d)?;
    }
    Ok(out)
}

fn sum_triplets(rows: usize, cols: usize, mut trips: Vec<(usize, usize, FixedScalar)>) -> Result<Matrix> {
    trips.sort_by_key(|t| (t.0, t.1));
    let mut merged: Vec<(usize, usize, FixedScalar)> = Vec::new();
    for t in trips {
        match merged.last_mut() {
            Some(m) if m.0 == t.0 && m.1 == t.1 => m.2 = m.2.checked_add(&t.2)?,
            _ => merged.push(t),
        }
    }
    Matrix::from_triplets(rows, cols, merged)
}

/// Adds a constant vector to the output.
pub fn add_output_bias(net: &ReluNet, c: &[FixedScalar]) -> Result<ReluNet> {
    ensure_dim(net.d_out(), c.len(), "output offset")?;
    let mut layers = net.layers().to_vec();
    let last = layers.last_mut().expect("non-empty");
    for (b, v) in last.bias.iter_mut().zip(c) {
        *b = b.checked_add(v)?;
    }
    Ok(carry_meta(net, layers)?.without_range_hint())
}

/// Re-indexes the inputs: input `j` of `net` becomes coordinate `indices[j]`
/// of an `m`-dimensional input. Indices must be distinct.
pub fn embed_inputs(net: &ReluNet, m: usize, indices: &[usize]) -> Result<ReluNet> {
    ensure_dim(net.d_in(), indices.len(), "embedding indices")?;
    let mut seen = vec![false; m];
    for &i in indices {
        if i >= m || seen[i] {
            return invalid("embedding indices must be distinct and below the new dimension");
        }
        seen[i] = true;
    }
    let mut layers = net.layers().to_vec();
    layers[0].weights = layers[0].weights.remap_cols(m, indices)?;
    let mut out = ReluNet::new(layers)?.with_lambda(net.profile().lambda)?;
    if let Some(d) = net.domain() {
        // Unused coordinates do not influence the output.
        let mut dom = vec![Interval::sym(f64::MAX); m];
        for (j, &i) in indices.iter().enumerate() {
            dom[i] = d[j];
        }
        out = out.with_domain(dom)?;
    }
    if let Some(r) = net.range_hint() {
        out = out.with_range_hint(r.to_vec())?;
    }
    Ok(out)
}

/// Multiplies layer `i` by a power of two `2^{e_i}` with `sum e_i = 0` so that
/// estimated operator norms become roughly equal. Biases are scaled by the
/// running product, so the function is unchanged (ReLU is positively
/// homogeneous).
pub fn rebalance(net: &ReluNet) -> Result<ReluNet> {
    let l = net.depth();
    if l < 2 {
        return Ok(net.clone());
    }
    let norms: Vec<f64> = (0..l).map(|i| opnorm_estimate(net.float_layer(i).0, 40, i as u64)).collect();
    if norms.iter().any(|n| *n <= 0.0 || !n.is_finite()) {
        return Ok(net.clone());
    }
    let logs: Vec<f64> = norms.iter().map(|n| n.log2()).collect();
    let mean = logs.iter().sum::<f64>() / l as f64;
    let mut exps: Vec<i32> = logs.iter().map(|g| (mean - g).round() as i32).collect();
    let total: i32 = exps.iter().sum();
    exps[l - 1] -= total;
    if exps.iter().all(|e| *e == 0) {
        return Ok(net.clone());
    }
    let mut layers = Vec::with_capacity(l);
    let mut running = 0i32;
    for (layer, &e) in net.layers().iter().zip(&exps) {
        running += e;
        let w = layer.weights.try_map(|v| v.scale_pow2(e))?;
        let b = layer.bias.iter().map(|v| v.scale_pow2(running)).collect::<Result<Vec<_>>>()?;
        layers.push(Layer::new(w, b));
    }
    carry_meta(net, layers)
}
