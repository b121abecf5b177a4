//! Parity (character) networks and whole-predicate compilation.
//!
//! The product of two signs is realized with four ReLU units:
//! `ab = relu(a+b) + relu(-a-b) - relu(b) - relu(-b)` for `a, b in {±1}`.
//! A parity over `s` coordinates chains `s - 1` such products; coordinates
//! that are still waiting travel alongside as `(relu(x), relu(-x))` pairs.

use forge_core::error::{invalid, Result};
use forge_core::linalg::opnorm_upper;
use forge_core::{FixedScalar, Layer, Matrix, ReluNet};

use crate::combine::{add_output_bias, linear_combine, pad_depth, rebalance};
use crate::fourier::{fourier_transform, subset_members};
use crate::predicate::{Predicate, MAX_ARITY};

fn one() -> FixedScalar {
    FixedScalar::ONE
}

fn neg_one() -> FixedScalar {
    FixedScalar::NEG_ONE
}

/// Network computing `prod_{i in set} x_i` on `{±1}^k`; `set` is 0-based.
///
/// Depth `|set|`; hidden layer `j` (1-based) has `4 + 2(|set| - 1 - j)` units.
pub fn compile_parity(set: &[usize], k: usize) -> Result<ReluNet> {
    if set.is_empty() {
        return invalid("parity needs a non-empty index set");
    }
    let mut idx = set.to_vec();
    idx.sort_unstable();
    idx.dedup();
    if idx.len() != set.len() || idx.iter().any(|&i| i >= k) {
        return invalid(format!("parity indices must be distinct and below {k}"));
    }
    let s = idx.len();
    if s == 1 {
        let w = Matrix::from_triplets(1, k, vec![(0, idx[0], one())])?;
        return ReluNet::new(vec![Layer::new(w, vec![FixedScalar::ZERO])])?.with_lambda(1.0);
    }
    let mut layers = Vec::with_capacity(s);

    // First hidden layer reads the raw inputs.
    let (a, b) = (idx[0], idx[1]);
    let mut t =
        vec![(0, a, one()), (0, b, one()), (1, a, neg_one()), (1, b, neg_one()), (2, b, one()), (3, b, neg_one())];
    for (c, &i) in idx[2..].iter().enumerate() {
        t.push((4 + 2 * c, i, one()));
        t.push((5 + 2 * c, i, neg_one()));
    }
    let rows = 4 + 2 * (s - 2);
    layers.push(Layer::new(Matrix::from_triplets(rows, k, t)?, vec![FixedScalar::ZERO; rows]));

    // Each further hidden layer multiplies in the next waiting coordinate.
    let mut prev_rows = rows;
    for j in 2..s {
        let waiting = s - j; // pairs in the previous layer
        let rows = 4 + 2 * (waiting - 1);
        let mut t = Vec::new();
        // p = h0 + h1 - h2 - h3 and next factor q = h4 - h5.
        let p = [(0, one()), (1, one()), (2, neg_one()), (3, neg_one())];
        let q = [(4, one()), (5, neg_one())];
        for &(c, v) in p.iter().chain(q.iter()) {
            t.push((0, c, v));
            t.push((1, c, v.neg()));
        }
        for &(c, v) in q.iter() {
            t.push((2, c, v));
            t.push((3, c, v.neg()));
        }
        for w in 1..waiting {
            let (src_pos, src_neg) = (4 + 2 * w, 5 + 2 * w);
            let dst = 4 + 2 * (w - 1);
            t.push((dst, src_pos, one()));
            t.push((dst, src_neg, neg_one()));
            t.push((dst + 1, src_pos, neg_one()));
            t.push((dst + 1, src_neg, one()));
        }
        layers.push(Layer::new(Matrix::from_triplets(rows, prev_rows, t)?, vec![FixedScalar::ZERO; rows]));
        prev_rows = rows;
    }
    let out =
        Matrix::from_triplets(1, prev_rows, vec![(0, 0, one()), (0, 1, one()), (0, 2, neg_one()), (0, 3, neg_one())])?;
    layers.push(Layer::new(out, vec![FixedScalar::ZERO]));
    ReluNet::new(layers)
}

/// Operator-norm upper bounds of each layer (before any rescaling).
pub fn layer_norms(net: &ReluNet) -> Vec<f64> {
    (0..net.depth()).map(|i| opnorm_upper(net.float_layer(i).0)).collect()
}

/// Compiles a predicate to a network that agrees with it on every point of
/// `{±1}^k`.
///
/// Each non-constant Fourier term becomes a parity network padded to depth
/// `k`; the terms are summed with their coefficients, the constant term is
/// folded into the output bias, and layers are rebalanced by powers of two.
/// A constant predicate becomes a single affine layer.
pub fn compile_predicate(p: &Predicate) -> Result<ReluNet> {
    let k = p.k();
    if k > MAX_ARITY {
        return invalid(format!("arity {k} exceeds the cap {MAX_ARITY}"));
    }
    let f = fourier_transform(p);
    let constant = f.coeff(0);
    let terms: Vec<(u32, FixedScalar)> = f.coeffs.iter().filter(|(s, _)| **s != 0).map(|(s, c)| (*s, *c)).collect();
    if terms.is_empty() {
        let w = Matrix::zeros(1, k);
        return ReluNet::new(vec![Layer::new(w, vec![constant])])?.with_lambda(0.0);
    }
    let mut nets = Vec::with_capacity(terms.len());
    for (s, _) in &terms {
        nets.push(pad_depth(&compile_parity(&subset_members(*s), k)?, k)?);
    }
    let refs: Vec<&ReluNet> = nets.iter().collect();
    let coeffs: Vec<FixedScalar> = terms.iter().map(|t| t.1).collect();
    let mut net = linear_combine(&refs, &coeffs)?;
    if !constant.is_zero() {
        net = add_output_bias(&net, &[constant])?;
    }
    rebalance(&net)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::predicate::index_point;
    use forge_core::dy;

    fn exact_on_cube(net: &ReluNet, k: usize) -> Vec<i8> {
        (0..1usize << k)
            .map(|i| {
                let x: Vec<FixedScalar> = index_point(i, k).iter().map(|&v| dy(v as i128, 0)).collect();
                let out = net.eval_exact(&x).unwrap()[0];
                assert!(out == FixedScalar::ONE || out == FixedScalar::NEG_ONE, "{out}");
                out.signum() as i8
            })
            .collect()
    }

    #[test]
    fn projection_parity() {
        let net = compile_parity(&[0], 2).unwrap();
        assert_eq!(net.depth(), 1);
        assert_eq!(exact_on_cube(&net, 2), Predicate::parity(2, &[0]).unwrap().table());
    }

    #[test]
    fn parity_sizes_and_values() {
        for s in 2..=6 {
            let set: Vec<usize> = (0..s).collect();
            let net = compile_parity(&set, s).unwrap();
            assert_eq!(net.depth(), s);
            assert_eq!(net.size(), 4 * (s - 1) + (s - 1) * (s - 2));
            assert_eq!(exact_on_cube(&net, s), Predicate::parity(s, &set).unwrap().table());
        }
    }

    #[test]
    fn parity_layer_norm_product_bound() {
        for s in 1..=8 {
            let set: Vec<usize> = (0..s).collect();
            let net = compile_parity(&set, s).unwrap();
            let prod: f64 = layer_norms(&net).iter().product();
            assert!(prod <= 6f64.powi(s as i32), "s={s} prod={prod}");
        }
    }

    #[test]
    fn rejects_bad_sets() {
        assert!(compile_parity(&[], 3).is_err());
        assert!(compile_parity(&[3], 3).is_err());
        assert!(compile_parity(&[1, 1], 3).is_err());
    }

    #[test]
    fn constant_predicate_is_affine() {
        let p = Predicate::constant(3, 1).unwrap();
        let net = compile_predicate(&p).unwrap();
        assert_eq!(net.depth(), 1);
        assert_eq!(exact_on_cube(&net, 3), p.table());
    }

    #[test]
    fn majority_compiles_exactly() {
        let p = Predicate::from_fn(3, |x| if x.iter().map(|&v| v as i32).sum::<i32>() > 0 { 1 } else { -1 }).unwrap();
        let net = compile_predicate(&p).unwrap();
        assert_eq!(net.depth(), 3);
        assert_eq!(exact_on_cube(&net, 3), p.table());
    }
}
