//! The saturating clamp `h(x) = relu(x/ξ + 1) - relu(x/ξ - 1) - 1`.
//!
//! `h` is `-1` below `-ξ`, `x/ξ` in between and `+1` above `ξ`. Widths are
//! given by their integer reciprocal `n = 1/ξ`, which keeps every weight dyadic.

use forge_core::bounds::Interval;
use forge_core::error::{invalid, Result};
use forge_core::{FixedScalar, Layer, Matrix, ReluNet};

/// Reciprocal of a width `ξ' > 0` rounded the safe way: `ceil(1/ξ')`.
pub fn clamp_reciprocal(xi_prime: f64) -> Result<u64> {
    if !(xi_prime > 0.0 && xi_prime.is_finite()) {
        return invalid(format!("clamp width must be positive, got {xi_prime}"));
    }
    let n = (1.0 / xi_prime).ceil();
    if n >= 2f64.powi(62) {
        return invalid("clamp width too small");
    }
    Ok(n.max(1.0) as u64)
}

/// Checks that `xi` is the reciprocal of an integer and returns that integer.
pub fn reciprocal_of(xi: f64) -> Result<u64> {
    if !(xi > 0.0 && xi.is_finite()) {
        return invalid(format!("clamp width must be positive, got {xi}"));
    }
    let n = (1.0 / xi).round();
    if n < 1.0 || (1.0 / n - xi).abs() > 1e-12 * xi || n >= 2f64.powi(62) {
        return invalid(format!("clamp width {xi} is not the reciprocal of an integer"));
    }
    Ok(n as u64)
}

/// Scalar clamp network with width `1/n`: depth 2, size 2, Lipschitz `n`.
pub fn clamp_net(n: u64) -> Result<ReluNet> {
    clamp_layer(1, n)
}

/// Entrywise clamp on `m` coordinates: depth 2, size `2m`, Lipschitz `n`.
pub fn clamp_layer(m: usize, n: u64) -> Result<ReluNet> {
    if n == 0 {
        return invalid("clamp reciprocal must be positive");
    }
    let nn = FixedScalar::from_ratio(n as i128, 0)?;
    let mut t1 = Vec::with_capacity(2 * m);
    let mut b1 = Vec::with_capacity(2 * m);
    let mut t2 = Vec::with_capacity(2 * m);
    for i in 0..m {
        t1.push((2 * i, i, nn));
        t1.push((2 * i + 1, i, nn));
        b1.push(FixedScalar::ONE);
        b1.push(FixedScalar::NEG_ONE);
        t2.push((i, 2 * i, FixedScalar::ONE));
        t2.push((i, 2 * i + 1, FixedScalar::NEG_ONE));
    }
    let layers = vec![
        Layer::new(Matrix::from_triplets(2 * m, m, t1)?, b1),
        Layer::new(Matrix::from_triplets(m, 2 * m, t2)?, vec![FixedScalar::NEG_ONE; m]),
    ];
    ReluNet::new(layers)?.with_lambda(n as f64)?.with_range_hint(vec![Interval::sym(1.0); m])
}

/// Reference value of the clamp with width `1/n`.
pub fn clamp_value(x: f64, n: u64) -> f64 {
    (x * n as f64).clamp(-1.0, 1.0)
}
