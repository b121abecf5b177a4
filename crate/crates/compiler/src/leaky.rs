//! Leaky-ReLU networks rewritten as plain ReLU networks.
//!
//! `psi(z) = (1 - λ) relu(z) - λ relu(-z)`, so each leaky unit becomes two
//! ReLU units and the next layer mixes them with weights `(1-λ, -λ)`.

use forge_core::error::{ensure_dim, invalid, Result};
use forge_core::linalg::opnorm_upper;
use forge_core::{FixedScalar, Layer, Matrix, ReluNet};

use crate::combine::neg;

/// Reference leaky activation.
pub fn leaky(z: f64, lambda: f64) -> f64 {
    if z >= 0.0 {
        (1.0 - lambda) * z
    } else {
        lambda * z
    }
}

fn check_lambda(lambda: FixedScalar) -> Result<()> {
    let half = FixedScalar::from_ratio(1, 1)?;
    if lambda <= FixedScalar::ZERO || lambda > half {
        return invalid(format!("leak must lie in (0, 1/2], got {lambda}"));
    }
    Ok(())
}

/// Network equal to `W_L psi(... psi(W_1 x + b_1) ...) + b_L`.
/// Biases default to zero when `biases` is `None`.
pub fn leaky_to_relu(weights: &[Matrix], biases: Option<&[Vec<FixedScalar>]>, lambda: FixedScalar) -> Result<ReluNet> {
    check_lambda(lambda)?;
    if weights.is_empty() {
        return invalid("need at least one weight matrix");
    }
    if let Some(b) = biases {
        ensure_dim(weights.len(), b.len(), "one bias per layer")?;
    }
    let bias = |i: usize| -> Vec<FixedScalar> {
        biases.map(|b| b[i].clone()).unwrap_or_else(|| vec![FixedScalar::ZERO; weights[i].rows()])
    };
    let keep = FixedScalar::ONE.checked_sub(&lambda)?;
    let l = weights.len();
    let mut layers = Vec::with_capacity(l);
    for i in 0..l {
        ensure_dim(weights[i].rows(), bias(i).len(), "bias length")?;
        if i > 0 {
            ensure_dim(weights[i - 1].rows(), weights[i].cols(), "layer chain")?;
        }
        // Input side: raw x for the first layer, (relu(z), relu(-z)) after.
        let w_in = if i == 0 {
            weights[0].clone()
        } else {
            let a = weights[i].try_map(|v| v.checked_mul(&keep))?;
            let b = weights[i].try_map(|v| v.checked_mul(&lambda.neg()))?;
            Matrix::hstack(&[&a, &b])?
        };
        let b = bias(i);
        if i + 1 < l {
            let w = Matrix::vstack(&[&w_in, &neg(&w_in)])?;
            let mut bb = b.clone();
            bb.extend(b.iter().map(|v| v.neg()));
            layers.push(Layer::new(w, bb));
        } else {
            layers.push(Layer::new(w_in, b));
        }
    }
    let lambda_claim: f64 = weights.iter().map(|w| opnorm_upper(&w.to_f64())).product();
    ReluNet::new(layers)?.with_lambda(lambda_claim)
}
