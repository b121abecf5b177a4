//! Random expansive leaky-ReLU target networks.

use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use forge_compiler::leaky_to_relu;
use forge_core::error::{invalid, Result};
use forge_core::linalg::sigma_min;
use forge_core::rng::{stream_rng, RngSeed};
use forge_core::{FixedScalar, Layer, Matrix, ReluNet};

/// Fractional bits kept when quantizing Gaussian weights.
pub const WEIGHT_FRAC_BITS: u32 = 24;
/// Smallest allowed width ratio between consecutive layers.
pub const MIN_EXPANSION: f64 = 1.1;

/// `H(x) = W_L psi(... psi(W_1 x))` as a ReLU network, with the data needed
/// to certify its diversity.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TargetModel {
    /// Layer widths `k_0, ..., k_L`.
    pub dims: Vec<usize>,
    pub lambda_leak: FixedScalar,
    /// Smallest singular value of each weight matrix.
    pub sigma_min: Vec<f64>,
    pub net: ReluNet,
    #[serde(default)]
    pub seed: Option<RngSeed>,
}

impl TargetModel {
    /// The identity on `R^r` (no layers to certify).
    pub fn identity(r: usize) -> Result<Self> {
        let net = ReluNet::new(vec![Layer::new(Matrix::identity(r), vec![FixedScalar::ZERO; r])])?;
        Ok(TargetModel {
            dims: vec![r],
            lambda_leak: FixedScalar::from_ratio(1, 1)?,
            sigma_min: Vec::new(),
            net,
            seed: None,
        })
    }

    pub fn r(&self) -> usize {
        self.dims[0]
    }

    pub fn d(&self) -> usize {
        *self.dims.last().unwrap()
    }

    pub fn depth(&self) -> usize {
        self.dims.len() - 1
    }
}

/// Gaussian weights `N(0, 1/k_i)` for `W_i in R^{k_i x k_{i-1}}`, rounded to
/// [`WEIGHT_FRAC_BITS`] fractional bits.
pub fn gaussian_weights(dims: &[usize], seed: RngSeed) -> Result<Vec<Matrix>> {
    let mut out = Vec::with_capacity(dims.len().saturating_sub(1));
    for (i, w) in dims.windows(2).enumerate() {
        let (k_in, k_out) = (w[0], w[1]);
        let normal = Normal::new(0.0, (1.0 / k_out as f64).sqrt())
            .map_err(|e| forge_core::ForgeError::Invalid(e.to_string()))?;
        let mut rng = stream_rng(seed, i as u64);
        let data = (0..k_in * k_out)
            .map(|_| FixedScalar::quantize(normal.sample(&mut rng), WEIGHT_FRAC_BITS))
            .collect::<Result<Vec<_>>>()?;
        out.push(Matrix::from_dense(k_out, k_in, &data)?);
    }
    Ok(out)
}

/// Samples a random target with widths `dims` and leak `lambda_leak`.
pub fn sample_target(dims: &[usize], lambda_leak: FixedScalar, seed: RngSeed) -> Result<TargetModel> {
    if dims.is_empty() || dims.contains(&0) {
        return invalid("target widths must be positive");
    }
    if dims.len() == 1 {
        let mut t = TargetModel::identity(dims[0])?;
        t.seed = Some(seed);
        return Ok(t);
    }
    for w in dims.windows(2) {
        if (w[1] as f64) < MIN_EXPANSION * w[0] as f64 {
            return invalid(format!("width {} -> {} expands by less than {MIN_EXPANSION}", w[0], w[1]));
        }
    }
    let ws = gaussian_weights(dims, seed)?;
    let sigma = ws
        .iter()
        .map(|w| {
            let dense: Vec<f64> = w.to_dense().iter().map(|v| v.to_f64()).collect();
            sigma_min(w.rows(), w.cols(), &dense)
        })
        .collect::<Result<Vec<_>>>()?;
    let net = leaky_to_relu(&ws, None, lambda_leak)?;
    Ok(TargetModel { dims: dims.to_vec(), lambda_leak, sigma_min: sigma, net, seed: Some(seed) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use forge_core::dy;

    #[test]
    fn identity_target() {
        let t = sample_target(&[4], dy(1, 2), 0).unwrap();
        assert_eq!(t.net.eval_float(&[1.0, 2.0, 3.0, 4.0]).unwrap(), vec![1.0, 2.0, 3.0, 4.0]);
        assert_eq!(t.depth(), 0);
    }

    #[test]
    fn expansion_enforced_and_deterministic() {
        assert!(sample_target(&[20, 21], dy(1, 2), 0).is_err());
        let a = sample_target(&[20, 24], dy(1, 2), 5).unwrap();
        let b = sample_target(&[20, 24], dy(1, 2), 5).unwrap();
        assert_eq!(a, b);
        assert!(a.sigma_min[0] > 0.0);
    }
}
