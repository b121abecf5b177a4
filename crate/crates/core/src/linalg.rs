//! Operator-norm bounds and singular values.

use nalgebra::DMatrix;
use rand::Rng;

use crate::error::{ensure_dim, Result};
use crate::matrix::CsrF64;
use crate::rng::stream_rng;

/// Upper bound on the spectral norm: `min(||A||_F, sqrt(||A||_1 ||A||_inf))`,
/// nudged up to absorb rounding.
pub fn opnorm_upper(a: &CsrF64) -> f64 {
    let b = a.frobenius().min((a.norm_one() * a.norm_inf()).sqrt());
    b * (1.0 + 1e-12)
}

/// Power-iteration estimate of the spectral norm (a lower estimate).
pub fn opnorm_estimate(a: &CsrF64, iters: usize, seed: u64) -> f64 {
    if a.vals.is_empty() || a.cols == 0 {
        return 0.0;
    }
    let mut rng = stream_rng(seed, 0x6f70);
    let mut v: Vec<f64> = (0..a.cols).map(|_| rng.random::<f64>() - 0.5).collect();
    let mut est = 0.0;
    for _ in 0..iters {
        let n = norm(&v);
        if n == 0.0 {
            return 0.0;
        }
        v.iter_mut().for_each(|x| *x /= n);
        let av = a.matvec(&v);
        est = norm(&av);
        v = a.matvec_t(&av);
    }
    est
}

pub fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Smallest singular value of a row-major `rows x cols` matrix.
pub fn sigma_min(rows: usize, cols: usize, data: &[f64]) -> Result<f64> {
    ensure_dim(rows * cols, data.len(), "singular value input")?;
    let m = DMatrix::from_row_slice(rows, cols, data);
    let sv = m.singular_values();
    Ok(sv.iter().copied().fold(f64::INFINITY, f64::min))
}

/// Largest singular value of a row-major dense matrix.
pub fn sigma_max(rows: usize, cols: usize, data: &[f64]) -> Result<f64> {
    ensure_dim(rows * cols, data.len(), "singular value input")?;
    let m = DMatrix::from_row_slice(rows, cols, data);
    Ok(m.singular_values().iter().copied().fold(0.0, f64::max))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixed::dy;
    use crate::matrix::Matrix;

    #[test]
    fn diagonal_norms() {
        let m = Matrix::from_dense(2, 2, &[dy(3, 0), dy(0, 0), dy(0, 0), dy(-4, 0)]).unwrap().to_f64();
        assert!((opnorm_estimate(&m, 50, 1) - 4.0).abs() < 1e-9);
        assert!(opnorm_upper(&m) >= 4.0);
        assert!((sigma_min(2, 2, &[3.0, 0.0, 0.0, -4.0]).unwrap() - 3.0).abs() < 1e-12);
        assert!((sigma_max(2, 2, &[3.0, 0.0, 0.0, -4.0]).unwrap() - 4.0).abs() < 1e-12);
    }

    #[test]
    fn rank_deficient_has_zero_sigma_min() {
        let s = sigma_min(3, 2, &[1.0, 2.0, 2.0, 4.0, 3.0, 6.0]).unwrap();
        assert!(s < 1e-12);
    }
}
