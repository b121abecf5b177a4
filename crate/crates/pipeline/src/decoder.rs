//! Linear decoder from ±1 bit blocks to numbers in `[0, 1)`.
//!
//! Output `i` reads block `i` of `n` bits as the binary fraction
//! `sum_t 2^-t [y_t = +1]`, written as `<w, y + 1>` with `w = (1/4, ..., 2^-(n+1))`.

use forge_core::bounds::Interval;
use forge_core::error::{invalid, Result};
use forge_core::{FixedScalar, Layer, Matrix, ReluNet};

/// Bits per decoded coordinate: `ceil(log2(1/eps))`.
pub fn bits_per_coordinate(eps: f64) -> Result<usize> {
    if !(eps > 0.0 && eps < 1.0) {
        return invalid(format!("epsilon must lie in (0, 1), got {eps}"));
    }
    let n = (1.0 / eps).log2().ceil().max(1.0);
    if n > 60.0 {
        return invalid("epsilon too small for a 60-bit decoder");
    }
    Ok(n as usize)
}

/// Decoder reading `s` bits into `floor(s / n)` coordinates; trailing bits
/// that do not fill a block are ignored.
pub fn build_bit_decoder(s: usize, eps: f64) -> Result<ReluNet> {
    let n = bits_per_coordinate(eps)?;
    let r = s / n;
    if r == 0 {
        return invalid(format!("{s} bits cannot fill one block of {n}"));
    }
    let mut t = Vec::with_capacity(r * n);
    for i in 0..r {
        for j in 0..n {
            t.push((i, i * n + j, FixedScalar::from_ratio(1, j as u32 + 2)?));
        }
    }
    // sum of block weights: (1 - 2^-n) / 2
    let offset = FixedScalar::from_ratio((1i128 << n) - 1, n as u32 + 1)?;
    let top = 1.0 - 2f64.powi(-(n as i32));
    ReluNet::new(vec![Layer::new(Matrix::from_triplets(r, s, t)?, vec![offset; r])])?
        .with_range_hint(vec![Interval::new(0.0, top)?; r])
}

/// Value of one decoded block, computed directly.
pub fn decode_block(bits: &[i8]) -> f64 {
    bits.iter().enumerate().map(|(t, &b)| if b > 0 { 2f64.powi(-(t as i32) - 1) } else { 0.0 }).sum()
}
