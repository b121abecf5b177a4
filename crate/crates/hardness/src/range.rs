//! The range-membership function of a PRG: `+1` on the image, `-1` elsewhere.

use rayon::prelude::*;

use forge_compiler::index_point;
use forge_core::error::{ensure_dim, ForgeError, Result};
use forge_prg::{LocalPrg, MAX_ENUM_SEED};

/// Bit-packed ±1 vector; bit `j` is set when coordinate `j` is `-1`.
pub type PackedPoint = Box<[u64]>;

pub fn pack(x: &[i8]) -> PackedPoint {
    let mut w = vec![0u64; x.len().div_ceil(64)];
    for (j, &v) in x.iter().enumerate() {
        if v < 0 {
            w[j / 64] |= 1 << (j % 64);
        }
    }
    w.into_boxed_slice()
}

pub fn unpack(p: &[u64], d: usize) -> Vec<i8> {
    (0..d).map(|j| if p[j / 64] >> (j % 64) & 1 == 1 { -1 } else { 1 }).collect()
}

/// Exhaustively tabulated image of a PRG with one witness seed per point.
#[derive(Clone, Debug)]
pub struct HardFunction {
    prg: LocalPrg,
    /// Sorted image points.
    range: Vec<PackedPoint>,
    /// Smallest seed index (as in [`index_point`]) mapping to each image point.
    witness: Vec<u32>,
}

/// Enumerates all `2^m` seeds and records the image.
pub fn build_hard_function(prg: &LocalPrg) -> Result<HardFunction> {
    let m = prg.m();
    if m > MAX_ENUM_SEED {
        return Err(ForgeError::TooLarge(format!("2^{m} seeds exceed the enumeration cap 2^{MAX_ENUM_SEED}")));
    }
    let mut pairs: Vec<(PackedPoint, u32)> = (0..1usize << m)
        .into_par_iter()
        .map(|i| Ok((pack(&prg.eval(&index_point(i, m))?), i as u32)))
        .collect::<Result<_>>()?;
    pairs.par_sort_unstable();
    pairs.dedup_by(|b, a| a.0 == b.0);
    let (range, witness) = pairs.into_iter().unzip();
    Ok(HardFunction { prg: prg.clone(), range, witness })
}

impl HardFunction {
    pub fn prg(&self) -> &LocalPrg {
        &self.prg
    }

    pub fn m(&self) -> usize {
        self.prg.m()
    }

    pub fn d(&self) -> usize {
        self.prg.d()
    }

    /// Number of distinct outputs, at most `2^m`.
    pub fn image_size(&self) -> usize {
        self.range.len()
    }

    pub fn is_injective(&self) -> bool {
        self.range.len() == 1 << self.m()
    }

    fn find(&self, x: &[i8]) -> Result<Option<usize>> {
        ensure_dim(self.d(), x.len(), "hard function input")?;
        Ok(self.range.binary_search(&pack(x)).ok())
    }

    /// `+1` iff some seed maps to `x`.
    pub fn eval(&self, x: &[i8]) -> Result<i8> {
        Ok(if self.find(x)?.is_some() { 1 } else { -1 })
    }

    /// Membership for a packed point.
    pub fn contains_packed(&self, p: &[u64]) -> bool {
        self.range.binary_search_by(|q| (**q).cmp(p)).is_ok()
    }

    /// A seed `y` with `G(y) = x`, when `x` is in the image.
    pub fn witness(&self, x: &[i8]) -> Result<Option<Vec<i8>>> {
        Ok(self.find(x)?.map(|i| index_point(self.witness[i] as usize, self.m())))
    }

    /// The verifier: accepts `(x, y)` iff `G(y) = x`.
    pub fn verify_witness(&self, x: &[i8], y: &[i8]) -> Result<bool> {
        ensure_dim(self.d(), x.len(), "hard function input")?;
        Ok(self.prg.eval(y)? == x)
    }

    /// Image points in sorted packed order.
    pub fn points(&self) -> impl Iterator<Item = Vec<i8>> + '_ {
        self.range.iter().map(|p| unpack(p, self.d()))
    }

    /// Checks the witness of every `stride`-th image point; returns
    /// `(checked, failed)`.
    pub fn check_witnesses(&self, stride: usize) -> Result<(usize, usize)> {
        let stride = stride.max(1);
        let fails = (0..self.range.len())
            .into_par_iter()
            .step_by(stride)
            .map(|i| {
                let x = unpack(&self.range[i], self.d());
                let y = index_point(self.witness[i] as usize, self.m());
                Ok(usize::from(!self.verify_witness(&x, &y)?))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok((fails.len(), fails.iter().sum()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pack_round_trip() {
        let x: Vec<i8> = (0..130).map(|j| if j % 3 == 0 { -1 } else { 1 }).collect();
        assert_eq!(unpack(&pack(&x), 130), x);
        assert_eq!(pack(&[1, -1]).as_ref(), &[2]);
    }

    #[test]
    fn cap_is_enforced() {
        let prg = LocalPrg::tsa(21, 22, 0).unwrap();
        assert!(matches!(build_hard_function(&prg), Err(ForgeError::TooLarge(_))));
    }
}
