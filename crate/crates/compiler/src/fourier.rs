//! Walsh-Hadamard (Fourier) expansion of ±1 predicates.

use std::collections::BTreeMap;

use forge_core::error::Result;
use forge_core::FixedScalar;
use serde::{Deserialize, Serialize};

use crate::predicate::Predicate;

/// Non-zero Fourier coefficients keyed by subset bitmask (bit `i` = coordinate `i`).
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FourierExpansion {
    pub k: usize,
    pub coeffs: BTreeMap<u32, FixedScalar>,
}

/// In-place unnormalized Walsh-Hadamard transform.
pub fn wht(v: &mut [i64]) {
    let n = v.len();
    let mut h = 1;
    while h < n {
        for start in (0..n).step_by(2 * h) {
            for i in start..start + h {
                let (a, b) = (v[i], v[i + h]);
                v[i] = a + b;
                v[i + h] = a - b;
            }
        }
        h *= 2;
    }
}

pub fn fourier_transform(p: &Predicate) -> FourierExpansion {
    let k = p.k();
    let mut v: Vec<i64> = p.table().iter().map(|&x| x as i64).collect();
    wht(&mut v);
    let coeffs = v
        .into_iter()
        .enumerate()
        .filter(|(_, c)| *c != 0)
        .map(|(s, c)| {
            let f = FixedScalar::from_ratio(c as i128, k as u32).expect("coefficient in range");
            (s as u32, f)
        })
        .collect();
    FourierExpansion { k, coeffs }
}

/// Members of a subset mask, in increasing order.
pub fn subset_members(mask: u32) -> Vec<usize> {
    (0..32).filter(|i| mask >> i & 1 == 1).collect()
}

impl FourierExpansion {
    pub fn coeff(&self, mask: u32) -> FixedScalar {
        self.coeffs.get(&mask).copied().unwrap_or(FixedScalar::ZERO)
    }

    /// Evaluates the expansion at every hypercube point, exactly.
    pub fn inverse(&self) -> Result<Vec<FixedScalar>> {
        let n = 1usize << self.k;
        let mut out = Vec::with_capacity(n);
        for idx in 0..n {
            let mut acc = FixedScalar::ZERO;
            for (&s, c) in &self.coeffs {
                let sign = ((s as usize & idx).count_ones() & 1) == 1;
                acc = if sign { acc.checked_sub(c)? } else { acc.checked_add(c)? };
            }
            out.push(acc);
        }
        Ok(out)
    }

    /// Sum of squared coefficients, exactly.
    pub fn parseval_sum(&self) -> Result<FixedScalar> {
        let mut acc = FixedScalar::ZERO;
        for c in self.coeffs.values() {
            acc = acc.checked_add(&c.checked_mul(c)?)?;
        }
        Ok(acc)
    }

    pub fn degree(&self) -> usize {
        self.coeffs.keys().map(|s| s.count_ones() as usize).max().unwrap_or(0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::predicate::and_pm;
    use forge_core::dy;

    #[test]
    fn parity_is_a_single_character() {
        let p = Predicate::parity(3, &[0, 1, 2]).unwrap();
        let f = fourier_transform(&p);
        assert_eq!(f.coeffs.len(), 1);
        assert_eq!(f.coeff(0b111), FixedScalar::ONE);
    }

    #[test]
    fn and_expansion() {
        let p = Predicate::from_fn(2, |x| and_pm(x[0], x[1])).unwrap();
        let f = fourier_transform(&p);
        assert_eq!(f.coeff(0b00), dy(-1, 1));
        assert_eq!(f.coeff(0b01), dy(1, 1));
        assert_eq!(f.coeff(0b10), dy(1, 1));
        assert_eq!(f.coeff(0b11), dy(1, 1));
    }

    #[test]
    fn round_trip_and_parseval() {
        let p = Predicate::from_fn(4, |x| if x[0] + x[1] + x[2] * x[3] > 0 { 1 } else { -1 }).unwrap();
        let f = fourier_transform(&p);
        let back: Vec<i8> = f.inverse().unwrap().iter().map(|v| v.to_f64() as i8).collect();
        assert_eq!(back, p.table());
        assert_eq!(f.parseval_sum().unwrap(), FixedScalar::ONE);
    }
}
