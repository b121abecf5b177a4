//! Unbounded dyadic rationals, used for exact intermediate values.

use std::cmp::Ordering;
use std::fmt;

use num_bigint::BigInt;
use num_traits::{Signed, ToPrimitive, Zero};

use crate::error::{ForgeError, Result};
use crate::fixed::FixedScalar;

/// `num / 2^exp` in lowest terms (num odd or exp zero).
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Dyadic {
    num: BigInt,
    exp: u32,
}

impl Dyadic {
    pub fn new(num: BigInt, exp: u32) -> Self {
        if num.is_zero() {
            return Dyadic { num, exp: 0 };
        }
        let tz = num.trailing_zeros().unwrap_or(0).min(exp as u64) as u32;
        Dyadic { num: num >> tz as usize, exp: exp - tz }
    }

    pub fn zero() -> Self {
        Dyadic { num: BigInt::zero(), exp: 0 }
    }

    pub fn from_int(v: i64) -> Self {
        Dyadic::new(BigInt::from(v), 0)
    }

    pub fn numerator(&self) -> &BigInt {
        &self.num
    }

    pub fn exponent(&self) -> u32 {
        self.exp
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    pub fn is_negative(&self) -> bool {
        self.num.is_negative()
    }

    pub fn to_f64(&self) -> f64 {
        // Shift the numerator down first so huge values do not saturate early.
        let bits = self.num.bits();
        if bits > 1000 {
            let drop = bits - 1000;
            let top = (&self.num >> drop as usize).to_f64().unwrap_or(f64::NAN);
            return top * 2f64.powi(drop as i32 - self.exp as i32);
        }
        let n = self.num.to_f64().unwrap_or(f64::NAN);
        n * 2f64.powi(-(self.exp as i32))
    }

    /// Converts to a bounded scalar; fails if the value leaves `R_63`.
    pub fn to_fixed(&self) -> Result<FixedScalar> {
        let n = self.num.to_i128().ok_or_else(|| ForgeError::Overflow("value does not fit a fixed scalar".into()))?;
        FixedScalar::from_ratio(n, self.exp)
    }

    pub fn add(&self, other: &Dyadic) -> Dyadic {
        let e = self.exp.max(other.exp);
        let a = &self.num << (e - self.exp) as usize;
        let b = &other.num << (e - other.exp) as usize;
        Dyadic::new(a + b, e)
    }

    pub fn mul(&self, other: &Dyadic) -> Dyadic {
        Dyadic::new(&self.num * &other.num, self.exp + other.exp)
    }

    pub fn neg(&self) -> Dyadic {
        Dyadic { num: -self.num.clone(), exp: self.exp }
    }
}

impl From<FixedScalar> for Dyadic {
    fn from(s: FixedScalar) -> Self {
        let (n, e) = s.ratio();
        Dyadic { num: BigInt::from(n), exp: e }
    }
}

impl From<&FixedScalar> for Dyadic {
    fn from(s: &FixedScalar) -> Self {
        Dyadic::from(*s)
    }
}

impl Ord for Dyadic {
    fn cmp(&self, other: &Self) -> Ordering {
        let e = self.exp.max(other.exp);
        let a = &self.num << (e - self.exp) as usize;
        let b = &other.num << (e - other.exp) as usize;
        a.cmp(&b)
    }
}

impl PartialOrd for Dyadic {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Debug for Dyadic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.exp == 0 {
            write!(f, "{}", self.num)
        } else {
            write!(f, "{}/2^{}", self.num, self.exp)
        }
    }
}

impl fmt::Display for Dyadic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixed::dy;

    #[test]
    fn reduces_to_lowest_terms() {
        let v = Dyadic::new(BigInt::from(12), 4);
        assert_eq!(v.numerator(), &BigInt::from(3));
        assert_eq!(v.exponent(), 2);
        assert_eq!(Dyadic::new(BigInt::from(0), 9).exponent(), 0);
    }

    #[test]
    fn agrees_with_fixed_arithmetic() {
        let a = dy(-7, 3);
        let b = dy(5, 1);
        let s = Dyadic::from(a).add(&Dyadic::from(b));
        assert_eq!(s.to_fixed().unwrap(), a.checked_add(&b).unwrap());
        let p = Dyadic::from(a).mul(&Dyadic::from(b));
        assert_eq!(p.to_fixed().unwrap(), a.checked_mul(&b).unwrap());
        assert!(Dyadic::from(a) < Dyadic::from(b));
    }

    #[test]
    fn large_values_convert_to_float() {
        let big = Dyadic::new(BigInt::from(3) << 1500usize, 1400);
        assert_eq!(big.to_f64(), 3.0 * 2f64.powi(100));
        assert!(big.to_fixed().is_err());
    }
}
