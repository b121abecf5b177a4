//! Dyadic fixed-point scalars.
//!
//! A [`FixedScalar`] is a number of the form `mantissa * 2^-tau`. Values are
//! kept in canonical form: `tau` is the smallest bit complexity such that the
//! value is a multiple of `2^-tau` with magnitude at most `2^tau`. Two scalars
//! are equal exactly when their values are equal.

use std::cmp::Ordering;
use std::fmt;

use num_bigint::BigInt;
use serde::de::{self, MapAccess, Visitor};
use serde::{Deserialize, Deserializer, Serialize};

use crate::error::{ForgeError, Result};

/// Largest bit complexity a stored scalar may carry. Keeps `|mantissa| <= 2^126`.
pub const MAX_TAU: u32 = 63;

#[derive(Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct FixedScalar {
    mantissa: i128,
    tau: u32,
}

fn ceil_log2(n: u128) -> u32 {
    debug_assert!(n > 0);
    if n.is_power_of_two() {
        n.trailing_zeros()
    } else {
        128 - n.leading_zeros()
    }
}

/// Strips common factors of two from `num / 2^exp`.
fn reduce(mut num: i128, mut exp: u32) -> (i128, u32) {
    if num == 0 {
        return (0, 0);
    }
    let tz = num.trailing_zeros().min(exp);
    num >>= tz;
    exp -= tz;
    (num, exp)
}

fn overflow(what: &str) -> ForgeError {
    ForgeError::Overflow(what.to_string())
}

impl FixedScalar {
    pub const ZERO: FixedScalar = FixedScalar { mantissa: 0, tau: 0 };
    pub const ONE: FixedScalar = FixedScalar { mantissa: 1, tau: 0 };
    pub const NEG_ONE: FixedScalar = FixedScalar { mantissa: -1, tau: 0 };

    /// The value `num / 2^exp`, in canonical form.
    pub fn from_ratio(num: i128, exp: u32) -> Result<Self> {
        let (num, exp) = reduce(num, exp);
        if num == 0 {
            return Ok(Self::ZERO);
        }
        let mag_bits = ceil_log2(num.unsigned_abs()) as i64 - exp as i64;
        let tau = (exp as i64).max(mag_bits).max(0) as u32;
        if tau > MAX_TAU {
            return Err(overflow("scalar exceeds the supported bit complexity"));
        }
        let shift = tau - exp;
        let mantissa = num
            .checked_mul(1i128.checked_shl(shift).ok_or_else(|| overflow("shift"))?)
            .ok_or_else(|| overflow("mantissa"))?;
        Ok(FixedScalar { mantissa, tau })
    }

    /// Builds `mantissa * 2^-tau`, requiring the value to lie in `R_tau`.
    pub fn new(mantissa: i128, tau: u32) -> Result<Self> {
        let s = Self::from_ratio(mantissa, tau)?;
        if s.tau > tau {
            return Err(ForgeError::Invalid(format!("{mantissa}*2^-{tau} exceeds magnitude 2^{tau}")));
        }
        Ok(s)
    }

    pub fn from_int(v: i64) -> Result<Self> {
        Self::from_ratio(v as i128, 0)
    }

    /// Exact conversion of a finite double (every finite double is dyadic).
    pub fn from_f64_exact(v: f64) -> Result<Self> {
        if !v.is_finite() {
            return Err(ForgeError::Invalid(format!("non-finite value {v}")));
        }
        if v == 0.0 {
            return Ok(Self::ZERO);
        }
        let bits = v.to_bits();
        let sign = if bits >> 63 == 1 { -1i128 } else { 1 };
        let raw_exp = ((bits >> 52) & 0x7ff) as i64;
        let frac = (bits & ((1u64 << 52) - 1)) as i128;
        let (m, e) = if raw_exp == 0 { (frac, -1074i64) } else { (frac | (1i128 << 52), raw_exp - 1075) };
        let (m, e) = {
            let tz = m.trailing_zeros() as i64;
            (m >> tz, e + tz)
        };
        if e >= 0 {
            let v = m
                .checked_mul(1i128.checked_shl(e as u32).ok_or_else(|| overflow("f64 magnitude"))?)
                .ok_or_else(|| overflow("f64 magnitude"))?;
            Self::from_ratio(sign * v, 0)
        } else {
            let exp = u32::try_from(-e).map_err(|_| overflow("f64 exponent"))?;
            Self::from_ratio(sign * m, exp)
        }
    }

    /// Rounds `v` to the nearest multiple of `2^-tau`.
    pub fn quantize(v: f64, tau: u32) -> Result<Self> {
        if !v.is_finite() {
            return Err(ForgeError::Invalid(format!("non-finite value {v}")));
        }
        let scaled = (v * 2f64.powi(tau as i32)).round();
        if scaled.abs() >= 2f64.powi(120) {
            return Err(overflow("quantized value"));
        }
        Self::from_ratio(scaled as i128, tau)
    }

    pub fn mantissa(&self) -> i128 {
        self.mantissa
    }

    pub fn tau(&self) -> u32 {
        self.tau
    }

    /// Smallest `tau` such that this value lies in `R_tau`.
    pub fn bit_complexity(&self) -> u32 {
        self.tau
    }

    /// Reduced fraction `(num, exp)` with value `num / 2^exp`.
    pub fn ratio(&self) -> (i128, u32) {
        reduce(self.mantissa, self.tau)
    }

    /// Number of fractional bits in the reduced representation.
    pub fn frac_bits(&self) -> u32 {
        self.ratio().1
    }

    pub fn is_zero(&self) -> bool {
        self.mantissa == 0
    }

    pub fn to_f64(&self) -> f64 {
        let (num, exp) = self.ratio();
        num as f64 * 2f64.powi(-(exp as i32))
    }

    pub fn to_bigint_scaled(&self, exp: u32) -> BigInt {
        let (num, e) = self.ratio();
        debug_assert!(e <= exp);
        BigInt::from(num) << (exp - e) as usize
    }

    /// Value times `2^exp` as an integer; `None` if not integral or too large.
    pub fn scaled_int(&self, exp: u32) -> Option<i128> {
        let (num, e) = self.ratio();
        if e > exp {
            return None;
        }
        num.checked_mul(1i128.checked_shl(exp - e)?)
    }

    pub fn checked_add(&self, other: &Self) -> Result<Self> {
        let (na, ea) = self.ratio();
        let (nb, eb) = other.ratio();
        let e = ea.max(eb);
        let a = na.checked_mul(1i128 << (e - ea)).ok_or_else(|| overflow("add"))?;
        let b = nb.checked_mul(1i128 << (e - eb)).ok_or_else(|| overflow("add"))?;
        Self::from_ratio(a.checked_add(b).ok_or_else(|| overflow("add"))?, e)
    }

    pub fn checked_sub(&self, other: &Self) -> Result<Self> {
        self.checked_add(&other.neg())
    }

    pub fn checked_mul(&self, other: &Self) -> Result<Self> {
        let (na, ea) = self.ratio();
        let (nb, eb) = other.ratio();
        let n = na.checked_mul(nb).ok_or_else(|| overflow("mul"))?;
        Self::from_ratio(n, ea + eb)
    }

    /// Multiplies by `2^k` (k may be negative).
    pub fn scale_pow2(&self, k: i32) -> Result<Self> {
        let (n, e) = self.ratio();
        if k >= 0 {
            let f = 1i128.checked_shl(k as u32).ok_or_else(|| overflow("scale"))?;
            if (k as u32) <= e {
                Self::from_ratio(n, e - k as u32)
            } else {
                Self::from_ratio(n.checked_mul(f >> e).ok_or_else(|| overflow("scale"))?, 0)
            }
        } else {
            Self::from_ratio(n, e + k.unsigned_abs())
        }
    }

    #[allow(clippy::should_implement_trait)]
    pub fn neg(&self) -> Self {
        FixedScalar { mantissa: -self.mantissa, tau: self.tau }
    }

    pub fn abs(&self) -> Self {
        FixedScalar { mantissa: self.mantissa.abs(), tau: self.tau }
    }

    pub fn signum(&self) -> i32 {
        self.mantissa.signum() as i32
    }
}

impl PartialOrd for FixedScalar {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for FixedScalar {
    fn cmp(&self, other: &Self) -> Ordering {
        let e = self.tau.max(other.tau);
        self.to_bigint_scaled_raw(e).cmp(&other.to_bigint_scaled_raw(e))
    }
}

impl FixedScalar {
    fn to_bigint_scaled_raw(&self, exp: u32) -> BigInt {
        BigInt::from(self.mantissa) << (exp - self.tau) as usize
    }
}

impl fmt::Debug for FixedScalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (n, e) = self.ratio();
        if e == 0 {
            write!(f, "{n}")
        } else {
            write!(f, "{n}/2^{e}")
        }
    }
}

impl fmt::Display for FixedScalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

impl<'de> Deserialize<'de> for FixedScalar {
    /// Accepts either the canonical `{mantissa, tau}` pair or a plain JSON
    /// number (converted exactly).
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        d.deserialize_any(ScalarVisitor)
    }
}

struct ScalarVisitor;

impl<'de> Visitor<'de> for ScalarVisitor {
    type Value = FixedScalar;

    fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
        f.write_str("a number or an object with 'mantissa' and 'tau'")
    }

    fn visit_i64<E: de::Error>(self, v: i64) -> std::result::Result<FixedScalar, E> {
        FixedScalar::from_int(v).map_err(E::custom)
    }

    fn visit_u64<E: de::Error>(self, v: u64) -> std::result::Result<FixedScalar, E> {
        FixedScalar::from_ratio(v as i128, 0).map_err(E::custom)
    }

    fn visit_f64<E: de::Error>(self, v: f64) -> std::result::Result<FixedScalar, E> {
        FixedScalar::from_f64_exact(v).map_err(E::custom)
    }

    fn visit_map<A: MapAccess<'de>>(self, mut map: A) -> std::result::Result<FixedScalar, A::Error> {
        let mut mantissa: Option<i128> = None;
        let mut tau: Option<u32> = None;
        while let Some(key) = map.next_key::<String>()? {
            match key.as_str() {
                "mantissa" => mantissa = Some(map.next_value()?),
                "tau" => tau = Some(map.next_value()?),
                other => return Err(de::Error::unknown_field(other, &["mantissa", "tau"])),
            }
        }
        let mantissa = mantissa.ok_or_else(|| de::Error::missing_field("mantissa"))?;
        let tau = tau.ok_or_else(|| de::Error::missing_field("tau"))?;
        FixedScalar::new(mantissa, tau).map_err(de::Error::custom)
    }
}

impl TryFrom<i64> for FixedScalar {
    type Error = ForgeError;
    fn try_from(v: i64) -> Result<Self> {
        FixedScalar::from_int(v)
    }
}

/// Shorthand for `num / 2^exp`; panics on overflow. Intended for constants.
pub fn dy(num: i128, exp: u32) -> FixedScalar {
    FixedScalar::from_ratio(num, exp).expect("dyadic constant out of range")
}
