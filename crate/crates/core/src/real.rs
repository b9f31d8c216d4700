//! Scalar abstraction shared by every numeric routine in the crate.
//!
//! All matrix code is generic over [`Real`] so the same propagator and
//! entanglement formulas run either in `f64` or in 256-bit
//! [`Extended`] precision. The covariance matrix of the amplified modes
//! reaches norms near `1e31` within the simulated window, while the
//! quantities of interest (symplectic eigenvalues, the physicality margin)
//! are of order one; in `f64` those are lost entirely to cancellation.

use std::fmt::Debug;
use std::ops::{Add, AddAssign, Div, DivAssign, Mul, MulAssign, Neg, Sub, SubAssign};

pub use f256::f256 as Extended;

pub trait Real:
    Copy
    + Debug
    + PartialOrd
    + Send
    + Sync
    + 'static
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + AddAssign
    + SubAssign
    + MulAssign
    + DivAssign
{
    fn zero() -> Self;
    fn one() -> Self;
    fn from_f64(x: f64) -> Self;
    /// Nearest `f64`; values beyond the `f64` range map to infinities.
    fn to_f64(self) -> f64;
    fn abs(self) -> Self;
    fn sqrt(self) -> Self;
    fn ln(self) -> Self;
    /// Unit roundoff of the format.
    fn epsilon() -> Self;
    fn is_finite(self) -> bool;

    fn from_usize(n: usize) -> Self {
        Self::from_f64(n as f64)
    }

    fn max(self, other: Self) -> Self {
        if other > self {
            other
        } else {
            self
        }
    }

    fn min(self, other: Self) -> Self {
        if other < self {
            other
        } else {
            self
        }
    }

    /// `sqrt(a² + b²)` without intermediate overflow.
    fn hypot(a: Self, b: Self) -> Self {
        let (a, b) = (a.abs(), b.abs());
        let (big, small) = if a > b { (a, b) } else { (b, a) };
        if big == Self::zero() {
            return Self::zero();
        }
        let q = small / big;
        big * (Self::one() + q * q).sqrt()
    }
}

impl Real for f64 {
    fn zero() -> Self {
        0.0
    }
    fn one() -> Self {
        1.0
    }
    fn from_f64(x: f64) -> Self {
        x
    }
    fn to_f64(self) -> f64 {
        self
    }
    fn abs(self) -> Self {
        f64::abs(self)
    }
    fn sqrt(self) -> Self {
        f64::sqrt(self)
    }
    fn ln(self) -> Self {
        f64::ln(self)
    }
    fn epsilon() -> Self {
        f64::EPSILON
    }
    fn is_finite(self) -> bool {
        f64::is_finite(self)
    }
}

// Bit layout of the upper 128 bits of an f256: sign, 19 exponent bits,
// then the top 108 fraction bits.
const EXT_HI_FRACTION_BITS: u32 = 108;
const EXT_EXP_MASK: u128 = (1 << 19) - 1;
const EXT_EXP_BIAS: i64 = 262_143;

/// Truncates `x` to the `f64` with the same sign and exponent and the leading
/// 52 fraction bits. `None` when the exponent is outside the normal `f64` range.
fn truncate_to_f64(x: Extended) -> Option<f64> {
    let (hi, _) = x.to_bits();
    let sign = (hi >> 127) as u64;
    let exp = ((hi >> EXT_HI_FRACTION_BITS) & EXT_EXP_MASK) as i64 - EXT_EXP_BIAS;
    if !(-1022..=1023).contains(&exp) {
        return None;
    }
    let frac = ((hi >> (EXT_HI_FRACTION_BITS - 52)) as u64) & ((1u64 << 52) - 1);
    Some(f64::from_bits((sign << 63) | (((exp + 1023) as u64) << 52) | frac))
}

impl Real for Extended {
    fn zero() -> Self {
        Extended::ZERO
    }
    fn one() -> Self {
        Extended::ONE
    }
    fn from_f64(x: f64) -> Self {
        Extended::from(x)
    }
    fn to_f64(self) -> f64 {
        if self.is_nan() {
            return f64::NAN;
        }
        if self.is_infinite() {
            return if self.is_sign_negative() { f64::NEG_INFINITY } else { f64::INFINITY };
        }
        if self.eq_zero() {
            return 0.0;
        }
        match truncate_to_f64(self) {
            Some(head) => {
                // The residual is exact in f256 and below one f64 ulp of `head`;
                // adding its own truncation rounds the sum to nearest.
                let rest = self - Extended::from(head);
                let tail = if rest.eq_zero() { 0.0 } else { truncate_to_f64(rest).unwrap_or(0.0) };
                head + tail
            }
            None => {
                let (hi, _) = self.to_bits();
                let exp = ((hi >> EXT_HI_FRACTION_BITS) & EXT_EXP_MASK) as i64 - EXT_EXP_BIAS;
                if exp > 1023 {
                    if self.is_sign_negative() {
                        f64::NEG_INFINITY
                    } else {
                        f64::INFINITY
                    }
                } else {
                    // Subnormal or underflowing: rare enough to go through text.
                    format!("{:e}", self).parse().unwrap_or(0.0)
                }
            }
        }
    }
    fn abs(self) -> Self {
        Extended::abs(&self)
    }
    fn sqrt(self) -> Self {
        Extended::sqrt(self)
    }
    fn ln(self) -> Self {
        Extended::ln(&self)
    }
    fn epsilon() -> Self {
        Extended::EPSILON
    }
    fn is_finite(self) -> bool {
        Extended::is_finite(self)
    }
}
