//! Exact rational arithmetic for the closed-form values.
//!
//! All theory results are evaluated as [`Rational`] and converted to `f64`
//! only at output boundaries; the closed forms contain large cancelling
//! terms that floats cannot be trusted with.

use num::bigint::BigInt;
use num::rational::Ratio;
use num::{One, Signed, ToPrimitive, Zero};

/// Reduced fraction of arbitrary-precision integers, denominator > 0.
pub type Rational = Ratio<BigInt>;

/// `n` as a rational.
pub fn int(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

/// `num / den` as a reduced rational.
pub fn ratio(num: i64, den: i64) -> Rational {
    Rational::new(BigInt::from(num), BigInt::from(den))
}

/// Rising factorial `(z)_n` for the half-integer `z = num/2`.
pub fn poch_half(num: i64, n: u32) -> Rational {
    let mut acc = Rational::one();
    for i in 0..n as i64 {
        acc *= Rational::new(BigInt::from(num + 2 * i), BigInt::from(2));
    }
    acc
}

/// Binomial coefficient `C(n, k)` (zero when `k > n`).
pub fn binomial(n: u32, k: u32) -> BigInt {
    if k > n {
        return BigInt::zero();
    }
    let k = k.min(n - k);
    let mut acc = BigInt::one();
    for i in 0..k {
        acc = acc * BigInt::from(n - i) / BigInt::from(i + 1);
    }
    acc
}

/// Multinomial coefficient `(n | parts)`; the parts must sum to `n`.
pub fn multinomial(n: u32, parts: &[u32]) -> BigInt {
    debug_assert_eq!(parts.iter().sum::<u32>(), n);
    let mut acc = BigInt::one();
    let mut rest = n;
    for &part in parts {
        acc *= binomial(rest, part);
        rest -= part;
    }
    acc
}

/// Nearest `f64`; saturates on overflow.
pub fn to_f64(r: &Rational) -> f64 {
    r.to_f64().unwrap_or_else(|| {
        if r.is_negative() {
            f64::NEG_INFINITY
        } else {
            f64::INFINITY
        }
    })
}
