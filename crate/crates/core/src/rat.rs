//! Conversions between exact rationals and floating point.
//!
//! The rationals appearing in g-factor tables and beta-products routinely
//! exceed the f64 exponent range, so the conversions here go through an
//! explicit (mantissa, exponent) pair instead of naively casting numerator
//! and denominator.

use alloc::format;
use alloc::string::{String, ToString};

use num_bigint::{BigInt, BigUint, Sign};
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::{Error, Result};

/// `x * 2^e` with saturation to `inf`/`0` outside the f64 exponent range.
pub fn ldexp(x: f64, e: i64) -> f64 {
    let clamped = e.clamp(-2200, 2200) as i32;
    libm::ldexp(x, clamped)
}

/// Splits a non-zero finite `x` as `(mantissa, exponent)` with
/// `|mantissa| in [1, 2)` and `x = mantissa * 2^exponent`.
pub fn frexp2(x: f64) -> (f64, i64) {
    let (frac, exp) = libm::frexp(x);
    (frac * 2.0, exp as i64 - 1)
}

/// `(mantissa, exponent)` form of a big integer, `|mantissa| in [1, 2)`.
/// Zero maps to `(0.0, 0)`.  Good to about 1 ulp, and exactly odd under
/// negation: the truncating shift acts on the magnitude (a signed shift
/// would floor, giving `-x` and `x` different last bits).
pub fn big_to_f64_exp(x: &BigInt) -> (f64, i64) {
    let nb = x.bits() as i64;
    if nb == 0 {
        return (0.0, 0);
    }
    let mag = x.magnitude();
    let (top, extra) = if nb <= 63 {
        (mag.clone(), 0)
    } else {
        (mag >> (nb - 63) as usize, nb - 63)
    };
    let mut f = top.to_u64().expect("63-bit value fits u64") as f64;
    if x.is_negative() {
        f = -f;
    }
    let (m, e) = frexp2(f);
    (m, e + extra)
}

/// `(mantissa, exponent)` form of a rational, `|mantissa| in [1, 2)`.
/// Zero maps to `(0.0, 0)`.  Good to about 2 ulp.
pub fn rational_to_f64_exp(r: &BigRational) -> (f64, i64) {
    if r.is_zero() {
        return (0.0, 0);
    }
    let num = r.numer();
    let den = r.denom();
    let nb = num.bits() as i64;
    let db = den.bits() as i64;
    // An ~80-bit quotient keeps the truncation far below f64 precision.
    let shift = 80 - (nb - db);
    let q = if shift >= 0 {
        (num << shift as usize) / den
    } else {
        num / (den << (-shift) as usize)
    };
    let (m, e) = big_to_f64_exp(&q);
    (m, e - shift)
}

/// Nearest-f64 value of a rational, saturating to `inf`/`0` when the value
/// leaves the f64 exponent range.
pub fn rational_to_f64(r: &BigRational) -> f64 {
    let (m, e) = rational_to_f64_exp(r);
    ldexp(m, e)
}

/// Upper bound on `log2(r)` for positive `r`, from bit lengths alone.
pub fn log2_upper(r: &BigRational) -> i64 {
    debug_assert!(r.is_positive());
    r.numer().bits() as i64 - r.denom().bits() as i64 + 1
}

/// Exact rational value of a finite f64.
pub fn f64_to_rational(x: f64) -> Result<BigRational> {
    if !x.is_finite() {
        return Err(Error::InvalidNumber);
    }
    let (sign, mant, exp) = decompose_f64(x);
    let mut num = BigInt::from(mant);
    if sign < 0 {
        num = -num;
    }
    Ok(if exp >= 0 {
        BigRational::from_integer(num << exp as usize)
    } else {
        BigRational::new(num, BigInt::one() << (-exp) as usize)
    })
}

/// Splits a finite f64 into `(sign, mantissa, exponent)` with
/// `|x| = mantissa * 2^exponent` exactly.  Zero yields mantissa 0.
pub fn decompose_f64(x: f64) -> (i8, u64, i64) {
    let bits = x.to_bits();
    let sign = if bits >> 63 == 1 { -1 } else { 1 };
    let biased = ((bits >> 52) & 0x7ff) as i64;
    let frac = bits & ((1u64 << 52) - 1);
    debug_assert!(biased != 0x7ff, "non-finite f64");
    if biased == 0 {
        (sign, frac, -1074)
    } else {
        (sign, frac | (1u64 << 52), biased - 1075)
    }
}

/// Parses an exact rational from `"p/q"`, a decimal literal, or scientific
/// notation (`-3`, `0.25`, `1.5e-3`).
pub fn parse_rational(s: &str) -> Result<BigRational> {
    let s = s.trim();
    if let Some((p, q)) = s.split_once('/') {
        let num: BigInt = p.trim().parse().map_err(|_| Error::InvalidNumber)?;
        let den: BigInt = q.trim().parse().map_err(|_| Error::InvalidNumber)?;
        if den.is_zero() {
            return Err(Error::InvalidNumber);
        }
        return Ok(BigRational::new(num, den));
    }
    let (mant_part, exp10) = match s.split_once(['e', 'E']) {
        Some((m, e)) => (m, e.parse::<i64>().map_err(|_| Error::InvalidNumber)?),
        None => (s, 0),
    };
    let (int_part, frac_part) = match mant_part.split_once('.') {
        Some((i, f)) => (i, f),
        None => (mant_part, ""),
    };
    let digits: String = format!("{int_part}{frac_part}");
    let body = digits.strip_prefix(['+', '-']).unwrap_or(&digits);
    if body.is_empty() || !body.bytes().all(|b| b.is_ascii_digit()) {
        return Err(Error::InvalidNumber);
    }
    let num: BigInt = digits.parse().map_err(|_| Error::InvalidNumber)?;
    let scale = frac_part.len() as i64 - exp10;
    let ten = BigInt::from(10u32);
    Ok(if scale >= 0 {
        BigRational::new(num, ten.pow(scale as u32))
    } else {
        BigRational::from_integer(num * ten.pow((-scale) as u32))
    })
}

/// Renders a rational exactly: as a plain integer, as a terminating decimal
/// when the denominator is of the form `2^a 5^b`, and as `p/q` otherwise.
pub fn to_exact_string(r: &BigRational) -> String {
    if r.is_integer() {
        return r.numer().to_string();
    }
    let den = r.denom().magnitude().clone();
    let (reduced, pow2) = strip_factor(den, 2u32);
    let (reduced, pow5) = strip_factor(reduced, 5u32);
    if !reduced.is_one() {
        return format!("{}/{}", r.numer(), r.denom());
    }
    let scale = pow2.max(pow5);
    let ten = BigUint::from(10u32);
    let scaled = r.numer().magnitude() * ten.pow(scale) / r.denom().magnitude();
    let mut digits = scaled.to_string();
    if digits.len() <= scale as usize {
        let pad: String = core::iter::repeat('0')
            .take(scale as usize + 1 - digits.len())
            .collect();
        digits = format!("{pad}{digits}");
    }
    let point = digits.len() - scale as usize;
    let (int_digits, frac_digits) = digits.split_at(point);
    let frac_digits = frac_digits.trim_end_matches('0');
    let sign = if r.numer().sign() == Sign::Minus { "-" } else { "" };
    if frac_digits.is_empty() {
        format!("{sign}{int_digits}")
    } else {
        format!("{sign}{int_digits}.{frac_digits}")
    }
}

fn strip_factor(mut x: BigUint, p: u32) -> (BigUint, u32) {
    let p = BigUint::from(p);
    let mut count = 0;
    while !x.is_one() && (&x % &p).is_zero() {
        x /= &p;
        count += 1;
    }
    (x, count)
}

/// Exact sum of a slice of rationals.
pub fn sum(rs: &[BigRational]) -> BigRational {
    let mut acc = BigRational::zero();
    for r in rs {
        acc += r;
    }
    acc
}

/// Exact product of the rationals at `range` in `rs`.
pub fn product(rs: &[BigRational], range: core::ops::Range<usize>) -> BigRational {
    let mut acc = BigRational::one();
    for r in &rs[range] {
        acc *= r;
    }
    acc
}

/// Upward-rounded f64 of a non-negative rational (never below the true
/// value), used for error-ledger arithmetic.
pub fn rational_to_f64_up(r: &BigRational) -> f64 {
    debug_assert!(!r.is_negative());
    let x = rational_to_f64(r);
    x * (1.0 + 4.0 * f64::EPSILON) + f64::MIN_POSITIVE
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn big_to_f64_exp_is_odd_under_negation() {
        // The last value parks the kept 63 bits on an f64 rounding tie with
        // a nonzero shifted-off tail; a signed (flooring) shift used to land
        // -x one ulp away from -f64(x) there.
        let tie = ((BigInt::from(1u64 << 62) + BigInt::from(3072 + 511)) << 40) + 1;
        let cases = vec![
            BigInt::from(1),
            BigInt::from(u64::MAX) * BigInt::from(u64::MAX),
            BigInt::from(12345) << 200,
            tie,
        ];
        for x in cases {
            let (m, e) = big_to_f64_exp(&x);
            let neg = big_to_f64_exp(&(-&x));
            assert_eq!((-m, e), neg, "asymmetric at {x}");
        }
    }
}
