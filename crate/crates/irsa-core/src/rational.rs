//! Exact rational plumbing: parsing from user-facing strings and decimal
//! rendering with round-half-even, so reports never accumulate float error.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use std::str::FromStr;

use crate::{Error, Result};

/// Exact rational used throughout the analysis pipeline.
pub type Rat = BigRational;

/// Parse a rational from any of the accepted forms: `p/q`, an integer, a
/// decimal such as `0.25`, or scientific notation such as `1e-3` / `2.5E2`.
/// Every form is converted exactly; no float passes through.
pub fn parse_rational(s: &str) -> Result<Rat> {
    let s = s.trim();
    if s.is_empty() {
        return Err(Error::Config("empty rational literal".into()));
    }
    if let Some((num, den)) = s.split_once('/') {
        let n = BigInt::from_str(num.trim())
            .map_err(|_| Error::Config(format!("bad numerator in `{s}`")))?;
        let d = BigInt::from_str(den.trim())
            .map_err(|_| Error::Config(format!("bad denominator in `{s}`")))?;
        if d.is_zero() {
            return Err(Error::Config(format!("zero denominator in `{s}`")));
        }
        return Ok(Rat::new(n, d));
    }

    let (mantissa, exp) = match s.split_once(['e', 'E']) {
        Some((m, e)) => {
            let exp = i64::from_str(e)
                .map_err(|_| Error::Config(format!("bad exponent in `{s}`")))?;
            (m, exp)
        }
        None => (s, 0),
    };
    let (sign, digits_part) = match mantissa.strip_prefix('-') {
        Some(rest) => (-1, rest),
        None => (1, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (int_part, frac_part) = digits_part.split_once('.').unwrap_or((digits_part, ""));
    let digits: String = [int_part, frac_part].concat();
    if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
        return Err(Error::Config(format!("malformed rational literal `{s}`")));
    }
    let value = BigInt::from_str(&digits).expect("validated digits");
    let ten = BigInt::from(10u32);
    let shift = exp - frac_part.len() as i64;
    let (num, den) = if shift >= 0 {
        (value * ten.pow(shift as u32), BigInt::one())
    } else {
        (value, ten.pow((-shift) as u32))
    };
    Ok(Rat::new(num * BigInt::from(sign), den))
}

/// Render a rational as a fixed-point decimal with `decimals` fractional
/// digits, rounding half to even (so `0.2621865` at six decimals prints
/// `0.262186`). The rounding happens in exact integer arithmetic.
pub fn render_decimal(r: &Rat, decimals: usize) -> String {
    let neg = r.is_negative();
    let abs = r.abs();
    let scale = BigInt::from(10u32).pow(decimals as u32);
    let scaled = abs * Rat::from_integer(scale.clone());
    let (quot, rem) = num_integer::div_rem(scaled.numer().clone(), scaled.denom().clone());
    let rounded = match (&rem * BigInt::from(2u32)).cmp(scaled.denom()) {
        std::cmp::Ordering::Less => quot,
        std::cmp::Ordering::Greater => quot + BigInt::one(),
        std::cmp::Ordering::Equal => {
            if (&quot % BigInt::from(2u32)).is_zero() {
                quot
            } else {
                quot + BigInt::one()
            }
        }
    };
    let digits = rounded.to_string();
    let body = if decimals == 0 {
        digits
    } else {
        let padded = format!("{digits:0>width$}", width = decimals + 1);
        let split = padded.len() - decimals;
        format!("{}.{}", &padded[..split], &padded[split..])
    };
    if neg && body.bytes().any(|b| b.is_ascii_digit() && b != b'0') {
        format!("-{body}")
    } else {
        body
    }
}

/// Nearest-float view of a rational, for report columns and plots.
pub fn to_f64(r: &Rat) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

/// Render a rational as `numerator/denominator` in lowest terms.
pub fn fraction_string(r: &Rat) -> String {
    format!("{}/{}", r.numer(), r.denom())
}
