//! Exact rational helpers.
//!
//! Per-paper quantities (percentiles, country fractions) fit in `Ratio<i64>`;
//! anything summed over many papers is promoted to [`BigRational`] so that
//! decomposition identities hold with `==`, not with a tolerance.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::{BigRational, Ratio};
use num_traits::{One, Signed, ToPrimitive, Zero};

/// Small exact fraction used for per-paper values.
pub type Fraction = Ratio<i64>;

pub fn big(r: &Fraction) -> BigRational {
    BigRational::new(BigInt::from(*r.numer()), BigInt::from(*r.denom()))
}

pub fn big_int(n: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

pub fn to_f64(r: &BigRational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

pub fn frac_to_f64(r: &Fraction) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

/// Parses a plain decimal literal (`"0.9"`, `"99"`, `"-1.25"`, `"5e-2"`) into
/// an exact fraction. Returns `None` on anything else or on overflow.
pub fn parse_decimal(text: &str) -> Option<Fraction> {
    let text = text.trim();
    let (mantissa, exponent) = match text.find(['e', 'E']) {
        Some(pos) => (&text[..pos], text[pos + 1..].parse::<i32>().ok()?),
        None => (text, 0),
    };
    let (negative, digits) = match mantissa.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (int_part, frac_part) = match digits.split_once('.') {
        Some((i, f)) => (i, f),
        None => (digits, ""),
    };
    if int_part.is_empty() && frac_part.is_empty() {
        return None;
    }
    if !int_part.bytes().chain(frac_part.bytes()).all(|b| b.is_ascii_digit()) {
        return None;
    }
    let mut numer: i64 = 0;
    for b in int_part.bytes().chain(frac_part.bytes()) {
        numer = numer.checked_mul(10)?.checked_add(i64::from(b - b'0'))?;
    }
    let scale = i32::try_from(frac_part.len()).ok()? - exponent;
    let pow = |e: i32| 10i64.checked_pow(e.unsigned_abs());
    let value = if scale >= 0 {
        Ratio::new(numer, pow(scale)?)
    } else {
        Ratio::from_integer(numer.checked_mul(pow(scale)?)?)
    };
    Some(if negative { -value } else { value })
}

/// Renders an exact value with `decimals` places, rounding halves upward
/// (towards positive infinity).
pub fn round_half_up(value: &BigRational, decimals: u32) -> String {
    let scale = BigInt::from(10u32).pow(decimals);
    let scaled = value * BigRational::from_integer(scale.clone());
    let half = BigRational::new(BigInt::one(), BigInt::from(2));
    let rounded = (scaled + half).floor().to_integer();
    let negative = rounded.is_negative();
    let (int_part, frac_part) = rounded.abs().div_rem(&scale);
    let sign = if negative { "-" } else { "" };
    if decimals == 0 {
        format!("{sign}{int_part}")
    } else {
        format!(
            "{sign}{int_part}.{frac:0>width$}",
            frac = frac_part.to_string(),
            width = decimals as usize
        )
    }
}

pub fn round_frac_half_up(value: &Fraction, decimals: u32) -> String {
    round_half_up(&big(value), decimals)
}

/// Exact sum of fractions.
pub fn sum<'a>(values: impl IntoIterator<Item = &'a Fraction>) -> BigRational {
    // Group by denominator first: most inputs share a handful of
    // denominators, so this keeps the big-integer work small.
    let mut by_denom: std::collections::BTreeMap<i64, i128> = std::collections::BTreeMap::new();
    for v in values {
        *by_denom.entry(*v.denom()).or_insert(0) += i128::from(*v.numer());
    }
    by_denom
        .into_iter()
        .fold(BigRational::zero(), |acc, (d, n)| {
            acc + BigRational::new(BigInt::from(n), BigInt::from(d))
        })
}
