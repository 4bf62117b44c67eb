//! Exact rational arithmetic helpers.
//!
//! All energies, times, and derived quantities in this crate are
//! `BigRational` values so that feasibility checks and objective
//! comparisons are exact. Floating point appears only at the outermost
//! text boundary (e.g. tolerant parsing of third-party solver output).
//!
//! File formats use plain decimal notation. A rational is exactly
//! representable in decimal iff its reduced denominator has no prime
//! factors other than 2 and 5; [`to_decimal_string`] enforces this and
//! [`parse_decimal`] is its exact inverse.

use num_bigint::{BigInt, BigUint};
use num_traits::{One, Signed, ToPrimitive, Zero};

pub type Rat = num_rational::BigRational;

// ---------------------------------------------------------------------------
// Errors
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum DecimalError {
    #[error("empty number")]
    Empty,
    #[error("invalid decimal literal {0:?}")]
    Invalid(String),
    #[error("{0} has no finite decimal expansion")]
    NotRepresentable(String),
}

// ---------------------------------------------------------------------------
// Construction helpers
// ---------------------------------------------------------------------------

/// Rational from an integer numerator/denominator pair. Panics on zero
/// denominator (programming error, not input error).
pub fn rat(num: i64, den: i64) -> Rat {
    Rat::new(BigInt::from(num), BigInt::from(den))
}

/// Rational from an unsigned integer (byte counts, node counts).
pub fn rat_u(v: u128) -> Rat {
    Rat::from_integer(BigInt::from(v))
}

/// Rational from a signed integer.
pub fn rat_i(v: i64) -> Rat {
    Rat::from_integer(BigInt::from(v))
}

// ---------------------------------------------------------------------------
// Decimal text conversion
// ---------------------------------------------------------------------------

/// Parse a decimal literal (`-12`, `3.25`, `1e-3`, `4.5E2`) into an exact
/// rational. This accepts exactly the number grammar used by our file
/// formats (a superset of JSON numbers).
pub fn parse_decimal(text: &str) -> Result<Rat, DecimalError> {
    let s = text.trim();
    if s.is_empty() {
        return Err(DecimalError::Empty);
    }
    let bad = || DecimalError::Invalid(text.to_string());

    let (sign, rest) = match s.as_bytes()[0] {
        b'-' => (-1, &s[1..]),
        b'+' => (1, &s[1..]),
        _ => (1, s),
    };
    if rest.is_empty() {
        return Err(bad());
    }

    // Split off an exponent part if present.
    let (mantissa, exp) = match rest.find(['e', 'E']) {
        Some(pos) => {
            let e: i64 = rest[pos + 1..].parse().map_err(|_| bad())?;
            (&rest[..pos], e)
        }
        None => (rest, 0),
    };

    // Split the mantissa at the decimal point.
    let (int_part, frac_part) = match mantissa.find('.') {
        Some(pos) => (&mantissa[..pos], &mantissa[pos + 1..]),
        None => (mantissa, ""),
    };
    if int_part.is_empty() && frac_part.is_empty() {
        return Err(bad());
    }
    if !int_part.bytes().all(|b| b.is_ascii_digit()) || !frac_part.bytes().all(|b| b.is_ascii_digit()) {
        return Err(bad());
    }

    let digits: String = format!("{int_part}{frac_part}");
    let num: BigInt = if digits.is_empty() {
        BigInt::zero()
    } else {
        digits.parse().map_err(|_| bad())?
    };
    let scale = frac_part.len() as i64 - exp;
    let ten = BigInt::from(10);
    let value = if scale >= 0 {
        Rat::new(num, ten.pow(scale as u32))
    } else {
        Rat::from_integer(num * ten.pow((-scale) as u32))
    };
    Ok(if sign < 0 { -value } else { value })
}

/// Render a rational as an exact decimal string (no exponent, no trailing
/// zeros). Fails if the reduced denominator contains a prime factor other
/// than 2 or 5, i.e. if the value has no finite decimal expansion.
pub fn to_decimal_string(value: &Rat) -> Result<String, DecimalError> {
    let num = value.numer();
    let den = value.denom();
    if den.is_one() {
        return Ok(num.to_string());
    }

    // Count factors of 2 and 5 in the denominator.
    let mut d: BigUint = den.magnitude().clone();
    let mut twos = 0u32;
    let mut fives = 0u32;
    let two = BigUint::from(2u32);
    let five = BigUint::from(5u32);
    while (&d % &two).is_zero() {
        d /= &two;
        twos += 1;
    }
    while (&d % &five).is_zero() {
        d /= &five;
        fives += 1;
    }
    if !d.is_one() {
        return Err(DecimalError::NotRepresentable(value.to_string()));
    }

    // Scale so the denominator becomes 10^k.
    let k = twos.max(fives);
    let mult = two.pow(k - twos) * five.pow(k - fives);
    let scaled = num.magnitude() * mult;
    let mut digits = scaled.to_string();
    let k = k as usize;
    if digits.len() <= k {
        digits = format!("{}{}", "0".repeat(k + 1 - digits.len()), digits);
    }
    let split = digits.len() - k;
    let (int_part, frac_part) = digits.split_at(split);
    let frac_part = frac_part.trim_end_matches('0');
    let sign = if value.is_negative() { "-" } else { "" };
    Ok(if frac_part.is_empty() {
        format!("{sign}{int_part}")
    } else {
        format!("{sign}{int_part}.{frac_part}")
    })
}

/// Human-readable rendering: exact decimal when one exists, `p/q`
/// otherwise. For messages and logs, never for files.
pub fn display(value: &Rat) -> String {
    to_decimal_string(value).unwrap_or_else(|_| value.to_string())
}

/// Best-effort `f64` view for display purposes only (never used in
/// feasibility or optimality decisions).
pub fn to_f64_lossy(value: &Rat) -> f64 {
    value.to_f64().unwrap_or(f64::NAN)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_integers_and_fractions() {
        assert_eq!(parse_decimal("12").unwrap(), rat(12, 1));
        assert_eq!(parse_decimal("-3.25").unwrap(), rat(-13, 4));
        assert_eq!(parse_decimal("0.5").unwrap(), rat(1, 2));
        assert_eq!(parse_decimal(".5").unwrap(), rat(1, 2));
        assert_eq!(parse_decimal("1e-3").unwrap(), rat(1, 1000));
        assert_eq!(parse_decimal("4.5E2").unwrap(), rat(450, 1));
        assert_eq!(parse_decimal("+7.").unwrap(), rat(7, 1));
    }

    #[test]
    fn parse_rejects_garbage() {
        for bad in ["", " ", "abc", "1.2.3", "--4", "1e", "0x10"] {
            assert!(parse_decimal(bad).is_err(), "{bad:?} should fail");
        }
    }

    #[test]
    fn decimal_string_round_trip() {
        for text in ["0", "1", "-1", "12.5", "0.125", "-3.2", "1000", "0.0001"] {
            let v = parse_decimal(text).unwrap();
            let out = to_decimal_string(&v).unwrap();
            assert_eq!(parse_decimal(&out).unwrap(), v);
        }
    }

    #[test]
    fn decimal_string_is_canonical() {
        assert_eq!(to_decimal_string(&rat(3, 2)).unwrap(), "1.5");
        assert_eq!(to_decimal_string(&rat(1, 4)).unwrap(), "0.25");
        assert_eq!(to_decimal_string(&rat(-1, 8)).unwrap(), "-0.125");
        assert_eq!(to_decimal_string(&rat(10, 5)).unwrap(), "2");
    }

    #[test]
    fn non_decimal_denominator_is_rejected() {
        assert!(matches!(
            to_decimal_string(&rat(1, 3)),
            Err(DecimalError::NotRepresentable(_))
        ));
    }
}
