//! Decimal literals as one-ulp enclosures.

use alloc::string::String;
use alloc::vec::Vec;
use core::cmp::Ordering;

use num_bigint::BigUint;

use crate::interval::Interval;

/// Errors from decimal parsing.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum DecimalError {
    #[error("malformed decimal literal {0:?}")]
    Malformed(String),
    #[error("decimal literal {0:?} is out of binary64 range")]
    OutOfRange(String),
}

struct Parsed {
    negative: bool,
    digits: Vec<u8>,
    // value = digits * 10^exp10
    exp10: i64,
}

fn scan(text: &str) -> Option<Parsed> {
    let bytes = text.as_bytes();
    let mut i = 0;
    let mut negative = false;
    if i < bytes.len() && (bytes[i] == b'+' || bytes[i] == b'-') {
        negative = bytes[i] == b'-';
        i += 1;
    }
    let mut digits = Vec::new();
    let mut frac_len: i64 = 0;
    let mut seen_digit = false;
    let mut seen_point = false;
    while i < bytes.len() {
        let c = bytes[i];
        if c.is_ascii_digit() {
            seen_digit = true;
            digits.push(c - b'0');
            if seen_point {
                frac_len += 1;
            }
        } else if c == b'.' && !seen_point {
            seen_point = true;
        } else {
            break;
        }
        i += 1;
    }
    if !seen_digit {
        return None;
    }
    let mut exp: i64 = 0;
    if i < bytes.len() {
        if bytes[i] != b'e' && bytes[i] != b'E' {
            return None;
        }
        i += 1;
        let mut exp_neg = false;
        if i < bytes.len() && (bytes[i] == b'+' || bytes[i] == b'-') {
            exp_neg = bytes[i] == b'-';
            i += 1;
        }
        let start = i;
        while i < bytes.len() && bytes[i].is_ascii_digit() {
            exp = exp.checked_mul(10)?.checked_add((bytes[i] - b'0') as i64)?;
            if exp > 100_000 {
                return None;
            }
            i += 1;
        }
        if i == start || i != bytes.len() {
            return None;
        }
        if exp_neg {
            exp = -exp;
        }
    }
    Some(Parsed {
        negative,
        digits,
        exp10: exp - frac_len,
    })
}

fn digits_to_big(d: &[u8]) -> BigUint {
    let mut acc = BigUint::from(0u32);
    for &x in d {
        acc = acc * 10u32 + x as u32;
    }
    acc
}

// Compares |decimal| against |v| for finite positive v, exactly.
fn compare_abs(p: &Parsed, v: f64) -> Ordering {
    let bits = v.to_bits();
    let exp_bits = ((bits >> 52) & 0x7ff) as i64;
    let frac = bits & ((1u64 << 52) - 1);
    let (mant, e2) = if exp_bits == 0 {
        (frac, -1074)
    } else {
        (frac | (1u64 << 52), exp_bits - 1075)
    };
    let mut lhs = digits_to_big(&p.digits);
    let mut rhs = BigUint::from(mant);
    if p.exp10 >= 0 {
        lhs *= BigUint::from(10u32).pow(p.exp10 as u32);
    } else {
        rhs *= BigUint::from(10u32).pow((-p.exp10) as u32);
    }
    if e2 >= 0 {
        rhs <<= e2 as usize;
    } else {
        lhs <<= (-e2) as usize;
    }
    lhs.cmp(&rhs)
}

/// Parses a finite decimal literal (optional sign, fraction and exponent)
/// into an interval of width at most one ulp that contains its exact value.
pub fn iv_from_decimal(text: &str) -> Result<Interval, DecimalError> {
    let t = text.trim();
    let parsed = scan(t).ok_or_else(|| DecimalError::Malformed(String::from(text)))?;
    let v: f64 = t
        .parse()
        .map_err(|_| DecimalError::Malformed(String::from(text)))?;
    if !v.is_finite() {
        return Err(DecimalError::OutOfRange(String::from(text)));
    }
    if parsed.digits.iter().all(|&d| d == 0) {
        return Ok(Interval::point(0.0));
    }
    let a = v.abs();
    if a == 0.0 {
        let tiny = if parsed.negative {
            -f64::from_bits(1)
        } else {
            f64::from_bits(1)
        };
        return Ok(Interval::point(0.0).hull(&Interval::point(tiny)));
    }
    let ord = compare_abs(&parsed, a);
    let mag = match ord {
        Ordering::Equal => Interval::point(a),
        Ordering::Greater => Interval::raw(a, a.next_up()),
        Ordering::Less => Interval::raw(a.next_down(), a),
    };
    Ok(if parsed.negative { -mag } else { mag })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_integers() {
        assert_eq!(iv_from_decimal("1").unwrap(), Interval::point(1.0));
        assert_eq!(iv_from_decimal("-12.5").unwrap(), Interval::point(-12.5));
        assert_eq!(iv_from_decimal("2.5e2").unwrap(), Interval::point(250.0));
    }

    #[test]
    fn inexact_literals_are_one_ulp() {
        for s in ["0.46873", "10.3", "2.2636302", "1e-5", "8.5337", "0.1"] {
            let x = iv_from_decimal(s).unwrap();
            assert_eq!(x.hi(), x.lo().next_up(), "{s}");
            let v: f64 = s.parse().unwrap();
            assert!(x.contains(v));
        }
    }

    #[test]
    fn side_of_rounding_is_right() {
        // 0.1 rounds up to the nearest double, so the exact value is below it.
        let x = iv_from_decimal("0.1").unwrap();
        assert_eq!(x.hi(), 0.1);
        // 0.3 rounds down.
        let y = iv_from_decimal("0.3").unwrap();
        assert_eq!(y.lo(), 0.3);
    }

    #[test]
    fn malformed() {
        for s in ["", "abc", "1.2.3", "1e", "--1", "1e5x", ".", "+"] {
            assert!(iv_from_decimal(s).is_err(), "{s}");
        }
        assert!(matches!(
            iv_from_decimal("1e400"),
            Err(DecimalError::OutOfRange(_))
        ));
    }
}
