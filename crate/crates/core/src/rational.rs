//! Exact rational arithmetic helpers. All probabilities, payoffs, and
//! thresholds in the solvers are `BigRational`; floats appear only in the
//! Monte-Carlo simulator.

use num::bigint::BigInt;
use num::rational::BigRational;
use num::{One, Signed, Zero};
use std::str::FromStr;

pub type Rat = BigRational;

/// Parses `"a/b"` or a plain integer into an exact rational.
pub fn parse_rat(s: &str) -> Result<Rat, String> {
    let s = s.trim();
    if let Some((num, den)) = s.split_once('/') {
        let n = BigInt::from_str(num.trim()).map_err(|e| format!("bad numerator {num:?}: {e}"))?;
        let d = BigInt::from_str(den.trim()).map_err(|e| format!("bad denominator {den:?}: {e}"))?;
        if d.is_zero() {
            return Err(format!("zero denominator in {s:?}"));
        }
        Ok(Rat::new(n, d))
    } else {
        let n = BigInt::from_str(s).map_err(|e| format!("bad rational {s:?}: {e}"))?;
        Ok(Rat::from_integer(n))
    }
}

/// Renders a rational as `a/b`, or just `a` when the denominator is one.
pub fn format_rat(r: &Rat) -> String {
    if r.denom().is_one() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

pub fn rat_int(n: i64) -> Rat {
    Rat::from_integer(BigInt::from(n))
}

pub fn rat(n: i64, d: i64) -> Rat {
    Rat::new(BigInt::from(n), BigInt::from(d))
}

/// Converts an integer-valued rational to `i64`, if it fits.
pub fn rat_to_i64(r: &Rat) -> Option<i64> {
    if !r.denom().is_one() {
        return None;
    }
    let n = r.numer();
    if n.abs() > BigInt::from(i64::MAX) {
        return None;
    }
    // to_string round-trip avoided: BigInt -> i64 via try_into on (sign, digits)
    let (sign, digits) = n.to_u64_digits();
    let mag = match digits.len() {
        0 => 0u64,
        1 => digits[0],
        _ => return None,
    };
    let v = i64::try_from(mag).ok()?;
    Some(match sign {
        num::bigint::Sign::Minus => -v,
        _ => v,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_format_round_trip() {
        for s in ["1/2", "-3/4", "7", "0", "-12"] {
            let r = parse_rat(s).unwrap();
            assert_eq!(parse_rat(&format_rat(&r)).unwrap(), r);
        }
        assert_eq!(parse_rat("2/4").unwrap(), rat(1, 2));
        assert!(parse_rat("1/0").is_err());
        assert!(parse_rat("x").is_err());
    }

    #[test]
    fn integer_extraction() {
        assert_eq!(rat_to_i64(&rat_int(-17)), Some(-17));
        assert_eq!(rat_to_i64(&rat(1, 2)), None);
    }
}
