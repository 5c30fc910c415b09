//! Exact-arithmetic helpers shared by the analysis modules.

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

/// Row `n` of Pascal's triangle.
pub fn binomial_row(n: u32) -> Vec<BigUint> {
    let mut row = vec![BigUint::one()];
    for _ in 0..n {
        let mut next = Vec::with_capacity(row.len() + 1);
        next.push(BigUint::one());
        for w in row.windows(2) {
            next.push(&w[0] + &w[1]);
        }
        next.push(BigUint::one());
        row = next;
    }
    row
}

pub fn pow2(k: u32) -> BigUint {
    BigUint::one() << k as usize
}

pub fn ratio(num: BigUint, den: BigUint) -> BigRational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

/// `"num/den"` in lowest terms; integers keep the `/1`.
pub fn format_ratio(r: &BigRational) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

/// Parses `"p/q"`, an integer, or a finite decimal such as `"0.05"` exactly.
pub fn parse_ratio(s: &str) -> Result<BigRational> {
    let s = s.trim();
    let bad = || Error::Parse(format!("not an exact rational: {s:?}"));
    if let Some((p, q)) = s.split_once('/') {
        let p: BigInt = p.trim().parse().map_err(|_| bad())?;
        let q: BigInt = q.trim().parse().map_err(|_| bad())?;
        if q.is_zero() {
            return Err(bad());
        }
        return Ok(BigRational::new(p, q));
    }
    let (neg, body) = match s.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, s),
    };
    let (int_part, frac_part) = body.split_once('.').unwrap_or((body, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return Err(bad());
    }
    if !int_part.chars().chain(frac_part.chars()).all(|c| c.is_ascii_digit()) {
        return Err(bad());
    }
    let digits = format!("{int_part}{frac_part}");
    let num: BigInt = if digits.is_empty() {
        BigInt::zero()
    } else {
        digits.parse().map_err(|_| bad())?
    };
    let den = BigInt::from(10u32).pow(frac_part.len() as u32);
    let r = BigRational::new(num, den);
    Ok(if neg { -r } else { r })
}

/// `log2` of a positive big integer, accurate to double precision.
pub fn log2_biguint(x: &BigUint) -> f64 {
    assert!(!x.is_zero(), "log2 of zero");
    let bits = x.bits();
    if bits <= 1000 {
        return x.to_f64().expect("fits in f64").log2();
    }
    let shift = bits - 64;
    let top: BigUint = x >> shift as usize;
    top.to_f64().expect("64-bit value").log2() + shift as f64
}

/// `log2` of a positive rational; `-inf` for zero.
pub fn log2_ratio(r: &BigRational) -> f64 {
    if r.is_zero() {
        return f64::NEG_INFINITY;
    }
    assert!(r.is_positive(), "log2 of a negative rational");
    let n = r.numer().magnitude();
    let d = r.denom().magnitude();
    log2_biguint(n) - log2_biguint(d)
}

pub fn ratio_to_f64(r: &BigRational) -> f64 {
    if r.is_zero() {
        return 0.0;
    }
    let l = log2_ratio(&r.abs());
    let v = l.exp2();
    if r.is_negative() {
        -v
    } else {
        v
    }
}

/// Serde adapter that writes a `BigRational` as the string `"num/den"`.
pub mod serde_ratio {
    use num_rational::BigRational;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(r: &BigRational, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&super::format_ratio(r))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BigRational, D::Error> {
        let s = String::deserialize(d)?;
        super::parse_ratio(&s).map_err(serde::de::Error::custom)
    }
}

/// Serde adapter that writes a `BigUint` as a decimal string.
pub mod serde_biguint {
    use num_bigint::BigUint;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(x: &BigUint, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&x.to_string())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BigUint, D::Error> {
        String::deserialize(d)?.parse().map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn binomial_rows() {
        let r = binomial_row(4);
        let v: Vec<u64> = r.iter().map(|x| x.to_u64().unwrap()).collect();
        assert_eq!(v, vec![1, 4, 6, 4, 1]);
        assert_eq!(binomial_row(0).len(), 1);
    }

    #[test]
    fn ratio_parsing() {
        let tenth = BigRational::new(1.into(), 10.into());
        assert_eq!(parse_ratio("0.1").unwrap(), tenth);
        assert_eq!(parse_ratio("1/10").unwrap(), tenth);
        assert_eq!(parse_ratio(".5").unwrap(), BigRational::new(1.into(), 2.into()));
        assert_eq!(parse_ratio("3").unwrap(), BigRational::from_integer(3.into()));
        assert!(parse_ratio("1/0").is_err());
        assert!(parse_ratio("abc").is_err());
        assert!(parse_ratio("1e-3").is_err());
        assert_eq!(format_ratio(&BigRational::new(14.into(), 32.into())), "7/16");
    }

    #[test]
    fn logs_of_large_values() {
        let x = pow2(3000);
        assert!((log2_biguint(&x) - 3000.0).abs() < 1e-9);
        let r = ratio(BigUint::from(7u32), pow2(4));
        assert!((ratio_to_f64(&r) - 7.0 / 16.0).abs() < 1e-15);
    }
}
