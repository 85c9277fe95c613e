//! Exact integer and rational arithmetic, and the Abel multinomial sum.
//!
//! Everything here is exact. Big integers come from `num-bigint`; rationals
//! are `num-rational`'s `BigRational`, which is always kept in lowest terms
//! with a positive denominator.

use std::fmt::Write as _;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};

/// Arbitrary-precision rational in canonical form.
pub type ExactRational = BigRational;

/// `n!` as a big integer.
pub fn factorial(n: u64) -> BigUint {
    (2..=n).fold(BigUint::one(), |acc, i| acc * i)
}

/// Table of `0!, 1!, ..., n!`.
pub fn factorial_table(n: usize) -> Vec<BigUint> {
    let mut out = Vec::with_capacity(n + 1);
    out.push(BigUint::one());
    for i in 1..=n {
        let next = &out[i - 1] * i;
        out.push(next);
    }
    out
}

/// Binomial coefficient `C(n, k)`, zero outside `0 <= k <= n`.
pub fn binomial(n: u64, k: i64) -> BigUint {
    if k < 0 || k as u64 > n {
        return BigUint::zero();
    }
    let k = (k as u64).min(n - k as u64);
    let mut acc = BigUint::one();
    for i in 0..k {
        acc *= n - i;
        acc /= i + 1;
    }
    acc
}

/// Multinomial coefficient `n! / prod(parts_i!)`.
pub fn multinomial(n: u64, parts: &[u64]) -> Result<BigUint> {
    let total: u64 = parts.iter().sum();
    if total != n {
        return Err(Error::invalid(format!(
            "multinomial parts sum to {total}, expected {n}"
        )));
    }
    // Product of binomials avoids dividing huge factorials.
    let mut acc = BigUint::one();
    let mut remaining = n;
    for &p in parts {
        acc *= binomial(remaining, p as i64);
        remaining -= p;
    }
    Ok(acc)
}

/// `base^exp` for any integer exponent, with `0^0 = 1`.
pub fn signed_power(base: &ExactRational, exp: i64) -> Result<ExactRational> {
    if exp < 0 && base.is_zero() {
        return Err(Error::invalid("zero raised to a negative power"));
    }
    let magnitude = exp.unsigned_abs();
    let pow = num_traits::pow::Pow::pow(base, magnitude);
    Ok(if exp < 0 { pow.recip() } else { pow })
}

/// Integer shorthand for building rationals.
pub fn rat(num: i64, den: i64) -> ExactRational {
    ExactRational::new(BigInt::from(num), BigInt::from(den))
}

pub fn rat_int(value: impl Into<BigInt>) -> ExactRational {
    ExactRational::from_integer(value.into())
}

/// Returns the integer value of `r` if it has denominator one.
pub fn to_integer(r: &ExactRational) -> Option<BigInt> {
    r.is_integer().then(|| r.to_integer())
}

/// Parameters of an Abel multinomial sum `A_n(x; p)`.
#[derive(Debug, Clone, PartialEq)]
pub struct AbelSpec {
    pub n: u32,
    pub x: Vec<ExactRational>,
    pub p: Vec<i64>,
}

impl AbelSpec {
    pub fn new(n: u32, x: Vec<ExactRational>, p: Vec<i64>) -> Result<Self> {
        if x.is_empty() {
            return Err(Error::invalid("Abel sum needs at least one coordinate"));
        }
        if x.len() != p.len() {
            return Err(Error::invalid(format!(
                "x has {} coordinates but p has {}",
                x.len(),
                p.len()
            )));
        }
        if let Some(j) = (0..x.len()).find(|&j| p[j] < 0 && x[j].is_zero()) {
            return Err(Error::invalid(format!(
                "x[{j}] is zero while p[{j}] = {} is negative",
                p[j]
            )));
        }
        Ok(AbelSpec { n, x, p })
    }

    pub fn arity(&self) -> usize {
        self.x.len()
    }

    /// Same sum with the coordinates `(x_i, p_i)` and `(x_j, p_j)` swapped.
    pub fn swapped(&self, i: usize, j: usize) -> Self {
        let mut out = self.clone();
        out.x.swap(i, j);
        out.p.swap(i, j);
        out
    }
}

/// Weak compositions of `n` into `m` parts, in lexicographic order.
#[derive(Debug, Clone)]
pub struct Compositions {
    parts: Vec<u32>,
    first: bool,
    done: bool,
}

impl Compositions {
    pub fn new(n: u32, m: usize) -> Self {
        assert!(m >= 1, "compositions need at least one part");
        let mut parts = vec![0; m];
        parts[m - 1] = n;
        Compositions {
            parts,
            first: true,
            done: false,
        }
    }
}

impl Iterator for Compositions {
    type Item = Vec<u32>;

    fn next(&mut self) -> Option<Vec<u32>> {
        if self.done {
            return None;
        }
        if self.first {
            self.first = false;
            return Some(self.parts.clone());
        }
        let m = self.parts.len();
        // Rightmost position (excluding the last) with mass to its right.
        let mut tail = self.parts[m - 1];
        let mut i = m - 1;
        while i > 0 {
            i -= 1;
            if tail > 0 {
                self.parts[i] += 1;
                for s in &mut self.parts[i + 1..m - 1] {
                    *s = 0;
                }
                self.parts[m - 1] = tail - 1;
                return Some(self.parts.clone());
            }
            tail += self.parts[i];
        }
        self.done = true;
        None
    }
}

/// `A_n(x; p)` by direct enumeration of all compositions of `n`.
pub fn abel_sum(spec: &AbelSpec) -> Result<ExactRational> {
    let m = spec.arity();
    let mut total = ExactRational::zero();
    for s in Compositions::new(spec.n, m) {
        let parts: Vec<u64> = s.iter().map(|&v| v as u64).collect();
        let mut term =
            ExactRational::from_integer(BigInt::from(multinomial(spec.n as u64, &parts)?));
        for ((&sj, xj), &pj) in s.iter().zip(&spec.x).zip(&spec.p) {
            term *= signed_power(&(xj + rat_int(sj)), sj as i64 + pj)?;
        }
        total += term;
    }
    Ok(total)
}

fn nonzero_product(x: &[ExactRational]) -> Result<ExactRational> {
    if x.is_empty() {
        return Err(Error::invalid("closed form needs at least one coordinate"));
    }
    if x.iter().any(Zero::is_zero) {
        return Err(Error::invalid("closed forms need every x_j nonzero"));
    }
    Ok(x.iter().fold(ExactRational::one(), |acc, v| acc * v))
}

/// Closed form of `A_n(x; -1, ..., -1)`: `(sum x)(sum x + n)^(n-1) / prod x`.
pub fn abel_closed_all_minus_one(n: u32, x: &[ExactRational]) -> Result<ExactRational> {
    let prod = nonzero_product(x)?;
    let sum: ExactRational = x.iter().sum();
    let shifted = &sum + rat_int(n);
    let pow = signed_power(&shifted, n as i64 - 1)?;
    Ok(sum * pow / prod)
}

/// Closed form of `A_n(x; -1, ..., -1, 0)`: `x_m (sum x + n)^n / prod x`.
pub fn abel_closed_last_zero(n: u32, x: &[ExactRational]) -> Result<ExactRational> {
    let prod = nonzero_product(x)?;
    let sum: ExactRational = x.iter().sum();
    let shifted = sum + rat_int(n);
    let pow = signed_power(&shifted, n as i64)?;
    Ok(x[x.len() - 1].clone() * pow / prod)
}

/// `"num/den"`, or just `"num"` when the denominator is one.
pub fn format_rational(r: &ExactRational) -> String {
    let mut s = String::new();
    if r.denom().is_one() {
        write!(s, "{}", r.numer()).unwrap();
    } else {
        write!(s, "{}/{}", r.numer(), r.denom()).unwrap();
    }
    s
}

/// Inverse of [`format_rational`].
pub fn parse_rational(s: &str) -> Result<ExactRational> {
    let bad = || Error::invalid(format!("not a rational: {s:?}"));
    let s = s.trim();
    match s.split_once('/') {
        None => Ok(rat_int(s.parse::<BigInt>().map_err(|_| bad())?)),
        Some((num, den)) => {
            let num: BigInt = num.trim().parse().map_err(|_| bad())?;
            let den: BigInt = den.trim().parse().map_err(|_| bad())?;
            if den.is_zero() {
                return Err(bad());
            }
            Ok(ExactRational::new(num, den))
        }
    }
}

/// Lossy conversion used only at reporting boundaries.
pub fn to_f64(r: &ExactRational) -> f64 {
    use num_traits::ToPrimitive;
    r.to_f64().unwrap_or_else(|| {
        // Very large numerators/denominators: scale by bit length first.
        let shift = r.numer().bits().max(r.denom().bits()).saturating_sub(1000);
        let num = (r.numer().abs() >> shift).to_f64().unwrap_or(f64::INFINITY);
        let den = (r.denom() >> shift).to_f64().unwrap_or(f64::INFINITY);
        let v = num / den;
        if r.is_negative() {
            -v
        } else {
            v
        }
    })
}

/// Serde adapters: rationals as `"num/den"` strings.
pub mod serde_rational {
    use serde::{de::Error as _, Deserialize, Deserializer, Serializer};

    use super::{format_rational, parse_rational, ExactRational};

    pub fn serialize<S: Serializer>(value: &ExactRational, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&format_rational(value))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<ExactRational, D::Error> {
        let raw = String::deserialize(d)?;
        parse_rational(&raw).map_err(D::Error::custom)
    }
}

/// Serde adapters: optional rationals as `"num/den"` strings or null.
pub mod serde_rational_opt {
    use serde::{de::Error as _, Deserialize, Deserializer, Serializer};

    use super::{format_rational, parse_rational, ExactRational};

    pub fn serialize<S: Serializer>(
        value: &Option<ExactRational>,
        s: S,
    ) -> Result<S::Ok, S::Error> {
        match value {
            Some(v) => s.serialize_some(&format_rational(v)),
            None => s.serialize_none(),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<ExactRational>, D::Error> {
        Option::<String>::deserialize(d)?
            .map(|raw| parse_rational(&raw).map_err(D::Error::custom))
            .transpose()
    }
}

/// Serde adapters: big integers as decimal strings.
pub mod serde_bigint {
    use num_bigint::BigUint;
    use serde::{de::Error as _, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(value: &BigUint, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&value.to_string())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BigUint, D::Error> {
        let raw = String::deserialize(d)?;
        raw.parse().map_err(D::Error::custom)
    }
}
