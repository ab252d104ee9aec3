//! Positive rationals stored as exact rational exponents on primes.
//!
//! An intersection number `<P1, P2> = sum e_q log q` is carried around as its
//! exponential `prod q^e_q`, so every comparison stays exact.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use num_rational::Rational64;
use serde::de::{self, Deserializer, MapAccess, Visitor};
use serde::ser::{SerializeMap, Serializer};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::arith::is_prime;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseFactoredError {
    #[error("malformed factor `{0}`")]
    Malformed(String),
    #[error("{0} is not prime")]
    NotPrime(u64),
    #[error("prime {0} listed twice")]
    Duplicate(u64),
}

/// `prod p^e_p` with `e_p` exact rationals. Zero exponents are never stored.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct FactoredNumber {
    exponents: BTreeMap<u64, Rational64>,
}

impl FactoredNumber {
    /// The number 1 (empty product).
    pub fn one() -> Self {
        Self::default()
    }

    pub fn from_integer_exponents<I>(pairs: I) -> Self
    where
        I: IntoIterator<Item = (u64, i64)>,
    {
        let mut out = Self::one();
        for (p, e) in pairs {
            out.add_exponent(p, Rational64::from_integer(e));
        }
        out
    }

    /// Adds `e` to the exponent of `p`, dropping the entry when it cancels.
    pub fn add_exponent(&mut self, p: u64, e: Rational64) {
        debug_assert!(is_prime(p), "{p} is not prime");
        if e == Rational64::from_integer(0) {
            return;
        }
        let slot = self.exponents.entry(p).or_default();
        *slot += e;
        if *slot == Rational64::from_integer(0) {
            self.exponents.remove(&p);
        }
    }

    /// Multiplies two factored numbers (adds exponents).
    pub fn mul_assign(&mut self, other: &FactoredNumber) {
        for (&p, &e) in &other.exponents {
            self.add_exponent(p, e);
        }
    }

    /// Raises to a rational power (scales every exponent).
    pub fn scaled(&self, k: Rational64) -> FactoredNumber {
        let mut out = Self::one();
        for (&p, &e) in &self.exponents {
            out.add_exponent(p, e * k);
        }
        out
    }

    pub fn exponent(&self, p: u64) -> Rational64 {
        self.exponents.get(&p).copied().unwrap_or_default()
    }

    pub fn is_one(&self) -> bool {
        self.exponents.is_empty()
    }

    pub fn primes(&self) -> impl Iterator<Item = u64> + '_ {
        self.exponents.keys().copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (u64, Rational64)> + '_ {
        self.exponents.iter().map(|(&p, &e)| (p, e))
    }

    pub fn len(&self) -> usize {
        self.exponents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.exponents.is_empty()
    }

    pub fn is_integral(&self) -> bool {
        self.exponents.values().all(|e| e.is_integer())
    }

    pub fn is_nonnegative(&self) -> bool {
        self.exponents
            .values()
            .all(|e| *e > Rational64::from_integer(0))
    }

    /// `sum e_p log p`, the additive form. For display only.
    pub fn log_value(&self) -> f64 {
        self.exponents
            .iter()
            .map(|(&p, e)| (*e.numer() as f64 / *e.denom() as f64) * (p as f64).ln())
            .sum()
    }
}

fn render_exponent(e: &Rational64) -> String {
    if e.is_integer() {
        e.numer().to_string()
    } else {
        format!("{}/{}", e.numer(), e.denom())
    }
}

fn parse_exponent(s: &str) -> Option<Rational64> {
    let s = s.trim().trim_start_matches('(').trim_end_matches(')');
    match s.split_once('/') {
        Some((n, d)) => {
            let d: i64 = d.trim().parse().ok()?;
            if d == 0 {
                return None;
            }
            Some(Rational64::new(n.trim().parse().ok()?, d))
        }
        None => Some(Rational64::from_integer(s.parse().ok()?)),
    }
}

/// Renders as `2^6*3^3*5^3`; rational exponents as `2^(3/2)`; `1` when empty.
impl fmt::Display for FactoredNumber {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.exponents.is_empty() {
            return write!(f, "1");
        }
        for (i, (p, e)) in self.exponents.iter().enumerate() {
            if i > 0 {
                write!(f, "*")?;
            }
            if e.is_integer() {
                write!(f, "{p}^{}", e.numer())?;
            } else {
                write!(f, "{p}^({}/{})", e.numer(), e.denom())?;
            }
        }
        Ok(())
    }
}

/// Accepts the [`Display`](fmt::Display) form; the empty string and `1` mean
/// the empty product.
impl FromStr for FactoredNumber {
    type Err = ParseFactoredError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        let mut out = Self::one();
        if s.is_empty() || s == "1" {
            return Ok(out);
        }
        for part in s.split('*') {
            let bad = || ParseFactoredError::Malformed(part.to_string());
            let (p, e) = match part.split_once('^') {
                Some((p, e)) => (p, parse_exponent(e).ok_or_else(bad)?),
                None => (part, Rational64::from_integer(1)),
            };
            let p: u64 = p.trim().parse().map_err(|_| bad())?;
            if !is_prime(p) {
                return Err(ParseFactoredError::NotPrime(p));
            }
            if out.exponents.contains_key(&p) {
                return Err(ParseFactoredError::Duplicate(p));
            }
            out.add_exponent(p, e);
        }
        Ok(out)
    }
}

/// JSON form: `{"2": 6, "3": "3/2"}` (integers as numbers, fractions as strings).
impl Serialize for FactoredNumber {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let mut map = serializer.serialize_map(Some(self.exponents.len()))?;
        for (p, e) in &self.exponents {
            let key = p.to_string();
            if e.is_integer() {
                map.serialize_entry(&key, e.numer())?;
            } else {
                map.serialize_entry(&key, &render_exponent(e))?;
            }
        }
        map.end()
    }
}

#[derive(Deserialize)]
#[serde(untagged)]
enum RawExponent {
    Int(i64),
    Text(String),
}

impl<'de> Deserialize<'de> for FactoredNumber {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        struct FactoredVisitor;

        impl<'de> Visitor<'de> for FactoredVisitor {
            type Value = FactoredNumber;

            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                write!(f, "a map from primes to exponents")
            }

            fn visit_map<A: MapAccess<'de>>(self, mut access: A) -> Result<Self::Value, A::Error> {
                let mut out = FactoredNumber::one();
                while let Some((key, raw)) = access.next_entry::<String, RawExponent>()? {
                    let p: u64 = key
                        .parse()
                        .map_err(|_| de::Error::custom(format!("bad prime key `{key}`")))?;
                    if !is_prime(p) {
                        return Err(de::Error::custom(format!("{p} is not prime")));
                    }
                    let e = match raw {
                        RawExponent::Int(n) => Rational64::from_integer(n),
                        RawExponent::Text(s) => parse_exponent(&s)
                            .ok_or_else(|| de::Error::custom(format!("bad exponent `{s}`")))?,
                    };
                    out.add_exponent(p, e);
                }
                Ok(out)
            }
        }

        deserializer.deserialize_map(FactoredVisitor)
    }
}
