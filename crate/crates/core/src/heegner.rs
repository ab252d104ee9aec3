//! Discriminants, mixed Cartan levels, the Heegner condition, and the
//! classification of a discriminant pair by which evaluator (if any) applies.

use std::fmt;

use num_integer::Integer;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::arith::{factorize, kronecker, ArithError};
use crate::intersection::s_set;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum HeegnerError {
    #[error("{0} is not a negative discriminant (must be < 0 and = 0 or 1 mod 4)")]
    NotADiscriminant(i64),
    #[error("|{0}| exceeds the supported range 2^31")]
    TooLarge(i64),
    #[error("level components must be positive, got ({0}, {1})")]
    ZeroLevel(u64, u64),
    #[error("level components ({0}, {1}) are not coprime")]
    LevelNotCoprime(u64, u64),
    #[error(transparent)]
    Arith(#[from] ArithError),
}

/// Largest |discriminant| accepted; keeps `|d1 d2| < 2^62`.
pub const MAX_ABS_DISCRIMINANT: i64 = 1 << 31;

/// A negative discriminant `value = conductor^2 * fundamental_part`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Discriminant {
    value: i64,
    fundamental: i64,
    conductor: u64,
}

impl Discriminant {
    pub fn new(d: i64) -> Result<Self, HeegnerError> {
        decompose_discriminant(d)
    }

    pub fn value(&self) -> i64 {
        self.value
    }

    pub fn fundamental_part(&self) -> i64 {
        self.fundamental
    }

    pub fn conductor(&self) -> u64 {
        self.conductor
    }

    pub fn is_fundamental(&self) -> bool {
        self.conductor == 1
    }

    pub fn abs(&self) -> u64 {
        self.value.unsigned_abs()
    }

    /// `|O^x|` for the quadratic order of this discriminant.
    pub fn unit_count(&self) -> u32 {
        unit_count(self)
    }
}

impl fmt::Display for Discriminant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.value)
    }
}

/// Splits `d` as `f^2 * D` with `D` fundamental.
pub fn decompose_discriminant(d: i64) -> Result<Discriminant, HeegnerError> {
    if d >= 0 || !matches!(d.rem_euclid(4), 0 | 1) {
        return Err(HeegnerError::NotADiscriminant(d));
    }
    if d <= -MAX_ABS_DISCRIMINANT {
        return Err(HeegnerError::TooLarge(d));
    }
    let fact = factorize(d.unsigned_abs())?;
    let mut square_root = 1u64;
    let mut core = 1u64;
    for &(p, e) in fact.factors() {
        square_root *= p.pow(e / 2);
        core *= p.pow(e % 2);
    }
    let core = -(core as i64);
    let (fundamental, conductor) = if core.rem_euclid(4) == 1 {
        (core, square_root)
    } else {
        // core = 2, 3 mod 4 forces an even square part.
        debug_assert!(square_root.is_multiple_of(2));
        (4 * core, square_root / 2)
    };
    Ok(Discriminant {
        value: d,
        fundamental,
        conductor,
    })
}

pub fn unit_count(d: &Discriminant) -> u32 {
    match d.value {
        -3 => 6,
        -4 => 4,
        _ => 2,
    }
}

/// The mixed Cartan level: split at primes of `n_spl`, non-split at primes of `n_ns`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Level {
    n_spl: u64,
    n_ns: u64,
}

impl Level {
    pub fn new(n_spl: u64, n_ns: u64) -> Result<Self, HeegnerError> {
        if n_spl == 0 || n_ns == 0 {
            return Err(HeegnerError::ZeroLevel(n_spl, n_ns));
        }
        if n_spl.gcd(&n_ns) != 1 {
            return Err(HeegnerError::LevelNotCoprime(n_spl, n_ns));
        }
        Ok(Level { n_spl, n_ns })
    }

    /// The level of `X_ns^+(n)`.
    pub fn non_split(n: u64) -> Result<Self, HeegnerError> {
        Level::new(1, n)
    }

    pub fn trivial() -> Self {
        Level { n_spl: 1, n_ns: 1 }
    }

    pub fn n_spl(&self) -> u64 {
        self.n_spl
    }

    pub fn n_ns(&self) -> u64 {
        self.n_ns
    }

    /// `N = n_spl * n_ns`.
    pub fn n(&self) -> u64 {
        self.n_spl * self.n_ns
    }
}

impl fmt::Display for Level {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(spl={}, ns={})", self.n_spl, self.n_ns)
    }
}

pub fn heegner_condition(d: &Discriminant, lv: &Level) -> bool {
    let split_ok = factorize(lv.n_spl)
        .map(|f| f.primes().all(|q| kronecker(d.value, q as i64) == 1))
        .unwrap_or(false);
    let inert_ok = factorize(lv.n_ns)
        .map(|f| f.primes().all(|q| kronecker(d.value, q as i64) == -1))
        .unwrap_or(false);
    split_ok && inert_ok
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PairTag {
    TheoremB,
    NonFundamentalExact,
    DegenerateReferenceOnly,
    NonHeegner,
    Unsupported,
}

impl PairTag {
    /// Whether the closed formulas are valid for this pair.
    pub fn is_computable(self) -> bool {
        matches!(self, PairTag::TheoremB | PairTag::NonFundamentalExact)
    }
}

impl fmt::Display for PairTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            PairTag::TheoremB => "TheoremB",
            PairTag::NonFundamentalExact => "NonFundamentalExact",
            PairTag::DegenerateReferenceOnly => "DegenerateReferenceOnly",
            PairTag::NonHeegner => "NonHeegner",
            PairTag::Unsupported => "Unsupported",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairClassification {
    pub tag: PairTag,
    pub detail: String,
}

impl PairClassification {
    fn new(tag: PairTag, detail: impl Into<String>) -> Self {
        PairClassification {
            tag,
            detail: detail.into(),
        }
    }
}

/// If `d1/d2 = q^(2r)` for a prime `q` and `r != 0`, returns `(q, r)`.
pub fn degenerate_ratio(d1: &Discriminant, d2: &Discriminant) -> Option<(u64, i32)> {
    let (a, b) = (d1.abs(), d2.abs());
    let (big, small, sign) = if a >= b { (a, b, 1) } else { (b, a, -1) };
    if big == small || big % small != 0 {
        return None;
    }
    let f = factorize(big / small).ok()?;
    match f.factors() {
        [(q, e)] if e % 2 == 0 => Some((*q, sign * (*e as i32) / 2)),
        _ => None,
    }
}

/// Classifies `(d1, d2)` at level `lv`. The first matching tag in the order
/// `TheoremB > NonFundamentalExact > DegenerateReferenceOnly > NonHeegner >
/// Unsupported` wins.
pub fn classify_pair(d1: &Discriminant, d2: &Discriminant, lv: &Level) -> PairClassification {
    let coprime = d1.value.gcd(&d2.value) == 1;
    let h1 = heegner_condition(d1, lv);
    let h2 = heegner_condition(d2, lv);

    if coprime && h1 && h2 {
        if d1.is_fundamental() && d2.is_fundamental() {
            return PairClassification::new(
                PairTag::TheoremB,
                format!("coprime fundamental Heegner discriminants for level {lv}"),
            );
        }
        let f12 = d1.conductor * d2.conductor;
        let n = lv.n();
        let bad = n
            .checked_mul(n)
            .map(|n2| s_set(d1.abs() * d2.abs(), n2))
            .map(|s| s.into_iter().find(|m| m.gcd(&f12) != 1));
        return match bad {
            Some(None) => PairClassification::new(
                PairTag::NonFundamentalExact,
                format!(
                    "coprime Heegner discriminants with conductors {} and {}; every m in S({}, {}^2) is coprime to {}",
                    d1.conductor,
                    d2.conductor,
                    d1.abs() * d2.abs(),
                    n,
                    f12
                ),
            ),
            Some(Some(m)) => PairClassification::new(
                PairTag::Unsupported,
                format!(
                    "non-fundamental pair: m = {m} in S({}, {n}^2) shares a factor with the conductor product {f12}",
                    d1.abs() * d2.abs()
                ),
            ),
            None => PairClassification::new(PairTag::Unsupported, "level too large"),
        };
    }
    if !coprime {
        if let Some((q, r)) = degenerate_ratio(d1, d2) {
            return PairClassification::new(
                PairTag::DegenerateReferenceOnly,
                format!("degenerate pair: {d1}/{d2} = {q}^{}", 2 * r),
            );
        }
        return PairClassification::new(
            PairTag::Unsupported,
            format!(
                "discriminants share the factor {} and their ratio is not an even prime power",
                d1.value.gcd(&d2.value)
            ),
        );
    }
    let failing: Vec<String> = [(d1, h1), (d2, h2)]
        .iter()
        .filter(|(_, ok)| !ok)
        .map(|(d, _)| d.to_string())
        .collect();
    PairClassification::new(
        PairTag::NonHeegner,
        format!(
            "Heegner condition fails at level {lv} for {}",
            failing.join(" and ")
        ),
    )
}
