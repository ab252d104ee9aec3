//! Arithmetic intersection numbers of Heegner divisors.
//!
//! The value `<P1, P2> = sum_q e_q log q` is returned in exponential form as a
//! [`FactoredNumber`]. Two evaluators are provided: [`theorem_b`] scans the
//! set `S(d1 d2, p^2n)` directly, while [`theorem_c`] enumerates the crossed
//! traces `t` with `t^2 + 4 N^2 m = d1 d2` for an arbitrary mixed level. They
//! share only the per-`m` divisor sum.

use std::collections::BTreeSet;

use num_rational::Rational64;
use thiserror::Error;

use crate::arith::{factorize, is_prime, isqrt, ArithError};
use crate::factored::FactoredNumber;
use crate::genus_char::{DiscriminantPair, GenusError};
use crate::heegner::{
    classify_pair, degenerate_ratio, Discriminant, HeegnerError, Level, PairClassification, PairTag,
};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum IntersectionError {
    #[error("formula does not apply ({}): {}", .0.tag, .0.detail)]
    Inapplicable(PairClassification),
    #[error("{d1}/{d2} is an even power of {q}; the pair is degenerate")]
    Degenerate { d1: i64, d2: i64, q: u64 },
    #[error("{0} is not prime")]
    NotPrime(u64),
    #[error("the certificate needs p >= 11, got {0}")]
    PrimeTooSmall(u64),
    #[error("level {0}^{1} is too large")]
    LevelOverflow(u64, u32),
    #[error(transparent)]
    Genus(#[from] GenusError),
    #[error(transparent)]
    Heegner(#[from] HeegnerError),
    #[error(transparent)]
    Arith(#[from] ArithError),
}

/// `S(a, b)`: positive integers of the form `(a - x^2) / 4b`, ascending.
pub fn s_set(a: u64, b: u64) -> Vec<u64> {
    assert!(a >= 1 && b >= 1, "S(a, b) needs positive arguments");
    let Some(four_b) = b.checked_mul(4) else {
        return Vec::new();
    };
    if four_b > a {
        return Vec::new();
    }
    // x and -x give the same m, and m decreases as x grows.
    let mut out: Vec<u64> = (0..=isqrt(a - four_b))
        .filter_map(|x| {
            let r = a - x * x;
            r.is_multiple_of(four_b).then_some(r / four_b)
        })
        .collect();
    out.reverse();
    out
}

/// Inner sum of the intersection formula for one `m`:
/// `sum_{d | m} epsilon(m/d) log d`.
pub fn contribution_of_m(
    pair: &DiscriminantPair,
    m: u64,
) -> Result<FactoredNumber, IntersectionError> {
    Ok(pair.gz_divisor_sum(m)?)
}

/// Checks that the closed formulas are valid for `(d1, d2)` at `lv`.
pub fn require_applicable(
    d1: &Discriminant,
    d2: &Discriminant,
    lv: &Level,
) -> Result<PairClassification, IntersectionError> {
    let c = classify_pair(d1, d2, lv);
    if c.tag.is_computable() {
        Ok(c)
    } else {
        Err(IntersectionError::Inapplicable(c))
    }
}

fn unit_weight(d1: &Discriminant, d2: &Discriminant) -> i64 {
    i64::from(d1.unit_count()) * i64::from(d2.unit_count())
}

/// `exp <P1, P2>` on `X_ns^+(p^n)`:
/// `(w1 w2 / 4) * sum_{m in S(d1 d2, p^2n)} sum_{d | m} epsilon(m/d) log d`.
pub fn theorem_b(
    d1: &Discriminant,
    d2: &Discriminant,
    p: u64,
    n: u32,
) -> Result<FactoredNumber, IntersectionError> {
    if !is_prime(p) {
        return Err(IntersectionError::NotPrime(p));
    }
    let level_n = p
        .checked_pow(n)
        .ok_or(IntersectionError::LevelOverflow(p, n))?;
    let lv = Level::non_split(level_n)?;
    require_applicable(d1, d2, &lv)?;
    let pair = DiscriminantPair::new(*d1, *d2)?;
    let mut total = FactoredNumber::one();
    let Some(b) = level_n.checked_mul(level_n) else {
        return Ok(total);
    };
    for m in s_set(pair.product(), b) {
        total.mul_assign(&contribution_of_m(&pair, m)?);
    }
    Ok(total.scaled(Rational64::new(unit_weight(d1, d2), 4)))
}

/// Every integer `t` (both signs, zero once) with `t^2 < d1 d2` and
/// `4 N^2 | d1 d2 - t^2`, paired with `m_t = (d1 d2 - t^2) / 4N^2`.
pub fn crossed_traces(product: u64, n: u64) -> Vec<(i64, u64)> {
    let Some(four_n2) = n.checked_mul(n).and_then(|n2| n2.checked_mul(4)) else {
        return Vec::new();
    };
    if four_n2 > product {
        return Vec::new();
    }
    let bound = isqrt(product - four_n2);
    let mut out = Vec::new();
    for t in 0..=bound {
        let r = product - t * t;
        if r.is_multiple_of(four_n2) {
            let m = r / four_n2;
            out.push((t as i64, m));
            if t != 0 {
                out.push((-(t as i64), m));
            }
        }
    }
    out
}

/// `exp <P1, P2>` on the mixed Cartan curve of level `lv`:
/// `(w1 w2 / 8) * sum_{t^2 + 4 N^2 d d' = d1 d2} epsilon(d') log d`.
pub fn theorem_c(
    d1: &Discriminant,
    d2: &Discriminant,
    lv: &Level,
) -> Result<FactoredNumber, IntersectionError> {
    require_applicable(d1, d2, lv)?;
    let pair = DiscriminantPair::new(*d1, *d2)?;
    let mut total = FactoredNumber::one();
    for (_, m) in crossed_traces(pair.product(), lv.n()) {
        total.mul_assign(&contribution_of_m(&pair, m)?);
    }
    Ok(total.scaled(Rational64::new(unit_weight(d1, d2), 8)))
}

/// Primes `q` such that some `m` in `S(d1 d2, 1)` is divisible by `p^2 q`.
///
/// For `p >= 11` and a non-degenerate pair, the Heegner divisors can only meet
/// on `X_ns^+(p)` at primes in this set.
pub fn no_intersection_primes(
    d1: &Discriminant,
    d2: &Discriminant,
    p: u64,
) -> Result<BTreeSet<u64>, IntersectionError> {
    if !is_prime(p) {
        return Err(IntersectionError::NotPrime(p));
    }
    if p < 11 {
        return Err(IntersectionError::PrimeTooSmall(p));
    }
    if let Some((q, _)) = degenerate_ratio(d1, d2) {
        return Err(IntersectionError::Degenerate {
            d1: d1.value(),
            d2: d2.value(),
            q,
        });
    }
    let p2 = p * p;
    let mut out = BTreeSet::new();
    for m in s_set(d1.abs() * d2.abs(), 1) {
        if m % p2 == 0 && m > p2 {
            out.extend(factorize(m / p2)?.primes());
        }
    }
    Ok(out)
}

/// Whether `(d1, d2)` is computable on `X_ns^+(p^n)`; convenience for callers
/// that want the tag without an error.
pub fn classify_non_split(
    d1: &Discriminant,
    d2: &Discriminant,
    p: u64,
    n: u32,
) -> Result<PairTag, IntersectionError> {
    let level_n = p
        .checked_pow(n)
        .ok_or(IntersectionError::LevelOverflow(p, n))?;
    Ok(classify_pair(d1, d2, &Level::non_split(level_n)?).tag)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn disc(d: i64) -> Discriminant {
        Discriminant::new(d).unwrap()
    }

    fn fnum(s: &str) -> FactoredNumber {
        s.parse().unwrap()
    }

    fn pair(a: i64, b: i64) -> DiscriminantPair {
        DiscriminantPair::new(disc(a), disc(b)).unwrap()
    }

    /// Brute-force S(a, b): scan every candidate m directly.
    fn oracle_s_set(a: u64, b: u64) -> Vec<u64> {
        (1..=a / (4 * b))
            .filter(|m| {
                let r = a - 4 * b * m;
                let x = (r as f64).sqrt().round() as u64;
                x * x == r
            })
            .collect()
    }

    #[test]
    fn s_set_examples() {
        assert_eq!(s_set(30705, 121), vec![20, 44]);
        assert_eq!(s_set(12, 1), vec![2, 3]);
        assert!(s_set(3, 1).is_empty());
        assert_eq!(s_set(129, 4), vec![3, 5, 8]);
        assert!(s_set(28, 9).is_empty());
        assert_eq!(s_set(4, 1), vec![1]);
        assert_eq!(s_set(5, 1), vec![1]);
    }

    #[test]
    fn s_set_matches_brute_force() {
        for a in 1..600u64 {
            for b in [1u64, 2, 4, 9, 25] {
                assert_eq!(s_set(a, b), oracle_s_set(a, b), "S({a},{b})");
            }
        }
    }

    #[test]
    fn contribution_examples() {
        assert_eq!(
            contribution_of_m(&pair(-115, -267), 20).unwrap(),
            fnum("5^1")
        );
        assert_eq!(contribution_of_m(&pair(-3, -11), 2).unwrap(), fnum("2^1"));
        assert_eq!(contribution_of_m(&pair(-3, -43), 8).unwrap(), fnum("2^2"));
    }

    #[test]
    fn theorem_b_examples() {
        assert_eq!(
            theorem_b(&disc(-115), &disc(-267), 11, 1).unwrap(),
            fnum("5^1*11^1")
        );
        assert_eq!(theorem_b(&disc(-3), &disc(-11), 2, 1).unwrap(), fnum("2^3"));
        assert_eq!(
            theorem_b(&disc(-4), &disc(-7), 3, 1).unwrap(),
            FactoredNumber::one()
        );
        assert_eq!(
            theorem_b(&disc(-3), &disc(-43), 2, 1).unwrap(),
            fnum("2^6*3^3*5^3")
        );
    }

    #[test]
    fn theorem_b_rejects_inapplicable_pairs() {
        let err = theorem_b(&disc(-3), &disc(-12), 11, 1).unwrap_err();
        assert!(matches!(
            err,
            IntersectionError::Inapplicable(PairClassification {
                tag: PairTag::DegenerateReferenceOnly,
                ..
            })
        ));
        let err = theorem_b(&disc(-4), &disc(-7), 2, 1).unwrap_err();
        assert!(matches!(
            err,
            IntersectionError::Inapplicable(PairClassification {
                tag: PairTag::NonHeegner,
                ..
            })
        ));
        assert_eq!(
            theorem_b(&disc(-4), &disc(-7), 9, 1),
            Err(IntersectionError::NotPrime(9))
        );
    }

    #[test]
    fn theorem_b_higher_prime_power() {
        // S(30705, 11^4) is empty.
        assert_eq!(
            theorem_b(&disc(-115), &disc(-267), 11, 2).unwrap(),
            FactoredNumber::one()
        );
        assert_eq!(
            theorem_b(&disc(-115), &disc(-267), 11, 2).unwrap(),
            theorem_c(&disc(-115), &disc(-267), &Level::non_split(121).unwrap()).unwrap()
        );
    }

    #[test]
    fn theorem_c_examples() {
        let one = Level::trivial();
        assert_eq!(
            theorem_c(&disc(-3), &disc(-7), &one).unwrap(),
            fnum("3^3*5^3")
        );
        assert_eq!(
            theorem_c(&disc(-4), &disc(-7), &one).unwrap(),
            fnum("3^6*7^1")
        );
        assert_eq!(
            theorem_c(&disc(-115), &disc(-267), &Level::non_split(11).unwrap()).unwrap(),
            fnum("5^1*11^1")
        );
    }

    #[test]
    fn crossed_traces_pair_up() {
        let ts = crossed_traces(28, 1);
        assert_eq!(ts, vec![(0, 7), (2, 6), (-2, 6), (4, 3), (-4, 3)]);
        assert!(crossed_traces(28, 3).is_empty());
    }

    #[test]
    fn no_intersection_examples() {
        assert_eq!(
            no_intersection_primes(&disc(-16), &disc(-163), 11).unwrap(),
            BTreeSet::from([3])
        );
        assert_eq!(
            no_intersection_primes(&disc(-11), &disc(-163), 13).unwrap(),
            BTreeSet::from([2])
        );
        assert!(no_intersection_primes(&disc(-3), &disc(-7), 11)
            .unwrap()
            .is_empty());
        assert!(matches!(
            no_intersection_primes(&disc(-3), &disc(-12), 11),
            Err(IntersectionError::Degenerate { q: 2, .. })
        ));
        assert_eq!(
            no_intersection_primes(&disc(-3), &disc(-7), 7),
            Err(IntersectionError::PrimeTooSmall(7))
        );
    }

    fn fundamental_discs() -> Vec<i64> {
        (3..800i64)
            .filter_map(|n| Discriminant::new(-n).ok())
            .filter(|d| d.is_fundamental())
            .map(|d| d.value())
            .collect()
    }

    proptest! {
        #[test]
        fn s_set_scaling(a in 1u64..200_000, b in 1u64..50) {
            let base: BTreeSet<u64> = s_set(a, 1).into_iter().collect();
            let scaled = s_set(a, b);
            for &m in &scaled {
                prop_assert!(base.contains(&(b * m)));
            }
            let expected: Vec<u64> = base.iter().filter(|&&m| m % b == 0).map(|&m| m / b).collect();
            prop_assert_eq!(scaled, expected);
        }

        #[test]
        fn theorem_c_symmetric(i in 0usize..400, j in 0usize..400, lvl in prop::sample::select(vec![(1u64, 1u64), (1, 2), (1, 3), (1, 5), (3, 2)])) {
            let ds = fundamental_discs();
            let (a, b) = (disc(ds[i % ds.len()]), disc(ds[j % ds.len()]));
            let lv = Level::new(lvl.0, lvl.1).unwrap();
            prop_assert_eq!(theorem_c(&a, &b, &lv).ok(), theorem_c(&b, &a, &lv).ok());
        }
    }

    #[test]
    fn theorem_b_is_nonnegative_on_random_heegner_pairs() {
        use rand::{rngs::StdRng, Rng, SeedableRng};
        let ds = fundamental_discs();
        let mut rng = StdRng::seed_from_u64(0x5eed);
        let mut checked = 0;
        while checked < 200 {
            let p = [2u64, 3, 5, 7, 11, 13][rng.random_range(0..6)];
            let a = disc(ds[rng.random_range(0..ds.len())]);
            let b = disc(ds[rng.random_range(0..ds.len())]);
            if let Ok(x) = theorem_b(&a, &b, p, 1) {
                assert!(x.is_nonnegative(), "({a},{b}) p={p}: {x}");
                checked += 1;
            }
        }
    }
}
