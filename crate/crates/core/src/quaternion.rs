//! Order-theoretic side of the intersection formula.
//!
//! For a crossed trace `t` the two embedded quadratic orders generate an order
//! `S_t` of reduced discriminant `(d1 d2 - t^2) / 4`. Everything needed about
//! `S_t` is a function of that number and the genus character, so orders are
//! represented by [`CliffordOrderDescriptor`] rather than by explicit algebra
//! elements.

use std::collections::{BTreeMap, BTreeSet};

use num_rational::Rational64;
use serde::Serialize;
use thiserror::Error;

use crate::arith::{factorize, valuation, ArithError};
use crate::factored::FactoredNumber;
use crate::genus_char::{DiscriminantPair, GenusError};
use crate::heegner::{Discriminant, Level};
use crate::intersection::{crossed_traces, require_applicable, IntersectionError};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum QuaternionError {
    #[error("t = {t} is not a definite crossed trace: t^2 must be below {product}")]
    Indefinite { t: i64, product: u64 },
    #[error("t = {t} has the wrong parity: t^2 must be congruent to {product} mod 4")]
    WrongParity { t: i64, product: u64 },
    #[error("Eichler superorder count needs 2k <= n, got n = {n}, k = {k}")]
    SuperorderLevel { n: u32, k: u32 },
    #[error(transparent)]
    Genus(#[from] GenusError),
    #[error(transparent)]
    Arith(#[from] ArithError),
}

/// Residual type of `S_t` at a prime dividing its discriminant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum LocalType {
    Split,
    Inert,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CliffordOrderDescriptor {
    pub d1: Discriminant,
    pub d2: Discriminant,
    pub t: i64,
    pub disc_magnitude: u64,
    pub local_types: BTreeMap<u64, LocalType>,
}

impl CliffordOrderDescriptor {
    /// Finite primes where `S_t (x) Q` ramifies: odd-order primes of the
    /// discriminant with inert type.
    pub fn ramified_primes(&self) -> BTreeSet<u64> {
        self.local_types
            .iter()
            .filter(|&(&p, &ty)| {
                ty == LocalType::Inert && valuation(i128::from(self.disc_magnitude), p) % 2 == 1
            })
            .map(|(&p, _)| p)
            .collect()
    }
}

pub fn clifford_descriptor(
    pair: &DiscriminantPair,
    t: i64,
) -> Result<CliffordOrderDescriptor, QuaternionError> {
    let product = pair.product();
    let t_abs = t.unsigned_abs();
    let t2 = t_abs.checked_mul(t_abs).filter(|&sq| sq < product);
    let Some(t2) = t2 else {
        return Err(QuaternionError::Indefinite { t, product });
    };
    let diff = product - t2;
    if !diff.is_multiple_of(4) {
        return Err(QuaternionError::WrongParity { t, product });
    }
    let disc_magnitude = diff / 4;
    let mut local_types = BTreeMap::new();
    for p in factorize(disc_magnitude)?.primes() {
        let ty = if pair.epsilon_prime(p)? == 1 {
            LocalType::Split
        } else {
            LocalType::Inert
        };
        local_types.insert(p, ty);
    }
    Ok(CliffordOrderDescriptor {
        d1: *pair.d1(),
        d2: *pair.d2(),
        t,
        disc_magnitude,
        local_types,
    })
}

/// Number of mixed Cartan superorders of `S_t` of level `lv`:
/// `prod_{p split} (1 + ord_p(disc / N^2))`, or 0 when `N^2` does not divide
/// the discriminant.
pub fn mixed_cartan_count(desc: &CliffordOrderDescriptor, lv: &Level) -> u64 {
    let n = lv.n();
    let Some(n2) = n.checked_mul(n) else {
        return 0;
    };
    if !desc.disc_magnitude.is_multiple_of(n2) {
        return 0;
    }
    let reduced = i128::from(desc.disc_magnitude / n2);
    desc.local_types
        .iter()
        .filter(|&(_, &ty)| ty == LocalType::Split)
        .map(|(&p, _)| 1 + u64::from(valuation(reduced, p)))
        .product()
}

/// Eichler orders of level `p^2k` containing a fixed Eichler order of level
/// `p^n`: sub-paths of length `2k` in a path of length `n`.
pub fn eichler_superorder_count(n: u32, k: u32) -> Result<u32, QuaternionError> {
    if 2 * u64::from(k) > u64::from(n) {
        return Err(QuaternionError::SuperorderLevel { n, k });
    }
    Ok(n + 1 - 2 * k)
}

/// Evaluates the mixed-level intersection number by counting superorders of
/// each `S_t` instead of summing the genus character over divisors.
pub fn theorem_c_via_orders(
    d1: &Discriminant,
    d2: &Discriminant,
    lv: &Level,
) -> Result<FactoredNumber, IntersectionError> {
    require_applicable(d1, d2, lv)?;
    let pair = DiscriminantPair::new(*d1, *d2)?;
    let weight = i64::from(d1.unit_count()) * i64::from(d2.unit_count());
    let mut total = FactoredNumber::one();
    for (t, m) in crossed_traces(pair.product(), lv.n()) {
        let diff = pair.diff_set(m)?;
        let [q] = diff.iter().copied().collect::<Vec<_>>()[..] else {
            continue;
        };
        let desc = clifford_descriptor(&pair, t).map_err(|e| match e {
            QuaternionError::Genus(g) => IntersectionError::Genus(g),
            QuaternionError::Arith(a) => IntersectionError::Arith(a),
            other => unreachable!("crossed traces are definite with matching parity: {other}"),
        })?;
        let count = mixed_cartan_count(&desc, lv) as i64;
        let ord = i64::from(valuation(i128::from(m), q));
        total.add_exponent(q, Rational64::new((1 + ord) * count, 2));
    }
    Ok(total.scaled(Rational64::new(weight, 8)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::intersection::theorem_c;
    use proptest::prelude::*;

    fn disc(d: i64) -> Discriminant {
        Discriminant::new(d).unwrap()
    }

    fn pair(a: i64, b: i64) -> DiscriminantPair {
        DiscriminantPair::new(disc(a), disc(b)).unwrap()
    }

    fn fnum(s: &str) -> FactoredNumber {
        s.parse().unwrap()
    }

    #[test]
    fn descriptor_examples() {
        use LocalType::*;
        let d = clifford_descriptor(&pair(-115, -267), 145).unwrap();
        assert_eq!(d.disc_magnitude, 2420);
        assert_eq!(
            d.local_types,
            BTreeMap::from([(2, Inert), (5, Inert), (11, Inert)])
        );
        assert_eq!(d.ramified_primes(), BTreeSet::from([5]));

        let d = clifford_descriptor(&pair(-3, -43), 5).unwrap();
        assert_eq!(d.disc_magnitude, 26);
        assert_eq!(d.local_types, BTreeMap::from([(2, Inert), (13, Split)]));

        let d = clifford_descriptor(&pair(-4, -7), 0).unwrap();
        assert_eq!(d.disc_magnitude, 7);
        assert_eq!(d.local_types, BTreeMap::from([(7, Inert)]));
    }

    #[test]
    fn descriptor_domain_errors() {
        assert!(matches!(
            clifford_descriptor(&pair(-4, -7), 6),
            Err(QuaternionError::Indefinite { .. })
        ));
        assert!(matches!(
            clifford_descriptor(&pair(-4, -7), 1),
            Err(QuaternionError::WrongParity { .. })
        ));
        assert!(matches!(
            clifford_descriptor(&pair(-4, -7), i64::MIN),
            Err(QuaternionError::Indefinite { .. })
        ));
    }

    #[test]
    fn ramified_primes_match_diff_set() {
        for (a, b) in [
            (-115, -267),
            (-3, -43),
            (-4, -7),
            (-3, -7),
            (-7, -163),
            (-8, -67),
        ] {
            let pr = pair(a, b);
            for (t, _) in crossed_traces(pr.product(), 1) {
                let d = clifford_descriptor(&pr, t).unwrap();
                assert_eq!(
                    d.ramified_primes(),
                    pr.diff_set(d.disc_magnitude).unwrap(),
                    "({a},{b}) t={t}"
                );
            }
        }
    }

    #[test]
    fn mixed_cartan_examples() {
        let d = clifford_descriptor(&pair(-115, -267), 145).unwrap();
        assert_eq!(mixed_cartan_count(&d, &Level::non_split(11).unwrap()), 1);
        let d = clifford_descriptor(&pair(-3, -43), 5).unwrap();
        assert_eq!(mixed_cartan_count(&d, &Level::trivial()), 2);
        assert_eq!(mixed_cartan_count(&d, &Level::non_split(2).unwrap()), 0);
    }

    #[test]
    fn eichler_examples() {
        assert_eq!(eichler_superorder_count(0, 0).unwrap(), 1);
        assert_eq!(eichler_superorder_count(4, 1).unwrap(), 3);
        assert_eq!(eichler_superorder_count(2, 1).unwrap(), 1);
        assert!(eichler_superorder_count(1, 1).is_err());
        for n in 0..20 {
            assert_eq!(eichler_superorder_count(n, 0).unwrap(), n + 1);
        }
    }

    #[test]
    fn via_orders_examples() {
        assert_eq!(
            theorem_c_via_orders(&disc(-115), &disc(-267), &Level::non_split(11).unwrap()).unwrap(),
            fnum("5^1*11^1")
        );
        assert_eq!(
            theorem_c_via_orders(&disc(-3), &disc(-11), &Level::non_split(2).unwrap()).unwrap(),
            fnum("2^3")
        );
        assert_eq!(
            theorem_c_via_orders(&disc(-3), &disc(-7), &Level::trivial()).unwrap(),
            fnum("3^3*5^3")
        );
        assert_eq!(
            theorem_c_via_orders(&disc(-4), &disc(-7), &Level::trivial()).unwrap(),
            fnum("3^6*7^1")
        );
    }

    fn fundamental_discs() -> Vec<i64> {
        (3..1000i64)
            .filter_map(|n| Discriminant::new(-n).ok())
            .filter(|d| d.is_fundamental())
            .map(|d| d.value())
            .collect()
    }

    proptest! {
        #[test]
        fn evaluators_agree(i in 0usize..1000, j in 0usize..1000, lvl in prop::sample::select(vec![(1u64, 1u64), (1, 2), (1, 3), (1, 5), (1, 7), (3, 2), (5, 1)])) {
            let ds = fundamental_discs();
            let (a, b) = (disc(ds[i % ds.len()]), disc(ds[j % ds.len()]));
            let lv = Level::new(lvl.0, lvl.1).unwrap();
            prop_assert_eq!(theorem_c(&a, &b, &lv), theorem_c_via_orders(&a, &b, &lv));
        }

        #[test]
        fn cartan_count_positive_when_level_divides(i in 0usize..1000, j in 0usize..1000, n in 1u64..8) {
            let ds = fundamental_discs();
            let (a, b) = (disc(ds[i % ds.len()]), disc(ds[j % ds.len()]));
            prop_assume!(a.value().unsigned_abs() != b.value().unsigned_abs());
            if let Ok(pr) = DiscriminantPair::new(a, b) {
                for (t, _) in crossed_traces(pr.product(), 1) {
                    if let Ok(d) = clifford_descriptor(&pr, t) {
                        if d.disc_magnitude % (n * n) == 0 {
                            let lv = Level::non_split(n).unwrap();
                            prop_assert!(mixed_cartan_count(&d, &lv) >= 1);
                        }
                    }
                }
            }
        }
    }
}
