//! The genus character `epsilon` of a coprime discriminant pair and the
//! divisor sums built from it.
//!
//! At a prime `p`, `epsilon(p)` is the Kronecker symbol `(D/p)` for whichever
//! of `D = d1, d2` is prime to `p`. When `p` divides neither, both symbols must
//! agree; this holds for every prime dividing an element of an `S`-set, which is
//! the only place the character is evaluated.

use std::collections::{BTreeSet, HashMap};
use std::sync::RwLock;

use num_integer::Integer;
use num_rational::Rational64;
use thiserror::Error;

use crate::arith::{factorize, is_prime, kronecker, ArithError, Factorization};
use crate::factored::FactoredNumber;
use crate::heegner::Discriminant;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GenusError {
    #[error("discriminants {0} and {1} are not coprime")]
    NotCoprime(i64, i64),
    #[error("{0} is not prime")]
    NotPrime(u64),
    #[error("genus character undefined at {p}: ({d1}/{p}) = {k1} but ({d2}/{p}) = {k2}")]
    IllDefined {
        p: u64,
        d1: i64,
        d2: i64,
        k1: i8,
        k2: i8,
    },
    #[error(transparent)]
    Arith(#[from] ArithError),
}

/// An ordered pair of coprime discriminants with a memoized genus character.
#[derive(Debug)]
pub struct DiscriminantPair {
    d1: Discriminant,
    d2: Discriminant,
    cache: RwLock<HashMap<u64, i8>>,
}

impl Clone for DiscriminantPair {
    fn clone(&self) -> Self {
        DiscriminantPair {
            d1: self.d1,
            d2: self.d2,
            cache: RwLock::new(self.cache.read().expect("epsilon cache poisoned").clone()),
        }
    }
}

impl PartialEq for DiscriminantPair {
    fn eq(&self, other: &Self) -> bool {
        self.d1 == other.d1 && self.d2 == other.d2
    }
}

impl Eq for DiscriminantPair {}

impl DiscriminantPair {
    pub fn new(d1: Discriminant, d2: Discriminant) -> Result<Self, GenusError> {
        if d1.value().gcd(&d2.value()) != 1 {
            return Err(GenusError::NotCoprime(d1.value(), d2.value()));
        }
        Ok(DiscriminantPair {
            d1,
            d2,
            cache: RwLock::new(HashMap::new()),
        })
    }

    pub fn d1(&self) -> &Discriminant {
        &self.d1
    }

    pub fn d2(&self) -> &Discriminant {
        &self.d2
    }

    /// `d1 * d2`, always positive.
    pub fn product(&self) -> u64 {
        self.d1.abs() * self.d2.abs()
    }

    /// `epsilon(p)` for a prime `p`.
    pub fn epsilon_prime(&self, p: u64) -> Result<i8, GenusError> {
        if let Some(&e) = self.cache.read().expect("epsilon cache poisoned").get(&p) {
            return Ok(e);
        }
        if !is_prime(p) {
            return Err(GenusError::NotPrime(p));
        }
        let (a, b) = (self.d1.value(), self.d2.value());
        let pi = p as i64;
        let e = if a % pi != 0 {
            let k1 = kronecker(a, pi);
            if b % pi != 0 {
                let k2 = kronecker(b, pi);
                if k1 != k2 {
                    return Err(GenusError::IllDefined {
                        p,
                        d1: a,
                        d2: b,
                        k1,
                        k2,
                    });
                }
            }
            k1
        } else {
            kronecker(b, pi)
        };
        debug_assert!(e == 1 || e == -1);
        self.cache
            .write()
            .expect("epsilon cache poisoned")
            .insert(p, e);
        Ok(e)
    }

    /// Multiplicative extension of [`epsilon_prime`](Self::epsilon_prime); `epsilon(1) = 1`.
    pub fn epsilon(&self, n: u64) -> Result<i8, GenusError> {
        self.epsilon_of(&factorize(n)?)
    }

    fn epsilon_of(&self, f: &Factorization) -> Result<i8, GenusError> {
        let mut sign = 1i8;
        for &(p, e) in f.factors() {
            if e % 2 == 1 {
                sign *= self.epsilon_prime(p)?;
            }
        }
        Ok(sign)
    }

    /// Primes dividing `m` to odd order with `epsilon(p) = -1`.
    pub fn diff_set(&self, m: u64) -> Result<BTreeSet<u64>, GenusError> {
        self.diff_of(&factorize(m)?)
    }

    fn diff_of(&self, f: &Factorization) -> Result<BTreeSet<u64>, GenusError> {
        let mut out = BTreeSet::new();
        for &(p, e) in f.factors() {
            if self.epsilon_prime(p)? == -1 && e % 2 == 1 {
                out.insert(p);
            }
        }
        Ok(out)
    }

    /// `sum_{d d' = m} epsilon(d') log d`, by direct enumeration of divisors.
    pub fn gz_divisor_sum(&self, m: u64) -> Result<FactoredNumber, GenusError> {
        let f = factorize(m)?;
        let eps = f
            .factors()
            .iter()
            .map(|&(p, _)| self.epsilon_prime(p))
            .collect::<Result<Vec<_>, _>>()?;
        let exps: Vec<u32> = f.factors().iter().map(|&(_, e)| e).collect();
        let mut totals = vec![0i64; exps.len()];
        // Walk every exponent vector b <= exps; d = prod p^b, d' = m/d.
        let mut b = vec![0u32; exps.len()];
        loop {
            let sign: i64 = b
                .iter()
                .zip(&exps)
                .zip(&eps)
                .map(|((&bi, &ai), &e)| if (ai - bi) % 2 == 1 { i64::from(e) } else { 1 })
                .product();
            for (t, &bi) in totals.iter_mut().zip(&b) {
                *t += sign * i64::from(bi);
            }
            let mut i = 0;
            loop {
                if i == b.len() {
                    let mut out = FactoredNumber::one();
                    for (&(p, _), &t) in f.factors().iter().zip(&totals) {
                        out.add_exponent(p, Rational64::from_integer(t));
                    }
                    return Ok(out);
                }
                if b[i] < exps[i] {
                    b[i] += 1;
                    break;
                }
                b[i] = 0;
                i += 1;
            }
        }
    }

    /// Closed form of the divisor sum: when `diff(m) = {q}`,
    /// `q ^ (1/2 (ord_q m + 1) prod_{epsilon(p) = +1} (ord_p m + 1))`; otherwise 1.
    ///
    /// Agrees with [`gz_divisor_sum`](Self::gz_divisor_sum) whenever
    /// `epsilon(m) = -1`, in particular for every `m` in an `S`-set.
    pub fn gz_closed_form(&self, m: u64) -> Result<FactoredNumber, GenusError> {
        let f = factorize(m)?;
        let diff = self.diff_of(&f)?;
        let mut out = FactoredNumber::one();
        if diff.len() != 1 {
            return Ok(out);
        }
        let q = *diff.first().unwrap();
        let mut mult = Rational64::new(i64::from(f.exponent(q)) + 1, 2);
        for &(p, e) in f.factors() {
            if self.epsilon_prime(p)? == 1 {
                mult *= Rational64::from_integer(i64::from(e) + 1);
            }
        }
        out.add_exponent(q, mult);
        Ok(out)
    }
}
