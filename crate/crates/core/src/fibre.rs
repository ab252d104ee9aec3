//! Supersingular data in characteristic `p` and the number of components of
//! the geometric special fibre of `X_ns^+(p^n)`.

use num_rational::Ratio;
use serde::Serialize;
use thiserror::Error;

use crate::arith::{is_prime, FACTOR_LIMIT};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FibreError {
    #[error("{0} is not prime")]
    NotPrime(u64),
    #[error("p = {0} is not supported; the formulas need p >= 5")]
    SmallPrime(u64),
    #[error("n must be at least 1")]
    ZeroExponent,
    #[error("{p}^(2*{n}-2) does not fit in 62 bits")]
    Overflow { p: u64, n: u32 },
}

/// Supersingular j-invariants in characteristic `p`, grouped by `|Aut(E)|`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SupersingularProfile {
    pub p: u64,
    pub count: u64,
    /// `(aut_order, multiplicity)`, sorted by descending `aut_order`, zero
    /// multiplicities omitted.
    pub aut_multiset: Vec<(u32, u64)>,
}

impl SupersingularProfile {
    /// `sum multiplicity / aut_order`; equals `(p - 1) / 24`.
    pub fn mass(&self) -> Ratio<i128> {
        self.aut_multiset
            .iter()
            .map(|&(aut, mult)| Ratio::new(i128::from(mult), i128::from(aut)))
            .sum()
    }
}

fn check_prime(p: u64) -> Result<(), FibreError> {
    if !is_prime(p) {
        return Err(FibreError::NotPrime(p));
    }
    if p < 5 {
        return Err(FibreError::SmallPrime(p));
    }
    Ok(())
}

pub fn supersingular_profile(p: u64) -> Result<SupersingularProfile, FibreError> {
    check_prime(p)?;
    let count = p / 12
        + match p % 12 {
            1 => 0,
            5 | 7 => 1,
            _ => 2,
        };
    // j = 0 is supersingular iff p = 2 mod 3; j = 1728 iff p = 3 mod 4.
    let six = u64::from(p % 3 == 2);
    let four = u64::from(p % 4 == 3);
    let aut_multiset = [(6, six), (4, four), (2, count - six - four)]
        .into_iter()
        .filter(|&(_, mult)| mult > 0)
        .collect();
    Ok(SupersingularProfile {
        p,
        count,
        aut_multiset,
    })
}

/// `sum_E 1 + 2 (p^(2n-2) - 1) / |Aut(E)|` over supersingular `E`.
pub fn component_count(p: u64, n: u32) -> Result<u64, FibreError> {
    if n == 0 {
        return Err(FibreError::ZeroExponent);
    }
    let profile = supersingular_profile(p)?;
    let big = p
        .checked_pow(2 * n - 2)
        .filter(|&v| v < FACTOR_LIMIT)
        .ok_or(FibreError::Overflow { p, n })?;
    let orbit_extra = 2 * (i128::from(big) - 1);
    let total: Ratio<i128> = profile
        .aut_multiset
        .iter()
        .map(|&(aut, mult)| {
            Ratio::from_integer(i128::from(mult))
                * (Ratio::from_integer(1) + Ratio::new(orbit_extra, i128::from(aut)))
        })
        .sum();
    assert!(
        total.is_integer(),
        "component count {total} is not integral"
    );
    u64::try_from(total.to_integer()).map_err(|_| FibreError::Overflow { p, n })
}
