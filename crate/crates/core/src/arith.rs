//! Exact integer primitives: factorization, divisors, valuations and the
//! Kronecker symbol.
//!
//! Everything here works on machine integers. Inputs to [`factorize`] and
//! [`divisors`] are bounded by [`FACTOR_LIMIT`] so that no intermediate value
//! can overflow a `u64`.

use std::fmt;

use num_prime::nt_funcs::{factorize64, is_prime64};
use thiserror::Error;

/// Exclusive upper bound (2^62) on integers accepted by [`factorize`].
pub const FACTOR_LIMIT: u64 = 1 << 62;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ArithError {
    #[error("{0} is outside the supported range 1 <= n < 2^62")]
    OutOfRange(u64),
}

/// A positive integer together with its prime factorization.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Factorization {
    value: u64,
    factors: Vec<(u64, u32)>,
}

impl Factorization {
    pub fn value(&self) -> u64 {
        self.value
    }

    /// `(prime, exponent)` pairs with strictly increasing primes.
    pub fn factors(&self) -> &[(u64, u32)] {
        &self.factors
    }

    pub fn primes(&self) -> impl Iterator<Item = u64> + '_ {
        self.factors.iter().map(|&(p, _)| p)
    }

    /// Exponent of `p`, zero when `p` does not divide the value.
    pub fn exponent(&self, p: u64) -> u32 {
        self.factors
            .iter()
            .find(|&&(q, _)| q == p)
            .map_or(0, |&(_, e)| e)
    }

    /// Number of positive divisors, `prod (e_i + 1)`.
    pub fn divisor_count(&self) -> u64 {
        self.factors
            .iter()
            .map(|&(_, e)| u64::from(e) + 1)
            .product()
    }

    /// Multiplies the factors back together.
    pub fn product(&self) -> u64 {
        self.factors.iter().map(|&(p, e)| p.pow(e)).product()
    }

    /// All positive divisors in ascending order.
    pub fn divisors(&self) -> Vec<u64> {
        let mut out = vec![1u64];
        for &(p, e) in &self.factors {
            let len = out.len();
            let mut pk = 1u64;
            for _ in 0..e {
                pk *= p;
                for i in 0..len {
                    out.push(out[i] * pk);
                }
            }
        }
        out.sort_unstable();
        out
    }
}

impl fmt::Display for Factorization {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.factors.is_empty() {
            return write!(f, "1");
        }
        for (i, (p, e)) in self.factors.iter().enumerate() {
            if i > 0 {
                write!(f, "*")?;
            }
            write!(f, "{p}^{e}")?;
        }
        Ok(())
    }
}

fn check_range(n: u64) -> Result<(), ArithError> {
    if n == 0 || n >= FACTOR_LIMIT {
        Err(ArithError::OutOfRange(n))
    } else {
        Ok(())
    }
}

pub fn factorize(n: u64) -> Result<Factorization, ArithError> {
    check_range(n)?;
    let factors = factorize64(n)
        .into_iter()
        .map(|(p, e)| (p, e as u32))
        .collect();
    Ok(Factorization { value: n, factors })
}

/// Ascending list of the positive divisors of `n`.
pub fn divisors(n: u64) -> Result<Vec<u64>, ArithError> {
    Ok(factorize(n)?.divisors())
}

pub fn is_prime(n: u64) -> bool {
    is_prime64(n)
}

/// `ord_p(n)` for `n != 0`. Returns `u32::MAX` for `n == 0`.
pub fn valuation(n: i128, p: u64) -> u32 {
    debug_assert!(p >= 2);
    if n == 0 {
        return u32::MAX;
    }
    let p = i128::from(p);
    let mut n = n;
    let mut v = 0;
    while n % p == 0 {
        n /= p;
        v += 1;
    }
    v
}

/// Integer square root, `floor(sqrt(n))`.
pub fn isqrt(n: u64) -> u64 {
    if n < 2 {
        return n;
    }
    let mut r = (n as f64).sqrt() as u64;
    while r.checked_mul(r).is_none_or(|sq| sq > n) {
        r -= 1;
    }
    while (r + 1).checked_mul(r + 1).is_some_and(|sq| sq <= n) {
        r += 1;
    }
    r
}

pub fn is_square(n: u64) -> bool {
    let r = isqrt(n);
    r * r == n
}

/// Kronecker symbol `(a / n)` with the standard conventions:
/// `(a/0) = 1` iff `|a| = 1`; `(a/-1) = -1` iff `a < 0`;
/// `(a/2) = 0` for even `a`, `+1` for `a = ±1 mod 8`, `-1` for `a = ±3 mod 8`.
pub fn kronecker(a: i64, n: i64) -> i8 {
    if n == 0 {
        return i8::from(a == 1 || a == -1);
    }
    let mut result: i8 = 1;
    let mut n = i128::from(n);
    if n < 0 {
        n = -n;
        if a < 0 {
            result = -result;
        }
    }
    let twos = n.trailing_zeros();
    if twos > 0 {
        if a % 2 == 0 {
            return 0;
        }
        n >>= twos;
        if twos % 2 == 1 && matches!(a.rem_euclid(8), 3 | 5) {
            result = -result;
        }
    }
    // Jacobi symbol for odd n > 0.
    let mut a = i128::from(a).rem_euclid(n);
    while a != 0 {
        let tz = a.trailing_zeros();
        a >>= tz;
        if tz % 2 == 1 && matches!(n % 8, 3 | 5) {
            result = -result;
        }
        if a % 4 == 3 && n % 4 == 3 {
            result = -result;
        }
        std::mem::swap(&mut a, &mut n);
        a %= n;
    }
    if n == 1 {
        result
    } else {
        0
    }
}
