//! Integral models of the projective line over `Z_q` and intersection
//! multiplicities of rational points in them.
//!
//! A model is a homothety class of rank-2 `Z_q`-lattices, i.e. a vertex of the
//! Bruhat–Tits tree. Each class has a unique representative `L` with
//! `q^K Z^2 ⊂ L ⊂ Z^2` and `L ⊄ qZ^2`; [`BTVertex`] stores the Hermite normal
//! form of that representative, so equal classes compare equal.
//!
//! Points are given with integer homogeneous coordinates. A `q`-adic point must
//! be truncated by the caller; a precision of more than
//! `2 (m + max pairwise multiplicity)` digits is enough for
//! [`find_model_vertex`].

use std::collections::{HashSet, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::arith::{is_prime, valuation};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PadicError {
    #[error("(0 : 0) is not a point of P^1")]
    ZeroPoint,
    #[error("{0} is not prime")]
    NotPrime(u64),
    #[error("the points {0} and {1} coincide; their multiplicity is infinite")]
    SamePoint(P1Point, P1Point),
    #[error("vertex is defined over q = {vertex}, not q = {requested}")]
    PrimeMismatch { vertex: u64, requested: u64 },
    #[error("generators do not span a rank-2 lattice")]
    Degenerate,
    #[error("matrix {0:?} is not invertible over Z")]
    NotUnimodular([[i64; 2]; 2]),
    #[error("intermediate value exceeds 128 bits")]
    Overflow,
}

type Vec2 = (i128, i128);

fn ck(v: Option<i128>) -> Result<i128, PadicError> {
    v.ok_or(PadicError::Overflow)
}

fn det(u: Vec2, v: Vec2) -> Result<i128, PadicError> {
    ck(ck(u.0.checked_mul(v.1))?.checked_sub(ck(u.1.checked_mul(v.0))?))
}

fn qpow(q: u64, e: u32) -> Result<i128, PadicError> {
    ck(i128::from(q).checked_pow(e))
}

fn scale(k: i128, v: Vec2) -> Result<Vec2, PadicError> {
    Ok((ck(k.checked_mul(v.0))?, ck(k.checked_mul(v.1))?))
}

/// `ord_q` of the content of `v`; `u32::MAX` for the zero vector.
fn content_val(v: Vec2, q: u64) -> u32 {
    valuation(v.0, q).min(valuation(v.1, q))
}

/// Extended gcd: `(g, s, t)` with `s a + t b = g >= 0`.
fn ext_gcd(a: i128, b: i128) -> (i128, i128, i128) {
    let (mut r0, mut r1) = (a, b);
    let (mut s0, mut s1) = (1i128, 0i128);
    let (mut t0, mut t1) = (0i128, 1i128);
    while r1 != 0 {
        let k = r0 / r1;
        (r0, r1) = (r1, r0 - k * r1);
        (s0, s1) = (s1, s0 - k * s1);
        (t0, t1) = (t1, t0 - k * t1);
    }
    if r0 < 0 {
        (-r0, -s0, -t0)
    } else {
        (r0, s0, t0)
    }
}

/// A point `(a : b)` of `P^1(Q)` with a primitive integer representative whose
/// first nonzero coordinate is positive.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "[i64; 2]", into = "[i64; 2]")]
pub struct P1Point {
    a: i64,
    b: i64,
}

impl P1Point {
    pub fn a(&self) -> i64 {
        self.a
    }

    pub fn b(&self) -> i64 {
        self.b
    }

    fn vec(&self) -> Vec2 {
        (i128::from(self.a), i128::from(self.b))
    }
}

impl TryFrom<[i64; 2]> for P1Point {
    type Error = PadicError;

    fn try_from(v: [i64; 2]) -> Result<Self, PadicError> {
        p1_normalize(v[0], v[1])
    }
}

impl From<P1Point> for [i64; 2] {
    fn from(p: P1Point) -> Self {
        [p.a, p.b]
    }
}

impl fmt::Display for P1Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({} : {})", self.a, self.b)
    }
}

pub fn p1_normalize(a: i64, b: i64) -> Result<P1Point, PadicError> {
    if a == 0 && b == 0 {
        return Err(PadicError::ZeroPoint);
    }
    let g = ext_gcd(i128::from(a), i128::from(b)).0;
    let (mut a, mut b) = (i128::from(a) / g, i128::from(b) / g);
    if a < 0 || (a == 0 && b < 0) {
        (a, b) = (-a, -b);
    }
    // After division by the gcd both fit in i64 unless the input was
    // (i64::MIN, 0) or (0, i64::MIN), which normalize to 1.
    Ok(P1Point {
        a: a as i64,
        b: b as i64,
    })
}

/// A vertex of the Bruhat–Tits tree of `PGL_2(Q_q)`.
///
/// The lattice is spanned by the columns of `[[q^a, c], [0, q^b]]` with
/// `0 <= c < q^a`, and is not contained in `qZ^2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct BTVertex {
    q: u64,
    a: u32,
    b: u32,
    c: i128,
}

impl BTVertex {
    /// The class of `Z_q^2`.
    pub fn standard(q: u64) -> Result<Self, PadicError> {
        if !is_prime(q) {
            return Err(PadicError::NotPrime(q));
        }
        Ok(BTVertex {
            q,
            a: 0,
            b: 0,
            c: 0,
        })
    }

    /// The class of the `Z_q`-span of `gens` (integer vectors spanning a
    /// rank-2 lattice).
    pub fn from_generators(q: u64, gens: &[(i128, i128)]) -> Result<Self, PadicError> {
        if !is_prime(q) {
            return Err(PadicError::NotPrime(q));
        }
        let (h11, h12, h22) = hermite(gens)?;
        let k = valuation(ck(h11.checked_mul(h22))?, q);
        let qk = qpow(q, k)?;
        // Adding q^K Z^2 does not change the q-adic completion but removes
        // every prime other than q from the index.
        let (h11, h12, h22) = hermite(&[(h11, 0), (h12, h22), (qk, 0), (0, qk)])?;
        let (mut a, mut b) = (valuation(h11, q), valuation(h22, q));
        let mut c = h12;
        let qi = i128::from(q);
        while a > 0 && b > 0 && c % qi == 0 {
            a -= 1;
            b -= 1;
            c /= qi;
        }
        Ok(BTVertex { q, a, b, c })
    }

    pub fn q(&self) -> u64 {
        self.q
    }

    /// Basis columns `[[q^a, c], [0, q^b]]` as rows of the matrix.
    pub fn basis(&self) -> [[i128; 2]; 2] {
        let qi = i128::from(self.q);
        [[qi.pow(self.a), self.c], [0, qi.pow(self.b)]]
    }

    fn columns(&self) -> (Vec2, Vec2) {
        let [[m11, m12], [m21, m22]] = self.basis();
        ((m11, m21), (m12, m22))
    }

    /// `ord_q det` of the basis.
    fn det_val(&self) -> u32 {
        self.a + self.b
    }

    /// `adj(M) v`, i.e. `det(M) M^{-1} v`.
    fn adj_apply(&self, v: Vec2) -> Result<Vec2, PadicError> {
        let [[m11, m12], [_, m22]] = self.basis();
        let x = ck(ck(m22.checked_mul(v.0))?.checked_sub(ck(m12.checked_mul(v.1))?))?;
        let y = ck(m11.checked_mul(v.1))?;
        Ok((x, y))
    }

    /// The `q + 1` adjacent vertices.
    pub fn neighbors(&self) -> Result<Vec<BTVertex>, PadicError> {
        let (m1, m2) = self.columns();
        let qi = i128::from(self.q);
        let qm1 = scale(qi, m1)?;
        let qm2 = scale(qi, m2)?;
        let mut out = Vec::with_capacity(self.q as usize + 1);
        for k in 0..qi {
            let u = (
                ck(m1.0.checked_add(ck(k.checked_mul(m2.0))?))?,
                ck(m1.1.checked_add(ck(k.checked_mul(m2.1))?))?,
            );
            out.push(BTVertex::from_generators(self.q, &[u, qm1, qm2])?);
        }
        out.push(BTVertex::from_generators(self.q, &[m2, qm1, qm2])?);
        Ok(out)
    }

    /// Tree distance to `other`.
    pub fn distance(&self, other: &BTVertex) -> Result<u32, PadicError> {
        if self.q != other.q {
            return Err(PadicError::PrimeMismatch {
                vertex: self.q,
                requested: other.q,
            });
        }
        let (n1, n2) = other.columns();
        let c1 = self.adj_apply(n1)?;
        let c2 = self.adj_apply(n2)?;
        let dv = valuation(det(c1, c2)?, self.q);
        let min = content_val(c1, self.q).min(content_val(c2, self.q));
        Ok(dv - 2 * min)
    }

    /// Image under `g` in `GL_2(Z)`.
    pub fn transform(&self, g: [[i64; 2]; 2]) -> Result<BTVertex, PadicError> {
        check_unimodular(g)?;
        let (m1, m2) = self.columns();
        BTVertex::from_generators(self.q, &[apply(g, m1)?, apply(g, m2)?])
    }
}

impl fmt::Display for BTVertex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let [[m11, m12], [m21, m22]] = self.basis();
        write!(f, "[[{m11}, {m12}], [{m21}, {m22}]] over Z_{}", self.q)
    }
}

fn check_unimodular(g: [[i64; 2]; 2]) -> Result<(), PadicError> {
    let d = i128::from(g[0][0]) * i128::from(g[1][1]) - i128::from(g[0][1]) * i128::from(g[1][0]);
    if d == 1 || d == -1 {
        Ok(())
    } else {
        Err(PadicError::NotUnimodular(g))
    }
}

fn apply(g: [[i64; 2]; 2], v: Vec2) -> Result<Vec2, PadicError> {
    let row = |r: [i64; 2]| -> Result<i128, PadicError> {
        ck(ck(i128::from(r[0]).checked_mul(v.0))?
            .checked_add(ck(i128::from(r[1]).checked_mul(v.1))?))
    };
    Ok((row(g[0])?, row(g[1])?))
}

/// Image of a point under `g` in `GL_2(Z)`.
pub fn transform_point(g: [[i64; 2]; 2], x: &P1Point) -> Result<P1Point, PadicError> {
    check_unimodular(g)?;
    let (a, b) = apply(g, x.vec())?;
    let g = ext_gcd(a, b).0;
    let (a, b) = (a / g, b / g);
    let a = i64::try_from(a).map_err(|_| PadicError::Overflow)?;
    let b = i64::try_from(b).map_err(|_| PadicError::Overflow)?;
    p1_normalize(a, b)
}

/// Column Hermite normal form `(h11, h12, h22)` of the integer lattice spanned
/// by `gens`: basis `(h11, 0), (h12, h22)` with `h11, h22 > 0` and
/// `0 <= h12 < h11`.
fn hermite(gens: &[Vec2]) -> Result<(i128, i128, i128), PadicError> {
    // The second coordinates generate h22 Z; pick a lattice vector realising it.
    let mut pivot: Vec2 = (0, 0);
    for &v in gens {
        let (g, s, t) = ext_gcd(pivot.1, v.1);
        if g == 0 {
            continue;
        }
        let x = ck(ck(s.checked_mul(pivot.0))?.checked_add(ck(t.checked_mul(v.0))?))?;
        pivot = (x, g);
    }
    let h22 = pivot.1;
    if h22 == 0 {
        return Err(PadicError::Degenerate);
    }
    let mut h11 = 0i128;
    for &v in gens {
        let k = v.1 / h22;
        let x = ck(v.0.checked_sub(ck(k.checked_mul(pivot.0))?))?;
        h11 = ext_gcd(h11, x).0;
    }
    if h11 == 0 {
        return Err(PadicError::Degenerate);
    }
    Ok((h11, pivot.0.rem_euclid(h11), h22))
}

/// Intersection multiplicity of the sections through `x` and `y` in the model
/// given by `v`: the tree distance from `v` to the geodesic joining the ends
/// `x` and `y`.
pub fn p1_mult_in_model(x: &P1Point, y: &P1Point, v: &BTVertex, q: u64) -> Result<u32, PadicError> {
    if v.q != q {
        return Err(PadicError::PrimeMismatch {
            vertex: v.q,
            requested: q,
        });
    }
    if x == y {
        return Err(PadicError::SamePoint(*x, *y));
    }
    let d = det(x.vec(), y.vec())?;
    let cx = content_val(v.adj_apply(x.vec())?, q);
    let cy = content_val(v.adj_apply(y.vec())?, q);
    Ok(v.det_val() + valuation(d, q) - cx - cy)
}

/// The unique vertex at which `x` and `z`, and `y` and `z`, do not meet while
/// `x` and `y` meet with multiplicity `m`.
///
/// The vertex lies on the ray from the branch point of `x, y, z` towards `z`,
/// at distance `m`. The result is re-checked with [`p1_mult_in_model`].
pub fn find_model_vertex(
    x: &P1Point,
    y: &P1Point,
    z: &P1Point,
    m: u32,
    q: u64,
) -> Result<BTVertex, PadicError> {
    if !is_prime(q) {
        return Err(PadicError::NotPrime(q));
    }
    for (u, w) in [(x, y), (x, z), (y, z)] {
        if u == w {
            return Err(PadicError::SamePoint(*u, *w));
        }
    }
    // z = (A/D) x + (B/D) y.
    let vd = valuation(det(x.vec(), y.vec())?, q) as i64;
    let va = valuation(det(z.vec(), y.vec())?, q) as i64;
    let vb = valuation(det(x.vec(), z.vec())?, q) as i64;
    let mi = i64::from(m);
    let exps = [vd - va, mi, mi + vb - va];
    let shift = -exps.iter().copied().min().unwrap_or(0).min(0);
    let e = |k: i64| {
        qpow(
            q,
            u32::try_from(k + shift).map_err(|_| PadicError::Overflow)?,
        )
    };
    let gens = [
        scale(e(exps[0])?, z.vec())?,
        scale(e(exps[1])?, x.vec())?,
        scale(e(exps[2])?, y.vec())?,
    ];
    let v = BTVertex::from_generators(q, &gens)?;
    debug_assert_eq!(p1_mult_in_model(x, z, &v, q), Ok(0));
    debug_assert_eq!(p1_mult_in_model(y, z, &v, q), Ok(0));
    debug_assert_eq!(p1_mult_in_model(x, y, &v, q), Ok(m));
    Ok(v)
}

/// Every vertex within distance `r` of the standard vertex.
pub fn vertices_within(q: u64, r: u32) -> Result<Vec<BTVertex>, PadicError> {
    let start = BTVertex::standard(q)?;
    let mut seen = HashSet::from([start]);
    let mut out = vec![start];
    let mut queue = VecDeque::from([(start, 0u32)]);
    while let Some((v, d)) = queue.pop_front() {
        if d == r {
            continue;
        }
        for w in v.neighbors()? {
            if seen.insert(w) {
                out.push(w);
                queue.push_back((w, d + 1));
            }
        }
    }
    Ok(out)
}

/// One request of a batch points file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelQuery {
    pub q: u64,
    pub x: P1Point,
    pub y: P1Point,
    pub z: P1Point,
    pub m: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelAnswer {
    #[serde(flatten)]
    pub query: ModelQuery,
    /// Basis matrix of the vertex as decimal strings (entries may exceed 64 bits).
    pub basis: Option<[[String; 2]; 2]>,
    pub error: Option<String>,
}

pub fn solve_query(query: &ModelQuery) -> ModelAnswer {
    match find_model_vertex(&query.x, &query.y, &query.z, query.m, query.q) {
        Ok(v) => ModelAnswer {
            query: query.clone(),
            basis: Some(v.basis().map(|row| row.map(|e| e.to_string()))),
            error: None,
        },
        Err(e) => ModelAnswer {
            query: query.clone(),
            basis: None,
            error: Some(e.to_string()),
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn pt(a: i64, b: i64) -> P1Point {
        p1_normalize(a, b).unwrap()
    }

    fn diag(q: u64, a: u32, b: u32) -> BTVertex {
        let qi = i128::from(q);
        BTVertex::from_generators(q, &[(qi.pow(a), 0), (0, qi.pow(b))]).unwrap()
    }

    #[test]
    fn normalize_examples() {
        assert_eq!(pt(0, 5), pt(0, 1));
        assert_eq!((pt(0, 5).a(), pt(0, 5).b()), (0, 1));
        assert_eq!((pt(-4, 6).a(), pt(-4, 6).b()), (2, -3));
        assert_eq!((pt(12, 0).a(), pt(12, 0).b()), (1, 0));
        assert_eq!((pt(0, -7).a(), pt(0, -7).b()), (0, 1));
        assert_eq!(p1_normalize(0, 0), Err(PadicError::ZeroPoint));
        assert_eq!(pt(i64::MIN, 0), pt(1, 0));
    }

    #[test]
    fn hermite_is_canonical() {
        // Same lattice, different generators.
        assert_eq!(hermite(&[(2, 0), (0, 1)]).unwrap(), (2, 0, 1));
        assert_eq!(hermite(&[(0, 1), (2, 1)]).unwrap(), (2, 0, 1));
        assert_eq!(hermite(&[(3, 1), (1, 1)]).unwrap(), (2, 1, 1));
        assert_eq!(hermite(&[(1, 2), (2, 4)]), Err(PadicError::Degenerate));
        assert_eq!(diag(2, 1, 1), BTVertex::standard(2).unwrap());
        assert_eq!(diag(3, 0, 2), diag(3, 1, 3));
        assert_eq!(
            BTVertex::from_generators(2, &[(0, 1), (2, 1)]).unwrap(),
            diag(2, 1, 0)
        );
        // Index 3 is invisible over Z_2.
        assert_eq!(
            BTVertex::from_generators(2, &[(3, 0), (0, 1)]).unwrap(),
            BTVertex::standard(2).unwrap()
        );
    }

    #[test]
    fn mult_examples() {
        for q in [2u64, 3, 5, 7] {
            let std = BTVertex::standard(q).unwrap();
            let qi = q as i64;
            assert_eq!(p1_mult_in_model(&pt(0, 1), &pt(qi, 1), &std, q).unwrap(), 1);
            assert_eq!(p1_mult_in_model(&pt(1, 0), &pt(0, 1), &std, q).unwrap(), 0);
            assert_eq!(
                p1_mult_in_model(&pt(1, 1), &pt(1 + qi * qi, 1), &std, q).unwrap(),
                2
            );
        }
        let std = BTVertex::standard(3).unwrap();
        assert!(matches!(
            p1_mult_in_model(&pt(1, 1), &pt(2, 2), &std, 3),
            Err(PadicError::SamePoint(..))
        ));
        assert!(matches!(
            p1_mult_in_model(&pt(1, 1), &pt(2, 1), &std, 2),
            Err(PadicError::PrimeMismatch { .. })
        ));
    }

    #[test]
    fn neighbors_are_adjacent_and_distinct() {
        for q in [2u64, 3, 5] {
            let v = diag(q, 2, 0);
            let ns = v.neighbors().unwrap();
            assert_eq!(ns.len(), q as usize + 1);
            let set: HashSet<_> = ns.iter().collect();
            assert_eq!(set.len(), ns.len());
            for w in &ns {
                assert_eq!(v.distance(w).unwrap(), 1);
                assert!(w.neighbors().unwrap().contains(&v));
            }
        }
    }

    #[test]
    fn ball_sizes() {
        for q in [2u64, 3, 5] {
            for r in 0..4u32 {
                let expected = 1 + (q + 1) * (q.pow(r) - 1) / (q - 1);
                let ball = vertices_within(q, r).unwrap();
                assert_eq!(ball.len() as u64, expected, "q = {q}, r = {r}");
                let std = BTVertex::standard(q).unwrap();
                assert!(ball.iter().all(|v| std.distance(v).unwrap() <= r));
            }
        }
    }

    #[test]
    fn find_model_examples() {
        for q in [2u64, 3, 5] {
            let qi = q as i64;
            assert_eq!(
                find_model_vertex(&pt(0, 1), &pt(1, 0), &pt(1, 1), 0, q).unwrap(),
                BTVertex::standard(q).unwrap()
            );
            // x and y agree to depth 3 at the standard vertex; m = 1 is two
            // steps from it towards z.
            let v = find_model_vertex(&pt(0, 1), &pt(qi.pow(3), 1), &pt(1, 0), 1, q).unwrap();
            assert_eq!(v, diag(q, 2, 0));
            assert_eq!(
                find_model_vertex(&pt(0, 1), &pt(qi.pow(3), 1), &pt(1, 0), 2, q).unwrap(),
                diag(q, 1, 0)
            );
            assert_eq!(
                find_model_vertex(&pt(0, 1), &pt(qi.pow(3), 1), &pt(1, 0), 3, q).unwrap(),
                BTVertex::standard(q).unwrap()
            );
        }
        // The branch point itself.
        assert_eq!(
            find_model_vertex(&pt(0, 1), &pt(2, 1), &pt(1, 0), 0, 2).unwrap(),
            diag(2, 1, 0)
        );
        assert!(matches!(
            find_model_vertex(&pt(0, 1), &pt(0, 2), &pt(1, 0), 0, 2),
            Err(PadicError::SamePoint(..))
        ));
    }

    #[test]
    fn find_model_matches_exhaustive_search() {
        for q in [2u64, 3] {
            let ball = vertices_within(q, 5).unwrap();
            let (x, y, z) = (pt(0, 1), pt(q as i64, 1), pt(1, 0));
            for m in 0..=3 {
                let hits: Vec<_> = ball
                    .iter()
                    .filter(|v| {
                        p1_mult_in_model(&x, &z, v, q) == Ok(0)
                            && p1_mult_in_model(&y, &z, v, q) == Ok(0)
                            && p1_mult_in_model(&x, &y, v, q) == Ok(m)
                    })
                    .collect();
                assert_eq!(hits, vec![&find_model_vertex(&x, &y, &z, m, q).unwrap()]);
            }
        }
    }

    #[test]
    fn batch_json_shape() {
        let q: ModelQuery =
            serde_json::from_str(r#"{"q": 2, "x": [0, 1], "y": [8, 1], "z": [1, 0], "m": 1}"#)
                .unwrap();
        assert_eq!(q.y, pt(8, 1));
        let ans = solve_query(&q);
        assert_eq!(
            ans.basis,
            Some([["4".into(), "0".into()], ["0".into(), "1".into()]])
        );
        let json = serde_json::to_string(&ans).unwrap();
        assert_eq!(serde_json::from_str::<ModelAnswer>(&json).unwrap(), ans);
        assert!(serde_json::from_str::<ModelQuery>(
            r#"{"q": 2, "x": [0, 0], "y": [8, 1], "z": [1, 0], "m": 1}"#
        )
        .is_err());
    }

    fn arb_point() -> impl Strategy<Value = P1Point> {
        (-60i64..60, -60i64..60)
            .prop_filter("nonzero", |&(a, b)| (a, b) != (0, 0))
            .prop_map(|(a, b)| pt(a, b))
    }

    fn arb_unimodular() -> impl Strategy<Value = [[i64; 2]; 2]> {
        proptest::collection::vec(0usize..4, 0..6).prop_map(|steps| {
            let gens = [
                [[1, 1], [0, 1]],
                [[1, 0], [1, 1]],
                [[0, 1], [1, 0]],
                [[-1, 0], [0, 1]],
            ];
            let mut g = [[1i64, 0], [0, 1]];
            for s in steps {
                let h = gens[s];
                g = [
                    [
                        h[0][0] * g[0][0] + h[0][1] * g[1][0],
                        h[0][0] * g[0][1] + h[0][1] * g[1][1],
                    ],
                    [
                        h[1][0] * g[0][0] + h[1][1] * g[1][0],
                        h[1][0] * g[0][1] + h[1][1] * g[1][1],
                    ],
                ];
            }
            g
        })
    }

    proptest! {
        #[test]
        fn mult_symmetric_and_covariant(
            x in arb_point(), y in arb_point(), g in arb_unimodular(),
            q in prop::sample::select(vec![2u64, 3, 5]), a in 0u32..4, b in 0u32..4, c in 0i128..125,
        ) {
            prop_assume!(x != y);
            let qi = i128::from(q);
            let v = BTVertex::from_generators(q, &[(qi.pow(a), 0), (c, qi.pow(b))]).unwrap();
            let m = p1_mult_in_model(&x, &y, &v, q).unwrap();
            prop_assert_eq!(p1_mult_in_model(&y, &x, &v, q).unwrap(), m);
            let gx = transform_point(g, &x).unwrap();
            let gy = transform_point(g, &y).unwrap();
            let gv = v.transform(g).unwrap();
            prop_assert_eq!(p1_mult_in_model(&gx, &gy, &gv, q).unwrap(), m);
        }

        #[test]
        fn distance_is_a_metric(q in prop::sample::select(vec![2u64, 3]), i in 0usize..200, j in 0usize..200, k in 0usize..200) {
            let ball = vertices_within(q, 3).unwrap();
            let (u, v, w) = (ball[i % ball.len()], ball[j % ball.len()], ball[k % ball.len()]);
            prop_assert_eq!(u.distance(&v).unwrap(), v.distance(&u).unwrap());
            prop_assert_eq!(u.distance(&u).unwrap(), 0);
            prop_assert!(u.distance(&w).unwrap() <= u.distance(&v).unwrap() + v.distance(&w).unwrap());
        }

        #[test]
        fn find_model_postconditions(
            x in arb_point(), y in arb_point(), z in arb_point(),
            q in prop::sample::select(vec![2u64, 3, 5, 7]), m in 0u32..6,
        ) {
            prop_assume!(x != y && y != z && x != z);
            let v = find_model_vertex(&x, &y, &z, m, q).unwrap();
            prop_assert_eq!(p1_mult_in_model(&x, &z, &v, q).unwrap(), 0);
            prop_assert_eq!(p1_mult_in_model(&y, &z, &v, q).unwrap(), 0);
            prop_assert_eq!(p1_mult_in_model(&x, &y, &v, q).unwrap(), m);
        }
    }
}
