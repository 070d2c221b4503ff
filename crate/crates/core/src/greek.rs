//! Generic pre-λ-ring engine.
//!
//! A [`GreekRing`] exposes ring operations plus λ-operations satisfying the
//! addition law `λ^d(x+y) = Σ λ^k(x)·λ^{d−k}(y)`. Every other operation is
//! derived from a letter: if the k-th power of the letter has coefficient
//! `a[k][d]` at degree `d`, then `α^d = Σ_k a[k][d]·λ^k`. Letters are never
//! stored with the ring; λ is the canonical base point.

use crate::error::{Error, Result};
use crate::qform::{lambda_series, pfister, GWElem, GwVal, SquareClass, WittQ};
use crate::series::{Coeff, GreekLetter};
use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};

/// Ring-with-λ contract used by the operation calculus.
pub trait GreekRing {
    type Elem: Clone;

    fn zero(&self) -> Self::Elem;
    fn one(&self) -> Self::Elem;
    fn add(&self, a: &Self::Elem, b: &Self::Elem) -> Self::Elem;
    fn neg(&self, a: &Self::Elem) -> Self::Elem;
    fn mul(&self, a: &Self::Elem, b: &Self::Elem) -> Self::Elem;
    fn eq(&self, a: &Self::Elem, b: &Self::Elem) -> bool;
    fn lambda(&self, d: usize, x: &Self::Elem) -> Self::Elem;

    fn sub(&self, a: &Self::Elem, b: &Self::Elem) -> Self::Elem {
        self.add(a, &self.neg(b))
    }

    /// `n·x` by binary doubling.
    fn int_mul(&self, n: &BigInt, x: &Self::Elem) -> Self::Elem {
        if n.is_negative() {
            return self.neg(&self.int_mul(&-n, x));
        }
        let mut acc = self.zero();
        let mut base = x.clone();
        let mut n = n.clone();
        while !n.is_zero() {
            if n.bit(0) {
                acc = self.add(&acc, &base);
            }
            base = self.add(&base, &base);
            n >>= 1;
        }
        acc
    }
}

/// Binomial coefficient with a BigInt upper index.
pub fn bigint_binom(n: &BigInt, d: u64) -> BigInt {
    let mut num = BigInt::one();
    let mut den = BigInt::one();
    for i in 0..d {
        num *= n - BigInt::from(i);
        den *= BigInt::from(i + 1);
    }
    num / den
}

/// ℤ with its usual λ-ring structure `λ^d(n) = binom(n, d)`.
pub struct ZBinomial;

impl GreekRing for ZBinomial {
    type Elem = BigInt;

    fn zero(&self) -> BigInt {
        BigInt::zero()
    }
    fn one(&self) -> BigInt {
        BigInt::one()
    }
    fn add(&self, a: &BigInt, b: &BigInt) -> BigInt {
        a + b
    }
    fn neg(&self, a: &BigInt) -> BigInt {
        -a
    }
    fn mul(&self, a: &BigInt, b: &BigInt) -> BigInt {
        a * b
    }
    fn eq(&self, a: &BigInt, b: &BigInt) -> bool {
        a == b
    }
    fn lambda(&self, d: usize, x: &BigInt) -> BigInt {
        bigint_binom(x, d as u64)
    }
    fn int_mul(&self, n: &BigInt, x: &BigInt) -> BigInt {
        n * x
    }
}

/// GW(ℚ) element carried through the engine: exact invariant coordinates,
/// plus an explicit representative while one of reasonable size is known
/// (λ needs a representative; equality does not).
#[derive(Clone, Debug)]
pub struct GwElt {
    pub val: GwVal,
    pub gen: Option<GWElem>,
}

// Above this many diagonal entries a representative is dropped; λ is only
// ever applied to inputs, which stay far below the cap.
const GEN_CAP: usize = 1 << 14;

impl GwElt {
    pub fn from_gw(x: &GWElem) -> Self {
        GwElt {
            val: GwVal::from_gw(x),
            gen: Some(x.clone()),
        }
    }

    pub fn from_form_entries(entries: &[SquareClass]) -> Self {
        GwElt::from_gw(&GWElem {
            pos: entries.to_vec(),
            neg: vec![],
        })
    }

    pub fn witt(&self) -> &WittQ {
        &self.val.witt
    }
}

/// The λ-ring GW(ℚ).
pub struct GwRing;

impl GreekRing for GwRing {
    type Elem = GwElt;

    fn zero(&self) -> GwElt {
        GwElt {
            val: GwVal::czero(),
            gen: Some(GWElem::zero()),
        }
    }
    fn one(&self) -> GwElt {
        GwElt {
            val: GwVal::cone(),
            gen: Some(GWElem::one()),
        }
    }
    fn add(&self, a: &GwElt, b: &GwElt) -> GwElt {
        let gen = match (&a.gen, &b.gen) {
            (Some(x), Some(y))
                if x.pos.len() + x.neg.len() + y.pos.len() + y.neg.len() <= GEN_CAP =>
            {
                Some(x.add(y))
            }
            _ => None,
        };
        GwElt {
            val: a.val.cadd(&b.val),
            gen,
        }
    }
    fn neg(&self, a: &GwElt) -> GwElt {
        GwElt {
            val: a.val.cneg(),
            gen: a.gen.as_ref().map(|x| x.neg_elem()),
        }
    }
    fn mul(&self, a: &GwElt, b: &GwElt) -> GwElt {
        let gen = match (&a.gen, &b.gen) {
            (Some(x), Some(y))
                if (x.pos.len() + x.neg.len()) * (y.pos.len() + y.neg.len()) <= GEN_CAP =>
            {
                Some(x.mul(y))
            }
            _ => None,
        };
        GwElt {
            val: a.val.cmul(&b.val),
            gen,
        }
    }
    fn eq(&self, a: &GwElt, b: &GwElt) -> bool {
        a.val == b.val
    }
    fn lambda(&self, d: usize, x: &GwElt) -> GwElt {
        let gen = x
            .gen
            .as_ref()
            .expect("lambda needs an explicit representative");
        let val = lambda_series(gen, d).pop().expect("series has degree d");
        GwElt { val, gen: None }
    }
    fn int_mul(&self, n: &BigInt, x: &GwElt) -> GwElt {
        let gen = x.gen.as_ref().and_then(|g| {
            n.to_string()
                .parse::<i64>()
                .ok()
                .filter(|k| {
                    (g.pos.len() + g.neg.len()).saturating_mul(k.unsigned_abs() as usize)
                        <= GEN_CAP
                })
                .map(|k| g.int_mul(k))
        });
        GwElt {
            val: x.val.int_mul(n),
            gen,
        }
    }
}

/// The α-operation derived from a letter: `α^d = Σ_k a[k][d]·λ^k`, where
/// `a[k][d]` is the coefficient of `t^d` in the k-th power of the letter.
pub fn alpha_op<R: GreekRing>(
    ring: &R,
    letter: &GreekLetter,
    d: usize,
    x: &R::Elem,
) -> Result<R::Elem> {
    if d == 0 {
        return Ok(ring.one());
    }
    let rows = letter.letter_matrix(d)?;
    let row = &rows[d - 1];
    let mut acc = ring.zero();
    for (k, coeff) in row.iter().enumerate() {
        if coeff.is_zero() {
            continue;
        }
        let lam = ring.lambda(k + 1, x);
        acc = ring.add(&acc, &ring.int_mul(coeff, &lam));
    }
    Ok(acc)
}

/// Elementary symmetric polynomial `e_d(xs)` in the ring.
pub fn elementary_symmetric<R: GreekRing>(ring: &R, d: usize, xs: &[R::Elem]) -> R::Elem {
    if d == 0 {
        return ring.one();
    }
    if d > xs.len() {
        return ring.zero();
    }
    // dp[j] = e_j of the prefix
    let mut dp: Vec<R::Elem> = Vec::with_capacity(d + 1);
    dp.push(ring.one());
    for _ in 0..d {
        dp.push(ring.zero());
    }
    for x in xs {
        for j in (1..=d).rev() {
            let t = ring.mul(&dp[j - 1], x);
            dp[j] = ring.add(&dp[j], &t);
        }
    }
    dp.pop().expect("dp has d+1 entries")
}

/// A bounded certificate that an element is an n-fold Pfister element:
/// level 1 is checked directly, higher levels record level-1 factors.
pub struct PfisterCertificate<E> {
    pub level: u32,
    pub bound: usize,
    pub factors: Vec<E>,
}

/// Level-1 Pfister predicate, checked up to the bound: `x² = 2x`,
/// `λ^d(x) = x` for `2 ≤ d ≤ T`, and `π_1^d(x) = 0` for `2 ≤ d ≤ T`.
pub fn is_pfister<R: GreekRing>(ring: &R, x: &R::Elem, bound: usize) -> bool {
    let two_x = ring.add(x, x);
    if !ring.eq(&ring.mul(x, x), &two_x) {
        return false;
    }
    for d in 2..=bound {
        if !ring.eq(&ring.lambda(d, x), x) {
            return false;
        }
    }
    let pi1 = GreekLetter::pi(1, bound);
    let zero = ring.zero();
    for d in 2..=bound {
        let v = alpha_op(ring, &pi1, d, x).expect("bound matches order");
        if !ring.eq(&v, &zero) {
            return false;
        }
    }
    true
}

/// Certifies an n-fold product of level-1 Pfister elements.
pub fn certify_pfister<R: GreekRing>(
    ring: &R,
    factors: &[R::Elem],
    bound: usize,
) -> Option<PfisterCertificate<R::Elem>> {
    for f in factors {
        if !is_pfister(ring, f, bound) {
            return None;
        }
    }
    Some(PfisterCertificate {
        level: factors.len() as u32,
        bound,
        factors: factors.to_vec(),
    })
}

/// Symmetric-sum law for dimension-1 elements: evaluates both
/// `α^d(x_1 + … + x_r)` and `e_d(x_1, …, x_r)` and insists they agree.
pub fn sym_sum_apply<R: GreekRing>(
    ring: &R,
    letter: &GreekLetter,
    d: usize,
    xs: &[R::Elem],
) -> Result<(R::Elem, R::Elem)> {
    let mut sum = ring.zero();
    for x in xs {
        sum = ring.add(&sum, x);
    }
    let via_alpha = alpha_op(ring, letter, d, &sum)?;
    let via_sym = elementary_symmetric(ring, d, xs);
    if !ring.eq(&via_alpha, &via_sym) {
        return Err(Error::Degenerate(
            "symmetric-sum law violated: bad dimension-1 certificate".into(),
        ));
    }
    Ok((via_alpha, via_sym))
}

/// `π_n^d(⟨a⟩·x)` against the closed form
/// `(−1)^d·2^{n(d−1)−1}·(1−⟨a⟩)·x` for an n-fold Pfister element `x`;
/// returns both sides after asserting equality in GW(ℚ).
pub fn pi_scaled_pfister(
    n: u32,
    d: usize,
    a: &SquareClass,
    pfister_classes: &[SquareClass],
    order: usize,
) -> Result<(GwElt, GwElt)> {
    assert!(d >= 2, "closed form holds for d >= 2");
    assert_eq!(pfister_classes.len() as u32, n);
    let ring = GwRing;
    let x = pfister(pfister_classes);
    let scaled = GwElt::from_gw(&x.scale(a));
    let letter = GreekLetter::pi(n, order);
    let lhs = alpha_op(&ring, &letter, d, &scaled)?;
    let one_minus_a = GWElem::one().sub(&GWElem::from_class(a.clone()));
    let mut coeff = BigInt::one() << (n as usize * (d - 1) - 1);
    if d % 2 == 1 {
        coeff = -coeff;
    }
    let rhs = ring.int_mul(&coeff, &GwElt::from_gw(&one_minus_a.mul(&x)));
    if !ring.eq(&lhs, &rhs) {
        return Err(Error::Degenerate(
            "scaled-Pfister closed form failed".into(),
        ));
    }
    Ok((lhs, rhs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qform::{witt_equal, DiagForm};
    use crate::series::Series;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn sq(n: i64) -> SquareClass {
        SquareClass::from_int(n)
    }

    #[test]
    fn z_provider_examples() {
        let ring = ZBinomial;
        // λ³(5) = binom(5,3) = 10
        let v = alpha_op(&ring, &GreekLetter::lambda(8), 3, &BigInt::from(5)).unwrap();
        assert_eq!(v, BigInt::from(10));
        // γ^d(1) = 1 for all d
        for d in 1..=8 {
            let v = alpha_op(&ring, &GreekLetter::gamma(8), d, &BigInt::one()).unwrap();
            assert_eq!(v, BigInt::one(), "d={d}");
        }
        // π_1²(1) = λ²(1) − λ¹(1) = −1
        let v = alpha_op(&ring, &GreekLetter::pi(1, 8), 2, &BigInt::one()).unwrap();
        assert_eq!(v, BigInt::from(-1));
    }

    #[test]
    fn z_provider_addition_law() {
        let ring = ZBinomial;
        for letter in [
            GreekLetter::lambda(6),
            GreekLetter::gamma(6),
            GreekLetter::pi(1, 6),
            GreekLetter::pi(2, 6),
        ] {
            for x in -4i64..=4 {
                for y in -4i64..=4 {
                    for d in 0..=6usize {
                        let lhs = alpha_op(&ring, &letter, d, &BigInt::from(x + y)).unwrap();
                        let mut rhs = BigInt::zero();
                        for k in 0..=d {
                            rhs += alpha_op(&ring, &letter, k, &BigInt::from(x)).unwrap()
                                * alpha_op(&ring, &letter, d - k, &BigInt::from(y)).unwrap();
                        }
                        assert_eq!(lhs, rhs, "letter addition law x={x} y={y} d={d}");
                    }
                }
            }
        }
    }

    fn random_gw(rng: &mut ChaCha8Rng, max_len: usize) -> GWElem {
        let pool = [-1i64, 1, 2, 3, 5, 7, -2, -3, 6];
        let lp = rng.gen_range(0..=max_len);
        let ln = rng.gen_range(0..=max_len / 2 + 1);
        GWElem {
            pos: (0..lp)
                .map(|_| sq(pool[rng.gen_range(0..pool.len())]))
                .collect(),
            neg: (0..ln)
                .map(|_| sq(pool[rng.gen_range(0..pool.len())]))
                .collect(),
        }
    }

    #[test]
    fn gw_addition_law() {
        let ring = GwRing;
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        let letters = [
            GreekLetter::lambda(6),
            GreekLetter::pi(1, 6),
            GreekLetter::pi(2, 6),
            GreekLetter::gamma(6),
        ];
        for _ in 0..12 {
            let x = GwElt::from_gw(&random_gw(&mut rng, 4));
            let y = GwElt::from_gw(&random_gw(&mut rng, 4));
            let xy = ring.add(&x, &y);
            for letter in &letters {
                for d in 0..=5usize {
                    let lhs = alpha_op(&ring, letter, d, &xy).unwrap();
                    let mut rhs = ring.zero();
                    for k in 0..=d {
                        let t = ring.mul(
                            &alpha_op(&ring, letter, k, &x).unwrap(),
                            &alpha_op(&ring, letter, d - k, &y).unwrap(),
                        );
                        rhs = ring.add(&rhs, &t);
                    }
                    assert!(ring.eq(&lhs, &rhs), "gw addition law d={d}");
                }
            }
        }
    }

    #[test]
    fn related_letters_expand() {
        // if α = β∘τ then α^d(x) = Σ_k [t^d](τ^k) · β^k(x)
        let ring = GwRing;
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..8 {
            let mut cs = vec![BigInt::zero(), BigInt::one()];
            for _ in 2..=8 {
                cs.push(BigInt::from(rng.gen_range(-3i64..=3)));
            }
            let tau = GreekLetter::new(Series::new(8, cs)).unwrap();
            let beta = GreekLetter::pi(1, 8);
            let alpha = beta.compose(&tau).unwrap();
            let x = GwElt::from_gw(&random_gw(&mut rng, 3));
            let tau_rows = tau.letter_matrix(8).unwrap();
            for d in 1..=8usize {
                let lhs = alpha_op(&ring, &alpha, d, &x).unwrap();
                let mut rhs = ring.zero();
                for k in 1..=d {
                    let c = &tau_rows[d - 1][k - 1];
                    let bk = alpha_op(&ring, &beta, k, &x).unwrap();
                    rhs = ring.add(&rhs, &ring.int_mul(c, &bk));
                }
                assert!(ring.eq(&lhs, &rhs), "letter relation d={d}");
            }
        }
    }

    #[test]
    fn pfister_predicate() {
        let ring = GwRing;
        // ⟨⟨2⟩⟩ is a 1-Pfister element
        let x = GwElt::from_gw(&pfister(&[sq(2)]));
        assert!(is_pfister(&ring, &x, 8));
        // ⟨1⟩ is not (1·1 ≠ 2)
        let one = ring.one();
        assert!(!is_pfister(&ring, &one, 8));
        // 0 is (the degenerate Pfister ⟨⟨1⟩⟩)
        let zero = ring.zero();
        assert!(is_pfister(&ring, &zero, 8));
        // products certify higher levels
        let f1 = GwElt::from_gw(&pfister(&[sq(2)]));
        let f2 = GwElt::from_gw(&pfister(&[sq(-3)]));
        let cert = certify_pfister(&ring, &[f1, f2], 8).unwrap();
        assert_eq!(cert.level, 2);
    }

    #[test]
    fn pi_n_dimension_one_on_pfister() {
        // an n-Pfister element has π_n-dimension 1: π_n^d vanishes for d ≥ 2
        let ring = GwRing;
        let cases: Vec<(u32, Vec<SquareClass>)> = vec![
            (1, vec![sq(2)]),
            (2, vec![sq(2), sq(-3)]),
            (3, vec![sq(2), sq(3), sq(5)]),
        ];
        for (n, classes) in cases {
            let x = GwElt::from_gw(&pfister(&classes));
            let letter = GreekLetter::pi(n, 8);
            let one = alpha_op(&ring, &letter, 1, &x).unwrap();
            assert!(ring.eq(&one, &x));
            for d in 2..=6 {
                let v = alpha_op(&ring, &letter, d, &x).unwrap();
                assert!(ring.eq(&v, &ring.zero()), "n={n} d={d}");
            }
        }
    }

    #[test]
    fn sym_sum_examples() {
        let ring = GwRing;
        // two 2-Pfister elements: π_2²(φ1+φ2) = φ1·φ2
        let f1 = pfister(&[sq(2), sq(3)]);
        let f2 = pfister(&[sq(5), sq(-1)]);
        let xs = vec![GwElt::from_gw(&f1), GwElt::from_gw(&f2)];
        let letter = GreekLetter::pi(2, 8);
        let (v, _) = sym_sum_apply(&ring, &letter, 2, &xs).unwrap();
        assert!(ring.eq(&v, &GwElt::from_gw(&f1.mul(&f2))));
        // one element, d = 2: zero
        let xs = vec![GwElt::from_gw(&f1)];
        let (v, _) = sym_sum_apply(&ring, &letter, 2, &xs).unwrap();
        assert!(ring.eq(&v, &ring.zero()));
        // empty, any d ≥ 1: zero
        let (v, _) = sym_sum_apply(&ring, &letter, 3, &[]).unwrap();
        assert!(ring.eq(&v, &ring.zero()));
    }

    #[test]
    fn pi_scaled_pfister_examples() {
        // a = 1 forces zero
        let (lhs, _) = pi_scaled_pfister(1, 2, &sq(1), &[sq(2)], 8).unwrap();
        assert!(lhs.val.cis_zero());
        // n=1, d=2, a=−1, x=⟨⟨2⟩⟩: value is ⟨⟨−1,2⟩⟩
        let (lhs, _) = pi_scaled_pfister(1, 2, &sq(-1), &[sq(2)], 8).unwrap();
        let want = pfister(&[sq(-1), sq(2)]);
        assert_eq!(lhs.val.dim, BigInt::zero());
        assert!(lhs.val.witt.eq_witt(&WittQ::from_gw(&want)));
        // n=2, d=2, a=−1, x=⟨⟨2,3⟩⟩ agrees with the direct λ-expansion
        pi_scaled_pfister(2, 2, &sq(-1), &[sq(2), sq(3)], 8).unwrap();
        // a couple of deeper degrees
        pi_scaled_pfister(2, 3, &sq(5), &[sq(2), sq(3)], 10).unwrap();
        pi_scaled_pfister(1, 4, &sq(-2), &[sq(7)], 10).unwrap();
    }

    #[test]
    fn pi_unramified_on_unimodular() {
        use crate::qform::second_residue;
        // second residues of π_n^d(q) vanish for p-unimodular q
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let pool = [-1i64, 1, 2, 7, 11, 14, -7];
        for p in [3u64, 5] {
            for _ in 0..10 {
                let len = 2 * rng.gen_range(1..=3usize);
                let entries: Vec<SquareClass> = (0..len)
                    .map(|_| sq(pool[rng.gen_range(0..pool.len())]))
                    .collect();
                let q = GWElem::from_form(&DiagForm::new(entries));
                for n in 1..=2u32 {
                    for d in 1..=4usize {
                        let direct = alpha_explicit(&GreekLetter::pi(n, 6), d, &q);
                        assert!(
                            second_residue(&direct, p).unwrap().is_zero(),
                            "n={n} d={d} p={p}"
                        );
                    }
                }
            }
        }
    }

    // independent explicit-form route used by the residue test
    fn alpha_explicit(letter: &GreekLetter, d: usize, x: &GWElem) -> GWElem {
        use crate::qform::lambda_form;
        if d == 0 {
            return GWElem::one();
        }
        let rows = letter.letter_matrix(d).unwrap();
        let mut acc = GWElem::zero();
        for (k, c) in rows[d - 1].iter().enumerate() {
            let lam = lambda_form(x, k + 1);
            let k64: i64 = c.to_string().parse().unwrap();
            acc = acc.add(&lam.int_mul(k64));
        }
        acc
    }

    #[test]
    fn sym_sum_matches_over_random_pfisters() {
        let ring = GwRing;
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let pool = [2i64, 3, 5, -1, 7, -2];
        for _ in 0..10 {
            let n = rng.gen_range(1..=2u32);
            let r = rng.gen_range(0..=4usize);
            let xs: Vec<GwElt> = (0..r)
                .map(|_| {
                    let classes: Vec<SquareClass> = (0..n)
                        .map(|_| sq(pool[rng.gen_range(0..pool.len())]))
                        .collect();
                    GwElt::from_gw(&pfister(&classes))
                })
                .collect();
            let letter = GreekLetter::pi(n, 8);
            for d in 1..=r + 2 {
                sym_sum_apply(&ring, &letter, d, &xs).unwrap();
            }
        }
    }

    #[test]
    fn explicit_and_tuple_lambda_agree() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let ring = GwRing;
        for _ in 0..20 {
            let x = random_gw(&mut rng, 5);
            let elt = GwElt::from_gw(&x);
            for d in 0..=4usize {
                let via_ring = ring.lambda(d, &elt);
                let via_explicit = crate::qform::lambda_form(&x, d);
                assert_eq!(via_ring.val.dim, BigInt::from(via_explicit.dim()));
                assert!(via_ring.val.witt.eq_witt(&WittQ::from_gw(&via_explicit)));
            }
        }
        // cross-check a Pfister product with witt_equal
        let a = pfister(&[sq(2)]);
        let b = pfister(&[sq(3)]);
        assert!(witt_equal(&a.mul(&b), &pfister(&[sq(2), sq(3)])));
    }
}
