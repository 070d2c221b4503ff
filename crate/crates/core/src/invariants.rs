//! The `f`/`g` invariant families of the fundamental-ideal filtration and
//! their closed-form identities, evaluated pointwise on concrete elements.
//!
//! `f_n^d` is the degree-`nd` invariant obtained by pushing `π_n^d` through
//! the filtration map; `g_n^d` is the balanced family defined by the shift
//! recursion and computed here through the explicit change of basis. Values
//! land either in the Witt ring (`{−1} = ⟨⟨−1⟩⟩`, `δ = 1`) or in mod-2
//! cohomology (`{−1} = ρ`, `δ = 0`), through one generic pipeline over
//! signed sums of n-fold Pfister forms.

use crate::cohom::{RatCoh, RhoRegime, SymClass, SymCoh};
use crate::error::{Error, Result};
use crate::greek::{alpha_op, GwElt, GwRing};
use crate::qform::{
    lambda_form, pfister, witt_equal, DiagForm, GWElem, SquareClass, WittQ,
};
use crate::series::{binom, multinom3, sign_pow, GreekLetter};
use num_bigint::BigInt;
use num_traits::{One, Zero};
use serde_json::{json, Value};

/// Invariant family selector.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Family {
    /// `f_n^d` (cohomological name `u^{(n)}_{nd}`).
    F,
    /// `g_n^d` (cohomological name `v^{(n)}_{nd}`).
    G,
}

/// Which codomain an invariant evaluation targets.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Codomain {
    Witt,
    Coh,
}

/// An invariant `f_n^d` or `g_n^d` with its codomain.
#[derive(Clone, Copy, Debug)]
pub struct InvariantSpec {
    pub family: Family,
    pub n: u32,
    pub d: usize,
    pub codomain: Codomain,
}

// ---------------------------------------------------------------------------
// Generic codomain contract
// ---------------------------------------------------------------------------

/// Value space for the invariant calculus: a commutative ring containing the
/// classes `{a}` of Pfister forms and the distinguished elements `{−1}` and
/// `δ(A)`.
pub trait InvCodomain {
    type Value: Clone;
    type Entry: Clone;

    fn zero(&self) -> Self::Value;
    fn one(&self) -> Self::Value;
    fn add(&self, a: &Self::Value, b: &Self::Value) -> Self::Value;
    fn neg(&self, a: &Self::Value) -> Self::Value;
    fn mul(&self, a: &Self::Value, b: &Self::Value) -> Self::Value;
    fn eq(&self, a: &Self::Value, b: &Self::Value) -> bool;
    /// The class `{−1}`.
    fn minus_one(&self) -> Self::Value;
    /// The restriction constant `δ(A)`.
    fn delta(&self) -> Self::Value;
    /// Image of an integer.
    fn int(&self, n: &BigInt) -> Self::Value;
    /// `f_n(⟨⟨entries⟩⟩)`, the symbol of a Pfister form (degree = length).
    fn symbol(&self, entries: &[Self::Entry]) -> Self::Value;
    fn entry_mul(&self, a: &Self::Entry, b: &Self::Entry) -> Self::Entry;

    fn sub(&self, a: &Self::Value, b: &Self::Value) -> Self::Value {
        self.add(a, &self.neg(b))
    }

    fn minus_one_pow(&self, e: u32) -> Self::Value {
        let mut acc = self.one();
        let m = self.minus_one();
        for _ in 0..e {
            acc = self.mul(&acc, &m);
        }
        acc
    }
}

/// Witt-ring codomain over ℚ.
pub struct WittCod;

impl InvCodomain for WittCod {
    type Value = WittQ;
    type Entry = SquareClass;

    fn zero(&self) -> WittQ {
        WittQ::zero()
    }
    fn one(&self) -> WittQ {
        WittQ::one()
    }
    fn add(&self, a: &WittQ, b: &WittQ) -> WittQ {
        a.add(b)
    }
    fn neg(&self, a: &WittQ) -> WittQ {
        a.neg()
    }
    fn mul(&self, a: &WittQ, b: &WittQ) -> WittQ {
        a.mul(b)
    }
    fn eq(&self, a: &WittQ, b: &WittQ) -> bool {
        a == b
    }
    fn minus_one(&self) -> WittQ {
        WittQ::from_gw(&pfister(&[SquareClass::minus_one()]))
    }
    fn delta(&self) -> WittQ {
        WittQ::one()
    }
    fn int(&self, n: &BigInt) -> WittQ {
        WittQ::unit_multiple(n)
    }
    fn symbol(&self, entries: &[SquareClass]) -> WittQ {
        WittQ::from_gw(&pfister(entries))
    }
    fn entry_mul(&self, a: &SquareClass, b: &SquareClass) -> SquareClass {
        a.mul(b)
    }
}

/// Rational mod-2 cohomology codomain.
pub struct RatCohCod;

impl InvCodomain for RatCohCod {
    type Value = RatCoh;
    type Entry = SquareClass;

    fn zero(&self) -> RatCoh {
        RatCoh::zero()
    }
    fn one(&self) -> RatCoh {
        RatCoh::one()
    }
    fn add(&self, a: &RatCoh, b: &RatCoh) -> RatCoh {
        a.add(b)
    }
    fn neg(&self, a: &RatCoh) -> RatCoh {
        a.clone()
    }
    fn mul(&self, a: &RatCoh, b: &RatCoh) -> RatCoh {
        a.cup(b)
    }
    fn eq(&self, a: &RatCoh, b: &RatCoh) -> bool {
        a == b
    }
    fn minus_one(&self) -> RatCoh {
        RatCoh::square_class(&SquareClass::minus_one())
    }
    fn delta(&self) -> RatCoh {
        RatCoh::zero()
    }
    fn int(&self, n: &BigInt) -> RatCoh {
        if (n % 2u8).is_zero() {
            RatCoh::zero()
        } else {
            RatCoh::one()
        }
    }
    fn symbol(&self, entries: &[SquareClass]) -> RatCoh {
        RatCoh::symbol(entries)
    }
    fn entry_mul(&self, a: &SquareClass, b: &SquareClass) -> SquareClass {
        a.mul(b)
    }
}

/// Free symbolic cohomology codomain.
pub struct SymCohCod {
    pub regime: RhoRegime,
}

impl InvCodomain for SymCohCod {
    type Value = SymCoh;
    type Entry = SymClass;

    fn zero(&self) -> SymCoh {
        SymCoh::zero(self.regime)
    }
    fn one(&self) -> SymCoh {
        SymCoh::one(self.regime)
    }
    fn add(&self, a: &SymCoh, b: &SymCoh) -> SymCoh {
        a.add(b).expect("uniform regime")
    }
    fn neg(&self, a: &SymCoh) -> SymCoh {
        a.clone()
    }
    fn mul(&self, a: &SymCoh, b: &SymCoh) -> SymCoh {
        a.cup(b).expect("uniform regime")
    }
    fn eq(&self, a: &SymCoh, b: &SymCoh) -> bool {
        a == b
    }
    fn minus_one(&self) -> SymCoh {
        SymCoh::rho(self.regime)
    }
    fn delta(&self) -> SymCoh {
        SymCoh::zero(self.regime)
    }
    fn int(&self, n: &BigInt) -> SymCoh {
        if (n % 2u8).is_zero() {
            SymCoh::zero(self.regime)
        } else {
            SymCoh::one(self.regime)
        }
    }
    fn symbol(&self, entries: &[SymClass]) -> SymCoh {
        SymCoh::symbol(self.regime, entries)
    }
    fn entry_mul(&self, a: &SymClass, b: &SymClass) -> SymClass {
        a.mul(b)
    }
}

// ---------------------------------------------------------------------------
// Signed Pfister sums
// ---------------------------------------------------------------------------

/// An element of `I^n` presented as a signed sum of n-fold Pfister forms.
#[derive(Clone, Debug)]
pub struct PfisterSum<E> {
    pub level: u32,
    pub terms: Vec<(i8, Vec<E>)>,
}

impl<E: Clone> PfisterSum<E> {
    pub fn new(level: u32, terms: Vec<(i8, Vec<E>)>) -> Self {
        for (_, t) in &terms {
            assert_eq!(t.len() as u32, level, "factor count must match level");
        }
        PfisterSum { level, terms }
    }

    pub fn add(&self, rhs: &Self) -> Self {
        assert_eq!(self.level, rhs.level);
        let mut terms = self.terms.clone();
        terms.extend(rhs.terms.iter().cloned());
        PfisterSum {
            level: self.level,
            terms,
        }
    }

    pub fn neg(&self) -> Self {
        PfisterSum {
            level: self.level,
            terms: self.terms.iter().map(|(s, t)| (-s, t.clone())).collect(),
        }
    }
}

impl PfisterSum<SquareClass> {
    /// The represented element of GW(ℚ) (Pfister lifts, dim 0).
    pub fn to_gw(&self) -> GWElem {
        let mut acc = GWElem::zero();
        for (sign, t) in &self.terms {
            let p = pfister(t);
            acc = acc.add(&if *sign < 0 { p.neg_elem() } else { p });
        }
        acc
    }
}

/// `⟨λ⟩·Σ ε_i φ_i` stays a signed Pfister sum of the same level:
/// `⟨λ⟩⟨⟨a_1,…,a_n⟩⟩ = ⟨⟨a_1,…,a_n λ⟩⟩ − ⟨⟨a_1,…,a_{n−1},λ⟩⟩ + ⟨⟨a⃗⟩⟩·[n>1 adjust]`.
///
/// Derived from `⟨⟨a⃗,λ⟩⟩ = ⟨⟨a⃗⟩⟩ − ⟨λ⟩⟨⟨a⃗⟩⟩` together with the slot
/// splitting of the last two entries; exact in GW.
pub fn scale_rep<C: InvCodomain>(
    cod: &C,
    sum: &PfisterSum<C::Entry>,
    lambda: &C::Entry,
) -> PfisterSum<C::Entry> {
    let mut terms = Vec::new();
    for (sign, t) in &sum.terms {
        let n = t.len();
        let mut a = t.clone();
        let last = a[n - 1].clone();
        a[n - 1] = cod.entry_mul(&last, lambda);
        terms.push((*sign, a));
        let mut b = t.clone();
        b[n - 1] = lambda.clone();
        terms.push((-*sign, b));
    }
    PfisterSum {
        level: sum.level,
        terms,
    }
}

/// Rewrites a level-(n+1) sum as a level-n sum via
/// `⟨⟨a⃗,b,c⟩⟩ = ⟨⟨a⃗,b⟩⟩ + ⟨⟨a⃗,c⟩⟩ − ⟨⟨a⃗,bc⟩⟩`.
pub fn expand_down<C: InvCodomain>(
    cod: &C,
    sum: &PfisterSum<C::Entry>,
) -> PfisterSum<C::Entry> {
    assert!(sum.level >= 2, "cannot lower below level 1");
    let mut terms = Vec::new();
    for (sign, t) in &sum.terms {
        let n = t.len();
        let prefix = &t[..n - 2];
        let b = &t[n - 2];
        let c = &t[n - 1];
        let mut t1 = prefix.to_vec();
        t1.push(b.clone());
        terms.push((*sign, t1));
        let mut t2 = prefix.to_vec();
        t2.push(c.clone());
        terms.push((*sign, t2));
        let mut t3 = prefix.to_vec();
        t3.push(cod.entry_mul(b, c));
        terms.push((-*sign, t3));
    }
    PfisterSum {
        level: sum.level - 1,
        terms,
    }
}

/// Values `f_n^0(q), …, f_n^{dmax}(q)` for `q` a signed Pfister sum, via the
/// addition law, the vanishing on single Pfister forms, and the similitude
/// evaluation of `f_n^j(−φ)`.
pub fn f_values<C: InvCodomain>(
    cod: &C,
    sum: &PfisterSum<C::Entry>,
    dmax: usize,
) -> Vec<C::Value> {
    let n = sum.level;
    let mut f: Vec<C::Value> = Vec::with_capacity(dmax + 1);
    f.push(cod.one());
    for _ in 0..dmax {
        f.push(cod.zero());
    }
    for (sign, t) in &sum.terms {
        let sym = cod.symbol(t);
        let mut next = f.clone();
        if *sign >= 0 {
            // f^d(q+φ) = f^d(q) + f_n(φ)·f^{d−1}(q)
            for d in 1..=dmax {
                let t = cod.mul(&sym, &f[d - 1]);
                next[d] = cod.add(&next[d], &t);
            }
        } else {
            // f^j(−φ): −f_n(φ) for j = 1, (−1)^j·{−1}^{n(j−1)}·f_n(φ) for j ≥ 2
            let mut fneg: Vec<C::Value> = vec![cod.zero(); dmax + 1];
            if dmax >= 1 {
                fneg[1] = cod.neg(&sym);
            }
            for (j, slot) in fneg.iter_mut().enumerate().skip(2) {
                let pow = cod.minus_one_pow(n * (j as u32 - 1));
                let mut v = cod.mul(&pow, &sym);
                if j % 2 == 1 {
                    v = cod.neg(&v);
                }
                *slot = v;
            }
            for d in 1..=dmax {
                for j in 1..=d {
                    let t = cod.mul(&fneg[j], &f[d - j]);
                    next[d] = cod.add(&next[d], &t);
                }
            }
        }
        f = next;
    }
    f
}

/// Change of basis `g_n^d = Σ_k binom(⌊(d−1)/2⌋, k−⌊d/2⌋−1)·{−1}^{n(d−k)}·f_n^k`.
pub fn g_from_f_coeff(d: usize, k: usize) -> BigInt {
    if d == 0 || k < d / 2 + 1 || k > d {
        return BigInt::zero();
    }
    binom(((d - 1) / 2) as i64, k as i64 - (d / 2) as i64 - 1)
}

/// Inverse change of basis
/// `f_n^d = Σ_k (−1)^{d−k}·binom(d−⌊(k+1)/2⌋−1, ⌊k/2⌋−1)·{−1}^{n(d−k)}·g_n^k`,
/// with the unitriangular diagonal pinned to 1.
pub fn f_from_g_coeff(d: usize, k: usize) -> BigInt {
    if d == 0 || k > d || k == 0 {
        return BigInt::zero();
    }
    if k == d {
        return BigInt::one();
    }
    sign_pow((d - k) as i64) * binom(d as i64 - ((k + 1) / 2) as i64 - 1, (k / 2) as i64 - 1)
}

/// Values `g_n^0(q), …, g_n^{dmax}(q)` from the f-values.
pub fn g_values<C: InvCodomain>(
    cod: &C,
    sum: &PfisterSum<C::Entry>,
    dmax: usize,
) -> Vec<C::Value> {
    let n = sum.level;
    let f = f_values(cod, sum, dmax);
    let mut g = Vec::with_capacity(dmax + 1);
    g.push(cod.one());
    for d in 1..=dmax {
        let mut acc = cod.zero();
        for (k, fk) in f.iter().enumerate().take(d + 1).skip(1) {
            let c = g_from_f_coeff(d, k);
            if c.is_zero() {
                continue;
            }
            let pow = cod.minus_one_pow(n * (d - k) as u32);
            let term = cod.mul(&cod.int(&c), &cod.mul(&pow, fk));
            acc = cod.add(&acc, &term);
        }
        g.push(acc);
    }
    g
}

/// One invariant value on a signed Pfister sum.
pub fn eval_sum<C: InvCodomain>(
    cod: &C,
    family: Family,
    d: usize,
    sum: &PfisterSum<C::Entry>,
) -> C::Value {
    match family {
        Family::F => f_values(cod, sum, d).pop().expect("d+1 values"),
        Family::G => g_values(cod, sum, d).pop().expect("d+1 values"),
    }
}

// ---------------------------------------------------------------------------
// Evaluation on Witt classes through the Greek engine
// ---------------------------------------------------------------------------

/// Lift of an even-dimensional form to the augmentation ideal of GW:
/// `q̂ = q − m·⟨1,−1⟩`.
pub fn lift_to_gw(entries: &[SquareClass]) -> Result<GWElem> {
    if entries.len() % 2 != 0 {
        return Err(Error::MembershipFailed { level: 1 });
    }
    let mut x = GWElem {
        pos: entries.to_vec(),
        neg: vec![],
    };
    for _ in 0..entries.len() / 2 {
        x.neg.push(SquareClass::one());
        x.neg.push(SquareClass::minus_one());
    }
    Ok(x)
}

/// `f_n^0 … f_n^{dmax}` of a lifted element, through `π_n` and the λ-ring of
/// GW(ℚ). The membership `q ∈ I^n` is checked for `n ≤ 3`.
pub fn f_values_witt(n: u32, dmax: usize, qhat: &GWElem, order: usize) -> Result<Vec<WittQ>> {
    let w = WittQ::from_gw(qhat);
    if n <= 3 && !w.in_ideal_power(n)? {
        return Err(Error::MembershipFailed { level: n });
    }
    let ring = GwRing;
    let letter = GreekLetter::pi(n, order.max(dmax));
    let x = GwElt::from_gw(qhat);
    let mut out = Vec::with_capacity(dmax + 1);
    for d in 0..=dmax {
        out.push(alpha_op(&ring, &letter, d, &x)?.val.witt);
    }
    Ok(out)
}

/// Witt-codomain invariant evaluation on a lifted element.
pub fn eval_witt(family: Family, n: u32, d: usize, qhat: &GWElem, order: usize) -> Result<WittQ> {
    let f = f_values_witt(n, d, qhat, order)?;
    match family {
        Family::F => Ok(f[d].clone()),
        Family::G => {
            if d == 0 {
                return Ok(WittQ::one());
            }
            let cod = WittCod;
            let mut acc = WittQ::zero();
            for (k, fk) in f.iter().enumerate().take(d + 1).skip(1) {
                let c = g_from_f_coeff(d, k);
                if c.is_zero() {
                    continue;
                }
                let pow = cod.minus_one_pow(n * (d - k) as u32);
                acc = acc.add(&WittQ::unit_multiple(&c).mul(&pow).mul(fk));
            }
            Ok(acc)
        }
    }
}

/// Cohomological invariant evaluation on a lifted element: push the Witt
/// value through `e_{nd}` (degree ≤ 2 exactly, ≥ 3 via the real place).
pub fn eval_coh(family: Family, n: u32, d: usize, qhat: &GWElem, order: usize) -> Result<RatCoh> {
    let w = eval_witt(family, n, d, qhat, order)?;
    let deg = n * d as u32;
    crate::cohom::e_n_witt(&w, deg)
}

// ---------------------------------------------------------------------------
// P^d and fixed-dimension formulas
// ---------------------------------------------------------------------------

/// `P^d(q) = Σ_{i=0}^d (−1)^i·binom(n−i, d−i)·λ^i(q)` on an n-dimensional
/// diagonal form; equals the sum of all d-fold subforms' Pfister classes.
pub fn p_d(q: &DiagForm, d: usize) -> GWElem {
    let n = q.dim() as i64;
    let x = GWElem::from_form(q);
    let mut acc = GWElem::zero();
    for i in 0..=d {
        let c = sign_pow(i as i64) * binom(n - i as i64, (d - i) as i64);
        if c.is_zero() {
            continue;
        }
        let lam = lambda_form(&x, i);
        let c64: i64 = c.to_string().parse().expect("small coefficient");
        acc = acc.add(&lam.int_mul(c64));
    }
    acc
}

/// Oracle form of `P^d`: the literal sum of Pfister forms over d-subsets.
pub fn p_d_subset_sum(q: &DiagForm, d: usize) -> GWElem {
    let n = q.dim();
    if d > n {
        return GWElem::zero();
    }
    let mut acc = GWElem::zero();
    let mut idx: Vec<usize> = (0..d).collect();
    loop {
        let classes: Vec<SquareClass> = idx.iter().map(|&i| q.entries()[i].clone()).collect();
        acc = acc.add(&pfister(&classes));
        let mut k = d;
        let mut done = true;
        while k > 0 {
            k -= 1;
            if idx[k] != k + n - d {
                done = false;
                break;
            }
        }
        if done || d == 0 {
            return acc;
        }
        idx[k] += 1;
        for j in k + 1..d {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

/// `g_1^d` on a fixed even dimension `2r`, direct λ-formula:
/// even `d = 2m`: `Σ (−1)^i·binom(r−⌈i/2⌉, m−⌈i/2⌉)·λ^i(q)`;
/// odd `d = 2m+1`: `Σ binom(r−1−i, m−i)·λ^{2i+1}(q)`.
pub fn g1_fixed_dim_witt(q: &DiagForm, d: usize) -> Result<WittQ> {
    let dim = q.dim();
    if dim % 2 != 0 {
        return Err(Error::DimensionMismatch {
            expected: dim + 1,
            got: dim,
        });
    }
    let r = (dim / 2) as i64;
    let x = GWElem::from_form(q);
    let mut acc = GWElem::zero();
    if d % 2 == 0 {
        let m = (d / 2) as i64;
        for i in 0..=d {
            let half = ((i + 1) / 2) as i64;
            let c = sign_pow(i as i64) * binom(r - half, m - half);
            if c.is_zero() {
                continue;
            }
            let c64: i64 = c.to_string().parse().expect("small coefficient");
            acc = acc.add(&lambda_form(&x, i).int_mul(c64));
        }
    } else {
        let m = (d - 1) / 2;
        for i in 0..=m {
            let c = binom(r - 1 - i as i64, (m - i) as i64);
            if c.is_zero() {
                continue;
            }
            let c64: i64 = c.to_string().parse().expect("small coefficient");
            acc = acc.add(&lambda_form(&x, 2 * i + 1).int_mul(c64));
        }
    }
    Ok(WittQ::from_gw(&acc))
}

/// Fixed-dimension closed form `Σ (−1)^i·binom(r−i, d−i)·{−1}^{d−i}·h^i(q)`
/// for `f_1^d`, with `h = P` in the Witt codomain.
pub fn f1_fixed_dim_witt(q: &DiagForm, d: usize) -> Result<WittQ> {
    fixed_dim_combination_witt(q, d, |r, i, d| {
        sign_pow(i as i64) * binom(r - i as i64, (d - i) as i64)
    })
}

/// Fixed-dimension closed form for `g_1^d` via `h^i`:
/// coefficients `(−1)^i·binom(r−i−1+⌊(d+1)/2⌋, d−i)`.
pub fn g1_fixed_dim_witt_h(q: &DiagForm, d: usize) -> Result<WittQ> {
    fixed_dim_combination_witt(q, d, |r, i, d| {
        sign_pow(i as i64) * binom(r - i as i64 - 1 + ((d + 1) / 2) as i64, (d - i) as i64)
    })
}

fn fixed_dim_combination_witt(
    q: &DiagForm,
    d: usize,
    coeff: impl Fn(i64, usize, usize) -> BigInt,
) -> Result<WittQ> {
    let dim = q.dim();
    if dim % 2 != 0 {
        return Err(Error::DimensionMismatch {
            expected: dim + 1,
            got: dim,
        });
    }
    let r = (dim / 2) as i64;
    let cod = WittCod;
    let mut acc = WittQ::zero();
    for i in 0..=d {
        let c = coeff(r, i, d);
        if c.is_zero() {
            continue;
        }
        let h = WittQ::from_gw(&p_d(q, i));
        let pow = cod.minus_one_pow((d - i) as u32);
        acc = acc.add(&WittQ::unit_multiple(&c).mul(&pow).mul(&h));
    }
    Ok(acc)
}

/// Cohomological fixed-dimension form, `h^i = w_i`.
pub fn fixed_dim_coh(q: &DiagForm, d: usize, family: Family) -> Result<RatCoh> {
    let dim = q.dim();
    if dim % 2 != 0 {
        return Err(Error::DimensionMismatch {
            expected: dim + 1,
            got: dim,
        });
    }
    let r = (dim / 2) as i64;
    let cod = RatCohCod;
    let mut acc = RatCoh::zero();
    for i in 0..=d {
        let c = match family {
            Family::F => binom(r - i as i64, (d - i) as i64),
            Family::G => binom(r - i as i64 - 1 + ((d + 1) / 2) as i64, (d - i) as i64),
        };
        if (&c % 2u8).is_zero() {
            continue;
        }
        let w = crate::cohom::stiefel_whitney(q, i);
        acc = acc.add(&cod.minus_one_pow((d - i) as u32).cup(&w));
    }
    Ok(acc)
}

/// Symbolic fixed-dimension form, `h^i = w_i` on formal entries.
pub fn fixed_dim_sym(
    regime: RhoRegime,
    entries: &[SymClass],
    d: usize,
    family: Family,
) -> SymCoh {
    assert!(entries.len() % 2 == 0);
    let r = (entries.len() / 2) as i64;
    let cod = SymCohCod { regime };
    let mut acc = SymCoh::zero(regime);
    for i in 0..=d {
        let c = match family {
            Family::F => binom(r - i as i64, (d - i) as i64),
            Family::G => binom(r - i as i64 - 1 + ((d + 1) / 2) as i64, (d - i) as i64),
        };
        if (&c % 2u8).is_zero() {
            continue;
        }
        let w = crate::cohom::stiefel_whitney_sym(regime, entries, i);
        acc = cod.add(&acc, &cod.mul(&cod.minus_one_pow((d - i) as u32), &w));
    }
    acc
}

// ---------------------------------------------------------------------------
// Product and restriction tables
// ---------------------------------------------------------------------------

/// One term `mult·{−1}^{minus_one_pow}·δ^{delta_pow}·f_n^{index}`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TableTerm {
    pub index: usize,
    pub mult: BigInt,
    pub minus_one_pow: u32,
    pub delta_pow: u32,
}

impl TableTerm {
    pub fn coeff_string(&self) -> String {
        let mut parts = Vec::new();
        if self.mult != BigInt::one() || (self.minus_one_pow == 0 && self.delta_pow == 0) {
            parts.push(self.mult.to_string());
        }
        if self.delta_pow > 0 {
            parts.push(format!("d^{}", self.delta_pow));
        }
        if self.minus_one_pow > 0 {
            parts.push(format!("{{-1}}^{}", self.minus_one_pow));
        }
        parts.join("*")
    }
}

/// `f_n^s·f_n^t = Σ_d binom(d; s+t−d, d−s, d−t)·{−1}^{n(s+t−d)}·f_n^d`;
/// in characteristic 2 only `d = s∨t` survives.
pub fn product_coeffs(s: usize, t: usize, n: u32, char2: bool) -> Vec<TableTerm> {
    if char2 {
        let d = s | t;
        return vec![TableTerm {
            index: d,
            mult: BigInt::one(),
            minus_one_pow: n * (s & t) as u32,
            delta_pow: 0,
        }];
    }
    let mut out = Vec::new();
    for d in s.max(t)..=s + t {
        let mult = multinom3(
            (s + t - d) as i64,
            (d - s) as i64,
            (d - t) as i64,
        );
        if mult.is_zero() {
            continue;
        }
        out.push(TableTerm {
            index: d,
            mult,
            minus_one_pow: n * (s + t - d) as u32,
            delta_pow: 0,
        });
    }
    out
}

/// Restriction `(f_n^d)|_{I^{n+1}} = Σ_k binom(k, d−k)·δ^{2k−d}·{−1}^{(d−k)(n−1)}·f_{n+1}^k`;
/// with `δ = 0` only `d = 2k` survives.
pub fn restrict_coeffs(n: u32, d: usize, delta_zero: bool) -> Vec<TableTerm> {
    let mut out = Vec::new();
    for k in d.div_ceil(2)..=d {
        let mult = binom(k as i64, (d - k) as i64);
        if mult.is_zero() {
            continue;
        }
        let delta_pow = (2 * k - d) as u32;
        if delta_zero && delta_pow > 0 {
            continue;
        }
        out.push(TableTerm {
            index: k,
            mult,
            minus_one_pow: (d - k) as u32 * (n - 1),
            delta_pow,
        });
    }
    out
}

pub fn table_json(terms: &[TableTerm]) -> Value {
    Value::Array(
        terms
            .iter()
            .map(|t| json!([t.index, t.coeff_string()]))
            .collect(),
    )
}

// ---------------------------------------------------------------------------
// f/g basis-change matrices over ℤ[ρ]
// ---------------------------------------------------------------------------

/// Polynomial in ρ with integer coefficients.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RhoPoly(pub Vec<BigInt>);

impl RhoPoly {
    pub fn zero() -> Self {
        RhoPoly(vec![])
    }
    pub fn one() -> Self {
        RhoPoly(vec![BigInt::one()])
    }
    pub fn term(c: BigInt, pow: u32) -> Self {
        if c.is_zero() {
            return RhoPoly::zero();
        }
        let mut v = vec![BigInt::zero(); pow as usize + 1];
        v[pow as usize] = c;
        RhoPoly(v)
    }
    pub fn is_zero(&self) -> bool {
        self.0.iter().all(Zero::is_zero)
    }
    pub fn add(&self, rhs: &Self) -> Self {
        let len = self.0.len().max(rhs.0.len());
        let mut v = vec![BigInt::zero(); len];
        for (i, c) in self.0.iter().enumerate() {
            v[i] += c;
        }
        for (i, c) in rhs.0.iter().enumerate() {
            v[i] += c;
        }
        while v.last().is_some_and(Zero::is_zero) {
            v.pop();
        }
        RhoPoly(v)
    }
    pub fn mul(&self, rhs: &Self) -> Self {
        if self.is_zero() || rhs.is_zero() {
            return RhoPoly::zero();
        }
        let mut v = vec![BigInt::zero(); self.0.len() + rhs.0.len() - 1];
        for (i, a) in self.0.iter().enumerate() {
            for (j, b) in rhs.0.iter().enumerate() {
                v[i + j] += a * b;
            }
        }
        RhoPoly(v)
    }
}

/// The two triangular change-of-basis matrices between `(f_n^k)` and
/// `(g_n^k)` over ℤ[ρ], rows/columns indexed `1..=size`.
pub fn fg_matrices(n: u32, size: usize) -> (Vec<Vec<RhoPoly>>, Vec<Vec<RhoPoly>>) {
    let mut g_from_f = vec![vec![RhoPoly::zero(); size]; size];
    let mut f_from_g = vec![vec![RhoPoly::zero(); size]; size];
    for d in 1..=size {
        for k in 1..=d {
            let pow = n * (d - k) as u32;
            g_from_f[d - 1][k - 1] = RhoPoly::term(g_from_f_coeff(d, k), pow);
            f_from_g[d - 1][k - 1] = RhoPoly::term(f_from_g_coeff(d, k), pow);
        }
    }
    (g_from_f, f_from_g)
}

/// Product of two square matrices over ℤ[ρ].
pub fn rho_mat_mul(a: &[Vec<RhoPoly>], b: &[Vec<RhoPoly>]) -> Vec<Vec<RhoPoly>> {
    let n = a.len();
    let mut out = vec![vec![RhoPoly::zero(); n]; n];
    for i in 0..n {
        for k in 0..n {
            if a[i][k].is_zero() {
                continue;
            }
            for j in 0..n {
                if b[k][j].is_zero() {
                    continue;
                }
                out[i][j] = out[i][j].add(&a[i][k].mul(&b[k][j]));
            }
        }
    }
    out
}

// ---------------------------------------------------------------------------
// Pointwise identity checks
// ---------------------------------------------------------------------------

/// Report from a batch of pointwise identity checks.
#[derive(Clone, Debug, Default)]
pub struct IdentityReport {
    pub checked: usize,
    pub first_failure: Option<String>,
}

impl IdentityReport {
    pub fn ok(&self) -> bool {
        self.first_failure.is_none()
    }

    pub fn record(&mut self, name: &str, passed: bool) {
        self.checked += 1;
        if !passed && self.first_failure.is_none() {
            self.first_failure = Some(name.to_string());
        }
    }
}

/// Addition law `f_n^d(q+q') = Σ f_n^k(q)·f_n^{d−k}(q')`.
pub fn check_addition<C: InvCodomain>(
    cod: &C,
    d: usize,
    q: &PfisterSum<C::Entry>,
    q2: &PfisterSum<C::Entry>,
) -> bool {
    let lhs = eval_sum(cod, Family::F, d, &q.add(q2));
    let fq = f_values(cod, q, d);
    let fq2 = f_values(cod, q2, d);
    let mut rhs = cod.zero();
    for k in 0..=d {
        rhs = cod.add(&rhs, &cod.mul(&fq[k], &fq2[d - k]));
    }
    cod.eq(&lhs, &rhs)
}

/// Similitude on a Pfister form:
/// `f_n^d(⟨a⟩φ) = (−1)^d·{−1}^{n(d−1)−1}·{a}·f_n(φ)` for `d ≥ 2`.
pub fn check_simil_pfister<C: InvCodomain>(
    cod: &C,
    d: usize,
    a: &C::Entry,
    phi: &[C::Entry],
) -> bool {
    assert!(d >= 2);
    let n = phi.len() as u32;
    let base = PfisterSum::new(n, vec![(1, phi.to_vec())]);
    let scaled = scale_rep(cod, &base, a);
    let lhs = eval_sum(cod, Family::F, d, &scaled);
    let pow = cod.minus_one_pow(n * (d as u32 - 1) - 1);
    let sym_a = cod.symbol(std::slice::from_ref(a));
    let mut rhs = cod.mul(&pow, &cod.mul(&sym_a, &cod.symbol(phi)));
    if d % 2 == 1 {
        rhs = cod.neg(&rhs);
    }
    cod.eq(&lhs, &rhs)
}

/// Similitude action on `g`:
/// even `d`: `g_n^d(⟨λ⟩q) = g_n^d(q) + {λ}·{−1}^{n−1}·g_n^{d−1}(q)`;
/// odd  `d`: `g_n^d(⟨λ⟩q) = g_n^d(q) − δ·{λ}·g_n^d(q)`.
pub fn check_g_simil<C: InvCodomain>(
    cod: &C,
    d: usize,
    lambda: &C::Entry,
    q: &PfisterSum<C::Entry>,
) -> bool {
    let n = q.level;
    let scaled = scale_rep(cod, q, lambda);
    let lhs = eval_sum(cod, Family::G, d, &scaled);
    let g = g_values(cod, q, d);
    let sym_l = cod.symbol(std::slice::from_ref(lambda));
    let rhs = if d % 2 == 0 {
        let tilt = cod.mul(&sym_l, &cod.mul(&cod.minus_one_pow(n - 1), &g[d - 1]));
        cod.add(&g[d], &tilt)
    } else {
        let tilt = cod.mul(&cod.delta(), &cod.mul(&sym_l, &g[d]));
        cod.sub(&g[d], &tilt)
    };
    cod.eq(&lhs, &rhs)
}

/// Subtraction of a Pfister form:
/// `f_n^d(q−φ) = f_n^d(q) − f_n(φ)·Σ_k (−1)^{d−k−1}·{−1}^{n(d−k−1)}·f_n^k(q)`.
pub fn check_f_minus<C: InvCodomain>(
    cod: &C,
    d: usize,
    q: &PfisterSum<C::Entry>,
    phi: &[C::Entry],
) -> bool {
    let n = q.level;
    assert_eq!(phi.len() as u32, n);
    let minus_phi = PfisterSum::new(n, vec![(-1, phi.to_vec())]);
    let lhs = eval_sum(cod, Family::F, d, &q.add(&minus_phi));
    let f = f_values(cod, q, d);
    let mut shifted = cod.zero();
    for (k, fk) in f.iter().enumerate().take(d) {
        let mut term = cod.mul(&cod.minus_one_pow(n * (d - k - 1) as u32), fk);
        if (d - k - 1) % 2 == 1 {
            term = cod.neg(&term);
        }
        shifted = cod.add(&shifted, &term);
    }
    let rhs = cod.sub(&f[d], &cod.mul(&cod.symbol(phi), &shifted));
    cod.eq(&lhs, &rhs)
}

/// Addition of an (n+1)-fold Pfister form in the cohomological codomain:
/// `u_{nd}(q+φ) = u_{nd}(q) + (−1)^{n−1}∪e_{n+1}(φ)∪u_{n(d−2)}(q)`.
pub fn check_pfister_next_level<C: InvCodomain>(
    cod: &C,
    d: usize,
    q: &PfisterSum<C::Entry>,
    phi: &[C::Entry],
) -> bool {
    let n = q.level;
    assert_eq!(phi.len() as u32, n + 1);
    assert!(d >= 2);
    let phi_sum = expand_down(cod, &PfisterSum::new(n + 1, vec![(1, phi.to_vec())]));
    let lhs = eval_sum(cod, Family::F, d, &q.add(&phi_sum));
    let f = f_values(cod, q, d);
    let bump = cod.mul(&cod.minus_one_pow(n - 1), &cod.symbol(phi));
    let rhs = cod.add(&f[d], &cod.mul(&bump, &f[d - 2]));
    cod.eq(&lhs, &rhs)
}

/// Shift recursion defining `g`: for even `d`, `(g^{d+1})⁻ = g^d`; for odd
/// `d`, `(g^{d+1})⁺ = g^d`.
pub fn check_g_recursion<C: InvCodomain>(
    cod: &C,
    d: usize,
    q: &PfisterSum<C::Entry>,
    phi: &[C::Entry],
) -> bool {
    let n = q.level;
    assert_eq!(phi.len() as u32, n);
    let g = g_values(cod, q, d + 1);
    let sym = cod.symbol(phi);
    if d % 2 == 0 {
        // g^{d+1}(q−φ) = g^{d+1}(q) − f_n(φ)·g^d(q)
        let minus_phi = PfisterSum::new(n, vec![(-1, phi.to_vec())]);
        let lhs = eval_sum(cod, Family::G, d + 1, &q.add(&minus_phi));
        let rhs = cod.sub(&g[d + 1], &cod.mul(&sym, &g[d]));
        cod.eq(&lhs, &rhs)
    } else {
        // g^{d+1}(q+φ) = g^{d+1}(q) + f_n(φ)·g^d(q)
        let plus_phi = PfisterSum::new(n, vec![(1, phi.to_vec())]);
        let lhs = eval_sum(cod, Family::G, d + 1, &q.add(&plus_phi));
        let rhs = cod.add(&g[d + 1], &cod.mul(&sym, &g[d]));
        cod.eq(&lhs, &rhs)
    }
}

/// Restriction identity: a level-(n+1) sum evaluated by `f_n^d` equals the
/// `restrict_coeffs` combination of `f_{n+1}^k`.
pub fn check_restriction<C: InvCodomain>(
    cod: &C,
    n: u32,
    d: usize,
    q_level_up: &PfisterSum<C::Entry>,
    delta_zero: bool,
) -> bool {
    assert_eq!(q_level_up.level, n + 1);
    let down = expand_down(cod, q_level_up);
    let lhs = eval_sum(cod, Family::F, d, &down);
    let f_up = f_values(cod, q_level_up, d);
    let mut rhs = cod.zero();
    for term in restrict_coeffs(n, d, delta_zero) {
        let mut v = cod.mul(&cod.int(&term.mult), &f_up[term.index]);
        v = cod.mul(&v, &cod.minus_one_pow(term.minus_one_pow));
        for _ in 0..term.delta_pow {
            v = cod.mul(&v, &cod.delta());
        }
        rhs = cod.add(&rhs, &v);
    }
    cod.eq(&lhs, &rhs)
}

/// Product identity `f_n^s·f_n^t = Σ coeffs·f_n^d` evaluated pointwise.
pub fn check_product<C: InvCodomain>(
    cod: &C,
    s: usize,
    t: usize,
    q: &PfisterSum<C::Entry>,
    char2: bool,
) -> bool {
    let n = q.level;
    let f = f_values(cod, q, s + t);
    let lhs = cod.mul(&f[s], &f[t]);
    let mut rhs = cod.zero();
    for term in product_coeffs(s, t, n, char2) {
        let v = cod.mul(
            &cod.int(&term.mult),
            &cod.mul(&cod.minus_one_pow(term.minus_one_pow), &f[term.index]),
        );
        rhs = cod.add(&rhs, &v);
    }
    cod.eq(&lhs, &rhs)
}

// ---------------------------------------------------------------------------
// Semi-factorized forms: the Δ^{n,1} mechanism
// ---------------------------------------------------------------------------

/// `Δ^{n,1}`-style invariant on `I^{n,1}`: the class `{c}∪α(q)` attached to
/// the factorization `⟨⟨c⟩⟩·q`.
pub fn delta_31(
    c: &SquareClass,
    q_entries: &[SquareClass],
    family: Family,
    d: usize,
    order: usize,
) -> Result<RatCoh> {
    let qhat = lift_to_gw(q_entries)?;
    let w = WittQ::from_gw(&qhat);
    if !w.in_ideal_power(2)? {
        return Err(Error::MembershipFailed { level: 2 });
    }
    let alpha = eval_coh(family, 2, d, &qhat, order.max(d))?;
    Ok(RatCoh::square_class(c).cup(&alpha))
}

/// Well-definedness across factorizations: `⟨⟨a⟩⟩q = ⟨⟨b⟩⟩q'` (Witt equal)
/// must give `{a}∪f_2^d(q) = {b}∪f_2^d(q')`.
pub fn delta31_factorization_check(
    a: &SquareClass,
    b: &SquareClass,
    q: &[SquareClass],
    q2: &[SquareClass],
    d: usize,
    order: usize,
) -> Result<bool> {
    let qa = lift_to_gw(q)?.mul(&pfister(&[a.clone()]));
    let qb = lift_to_gw(q2)?.mul(&pfister(&[b.clone()]));
    if !witt_equal(&qa, &qb) {
        return Err(Error::Degenerate(
            "inputs are not two factorizations of one class".into(),
        ));
    }
    let va = delta_31(a, q, Family::F, d, order)?;
    let vb = delta_31(b, q2, Family::F, d, order)?;
    Ok(va == vb)
}

/// The well-definedness lemma in the Witt ring: for
/// `q = Σ ⟨λ_i⟩⟨⟨c_i⟩⟩` with every `c_i` represented by `⟨⟨ab⟩⟩`,
/// `⟨⟨a⟩⟩·π_n^d(q) = ⟨⟨b⟩⟩·π_n^d(q)`.
pub fn delta31_lemma_check(
    a: &SquareClass,
    b: &SquareClass,
    q: &GWElem,
    n: u32,
    d: usize,
    order: usize,
) -> Result<bool> {
    let ring = GwRing;
    let letter = GreekLetter::pi(n, order.max(d));
    let v = alpha_op(&ring, &letter, d, &GwElt::from_gw(q))?;
    let pa = WittQ::from_gw(&pfister(&[a.clone()]));
    let pb = WittQ::from_gw(&pfister(&[b.clone()]));
    Ok(pa.mul(&v.val.witt) == pb.mul(&v.val.witt))
}

// ---------------------------------------------------------------------------
// a3 / a4 for six-dimensional forms
// ---------------------------------------------------------------------------

/// Output of the degree-6 construction: the interior form
/// `q_τ = 1 + λ⁴(q) − ⟨⟨−1,−δ⟩⟩ ∈ I³`, its `e₃` class, and `e₄` when `e₃`
/// vanishes.
#[derive(Clone, Debug)]
pub struct A3A4 {
    pub q_tau: GWElem,
    pub a3: RatCoh,
    pub a4: Option<RatCoh>,
}

/// Splits a 6-dimensional form as `q₁ ⊥ q₂` (first and last three entries)
/// and returns the two Pfister blocks `(−a₁b₁, −a₁c₁)` and `(−a₂b₂, −a₂c₂)`.
fn a3_blocks(entries: &[SquareClass]) -> ([SquareClass; 2], [SquareClass; 2]) {
    let na1b1 = entries[0].mul(&entries[1]).neg();
    let na1c1 = entries[0].mul(&entries[2]).neg();
    let na2b2 = entries[3].mul(&entries[4]).neg();
    let na2c2 = entries[3].mul(&entries[5]).neg();
    ([na1b1, na1c1], [na2b2, na2c2])
}

pub fn a3_a4(q: &DiagForm) -> Result<A3A4> {
    if q.dim() != 6 {
        return Err(Error::DimensionMismatch {
            expected: 6,
            got: q.dim(),
        });
    }
    // δ = disc(q) = −det(q) in dimension 6
    let delta = WittQ::from_form(q).signed_disc().clone();
    let x = GWElem::from_form(q);
    let q_tau = GWElem::one()
        .add(&lambda_form(&x, 4))
        .sub(&pfister(&[SquareClass::minus_one(), delta.neg()]));
    let w = WittQ::from_gw(&q_tau);
    if !w.in_ideal_power(3)? {
        return Err(Error::MembershipFailed { level: 3 });
    }
    let a3 = crate::cohom::e_n_witt(&w, 3)?;
    let a4 = if a3.is_zero() {
        // q_τ = −⟨⟨−1,−δ,−a₁b₁,−a₁c₁⟩⟩ + ⟨⟨−a₁b₁,−a₁c₁,−a₂b₂,−a₂c₂⟩⟩
        let (b1, b2) = a3_blocks(q.entries());
        let pf_a = [
            SquareClass::minus_one(),
            delta.neg(),
            b1[0].clone(),
            b1[1].clone(),
        ];
        let pf_b = [b1[0].clone(), b1[1].clone(), b2[0].clone(), b2[1].clone()];
        let decomposition = pfister(&pf_b).sub(&pfister(&pf_a));
        if !witt_equal(&q_tau, &decomposition) {
            return Err(Error::Degenerate(
                "four-fold Pfister decomposition failed although e3 = 0".into(),
            ));
        }
        Some(RatCoh::symbol(&pf_a).add(&RatCoh::symbol(&pf_b)))
    } else {
        None
    };
    Ok(A3A4 { q_tau, a3, a4 })
}

/// Symbolic `a₃` of a generic 6-dimensional form:
/// `(−δ,−a₁b₁,−a₁c₁) + (−δ,−a₂b₂,−a₂c₂)` with `δ = −det(q)`.
pub fn a3_sym(regime: RhoRegime, entries: &[SymClass]) -> SymCoh {
    assert_eq!(entries.len(), 6);
    let mut det = SymClass::one();
    for e in entries {
        det = det.mul(e);
    }
    let minus_delta = det; // −δ = det(q)
    let block = |i: usize, j: usize, k: usize| {
        [
            minus_delta.clone(),
            entries[i].mul(&entries[j]).neg(),
            entries[i].mul(&entries[k]).neg(),
        ]
    };
    SymCoh::symbol(regime, &block(0, 1, 2))
        .add(&SymCoh::symbol(regime, &block(3, 4, 5)))
        .expect("same regime")
}

/// Symbolic `a₄` from the two four-fold symbols; only meaningful when
/// `a₃ = 0`.
pub fn a4_sym(regime: RhoRegime, entries: &[SymClass]) -> SymCoh {
    assert_eq!(entries.len(), 6);
    let mut det = SymClass::one();
    for e in entries {
        det = det.mul(e);
    }
    let neg_delta = det;
    let b1 = [
        entries[0].mul(&entries[1]).neg(),
        entries[0].mul(&entries[2]).neg(),
    ];
    let b2 = [
        entries[3].mul(&entries[4]).neg(),
        entries[3].mul(&entries[5]).neg(),
    ];
    let pf_a = [
        SymClass::minus_one(),
        neg_delta,
        b1[0].clone(),
        b1[1].clone(),
    ];
    let pf_b = [b1[0].clone(), b1[1].clone(), b2[0].clone(), b2[1].clone()];
    SymCoh::symbol(regime, &pf_a)
        .add(&SymCoh::symbol(regime, &pf_b))
        .expect("same regime")
}

// ---------------------------------------------------------------------------
// The disc series Σ (−1)^d f_1^d
// ---------------------------------------------------------------------------

/// Result of evaluating `⟨disc q⟩ = Σ_d (−1)^d f_1^d(q)`: either the check
/// ran to a provably vanishing tail, or it was skipped because the partial
/// values did not die out within the window.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum DiscSeries {
    Checked(bool),
    Truncated,
}

pub fn disc_series_check(q_entries: &[SquareClass], order: usize) -> Result<DiscSeries> {
    let qhat = lift_to_gw(q_entries)?;
    let cutoff = q_entries.len() + 6;
    let f = f_values_witt(1, cutoff, &qhat, order.max(cutoff))?;
    // tail must visibly vanish, otherwise the series is not summable here
    if f[cutoff - 3..].iter().any(|w| !w.is_zero()) {
        return Ok(DiscSeries::Truncated);
    }
    let mut acc = WittQ::zero();
    for (d, fd) in f.iter().enumerate() {
        if d % 2 == 0 {
            acc = acc.add(fd);
        } else {
            acc = acc.sub(fd);
        }
    }
    let disc = WittQ::from_gw(&qhat).signed_disc().clone();
    Ok(DiscSeries::Checked(acc == WittQ::from_class(&disc)))
}
