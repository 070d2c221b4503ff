//! Truncated formal power series over an exact coefficient ring.
//!
//! A [`Series`] stores coefficients `c_0..c_T` for a fixed truncation order
//! `T`; every operation truncates back to order `T`. Letters (series of the
//! shape `t + t^2·…` with integer coefficients) form a group under
//! composition; [`GreekLetter::pi`] produces the letters attached to Pfister
//! elements through the Catalan recurrences.

use crate::error::{Error, Result};
use num_bigint::BigInt;
use num_traits::{One, Zero};
use serde_json::{json, Value};

/// Minimal exact-ring contract for series coefficients. Method names carry a
/// `c` prefix to stay clear of the `num_traits` operators on concrete types.
pub trait Coeff: Clone {
    fn czero() -> Self;
    fn cone() -> Self;
    fn cadd(&self, rhs: &Self) -> Self;
    fn cneg(&self) -> Self;
    fn cmul(&self, rhs: &Self) -> Self;
    fn cis_zero(&self) -> bool;
    fn ceq(&self, rhs: &Self) -> bool;

    fn csub(&self, rhs: &Self) -> Self {
        self.cadd(&rhs.cneg())
    }
}

impl Coeff for BigInt {
    fn czero() -> Self {
        BigInt::zero()
    }
    fn cone() -> Self {
        BigInt::one()
    }
    fn cadd(&self, rhs: &Self) -> Self {
        self + rhs
    }
    fn cneg(&self) -> Self {
        -self
    }
    fn cmul(&self, rhs: &Self) -> Self {
        self * rhs
    }
    fn cis_zero(&self) -> bool {
        self.is_zero()
    }
    fn ceq(&self, rhs: &Self) -> bool {
        self == rhs
    }
}

impl Coeff for num_rational::BigRational {
    fn czero() -> Self {
        Zero::zero()
    }
    fn cone() -> Self {
        One::one()
    }
    fn cadd(&self, rhs: &Self) -> Self {
        self + rhs
    }
    fn cneg(&self) -> Self {
        -self
    }
    fn cmul(&self, rhs: &Self) -> Self {
        self * rhs
    }
    fn cis_zero(&self) -> bool {
        self.is_zero()
    }
    fn ceq(&self, rhs: &Self) -> bool {
        self == rhs
    }
}

/// Formal power series truncated at a fixed order.
#[derive(Clone, Debug)]
pub struct Series<C: Coeff> {
    coeffs: Vec<C>,
}

impl<C: Coeff> Series<C> {
    /// Builds a series of truncation order `order` from the given
    /// coefficients, padding with zeros or truncating as needed.
    pub fn new(order: usize, mut coeffs: Vec<C>) -> Self {
        coeffs.truncate(order + 1);
        while coeffs.len() < order + 1 {
            coeffs.push(C::czero());
        }
        Series { coeffs }
    }

    pub fn zero(order: usize) -> Self {
        Series::new(order, vec![])
    }

    pub fn one(order: usize) -> Self {
        Series::new(order, vec![C::cone()])
    }

    /// The monomial `c·t^k`.
    pub fn monomial(order: usize, k: usize, c: C) -> Self {
        let mut s = Series::zero(order);
        if k <= order {
            s.coeffs[k] = c;
        }
        s
    }

    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeff(&self, k: usize) -> C {
        self.coeffs.get(k).cloned().unwrap_or_else(C::czero)
    }

    pub fn coeffs(&self) -> &[C] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(C::cis_zero)
    }

    pub fn eq_series(&self, rhs: &Self) -> bool {
        self.coeffs.len() == rhs.coeffs.len()
            && self.coeffs.iter().zip(&rhs.coeffs).all(|(a, b)| a.ceq(b))
    }

    fn check_order(&self, rhs: &Self) -> Result<()> {
        if self.order() != rhs.order() {
            return Err(Error::OrderMismatch {
                left: self.order(),
                right: rhs.order(),
            });
        }
        Ok(())
    }

    pub fn add(&self, rhs: &Self) -> Result<Self> {
        self.check_order(rhs)?;
        let coeffs = self
            .coeffs
            .iter()
            .zip(&rhs.coeffs)
            .map(|(a, b)| a.cadd(b))
            .collect();
        Ok(Series { coeffs })
    }

    pub fn sub(&self, rhs: &Self) -> Result<Self> {
        self.add(&rhs.neg())
    }

    pub fn neg(&self) -> Self {
        Series {
            coeffs: self.coeffs.iter().map(C::cneg).collect(),
        }
    }

    pub fn scale(&self, c: &C) -> Self {
        Series {
            coeffs: self.coeffs.iter().map(|a| a.cmul(c)).collect(),
        }
    }

    /// Cauchy product truncated at the common order.
    pub fn mul(&self, rhs: &Self) -> Result<Self> {
        self.check_order(rhs)?;
        let t = self.order();
        let mut coeffs = vec![C::czero(); t + 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            if a.cis_zero() {
                continue;
            }
            for (j, b) in rhs.coeffs.iter().enumerate() {
                if i + j > t {
                    break;
                }
                if b.cis_zero() {
                    continue;
                }
                coeffs[i + j] = coeffs[i + j].cadd(&a.cmul(b));
            }
        }
        Ok(Series { coeffs })
    }

    /// Composition `self ∘ g`; requires `g(0) = 0`.
    pub fn compose(&self, g: &Self) -> Result<Self> {
        self.check_order(g)?;
        if !g.coeff(0).cis_zero() {
            return Err(Error::NonzeroConstantTerm);
        }
        let t = self.order();
        let mut acc = Series::monomial(t, 0, self.coeff(0));
        let mut gpow = Series::one(t);
        for k in 1..=t {
            gpow = gpow.mul(g)?;
            if gpow.is_zero() {
                break;
            }
            acc = acc.add(&gpow.scale(&self.coeff(k)))?;
        }
        Ok(acc)
    }

    /// Multiplicative inverse; requires constant term equal to one.
    pub fn recip(&self) -> Result<Self> {
        if !self.coeff(0).ceq(&C::cone()) {
            return Err(Error::NotInvertible);
        }
        let t = self.order();
        let mut inv = vec![C::czero(); t + 1];
        inv[0] = C::cone();
        for k in 1..=t {
            // c_k(inv) = -sum_{j=1..k} a_j * inv_{k-j}
            let mut s = C::czero();
            for j in 1..=k {
                s = s.cadd(&self.coeff(j).cmul(&inv[k - j]));
            }
            inv[k] = s.cneg();
        }
        Ok(Series { coeffs: inv })
    }

    /// Integer power, exponent may be negative when the series is invertible.
    pub fn powi(&self, e: i64) -> Result<Self> {
        let base = if e < 0 { self.recip()? } else { self.clone() };
        let mut acc = Series::one(self.order());
        for _ in 0..e.unsigned_abs() {
            acc = acc.mul(&base)?;
        }
        Ok(acc)
    }
}

impl Series<BigInt> {
    /// JSON form `{"order": T, "coeffs": ["c0", "c1", ...]}` with exact
    /// decimal-string coefficients.
    pub fn to_json(&self) -> Value {
        json!({
            "order": self.order(),
            "coeffs": self.coeffs.iter().map(|c| c.to_string()).collect::<Vec<_>>(),
        })
    }

    pub fn from_json(v: &Value) -> Result<Self> {
        let order = v["order"]
            .as_u64()
            .ok_or_else(|| Error::Degenerate("series json: missing order".into()))?
            as usize;
        let arr = v["coeffs"]
            .as_array()
            .ok_or_else(|| Error::Degenerate("series json: missing coeffs".into()))?;
        let mut coeffs = Vec::with_capacity(arr.len());
        for c in arr {
            let s = c
                .as_str()
                .map(|s| s.to_string())
                .or_else(|| c.as_i64().map(|n| n.to_string()))
                .ok_or_else(|| Error::Degenerate("series json: bad coefficient".into()))?;
            coeffs.push(
                s.parse::<BigInt>()
                    .map_err(|_| Error::Degenerate("series json: bad coefficient".into()))?,
            );
        }
        Ok(Series::new(order, coeffs))
    }
}

/// Generating series of the Catalan numbers, the unique `C` with
/// `C = 1 + t·C^2` up to the truncation order.
pub fn catalan(order: usize) -> Series<BigInt> {
    let mut c: Vec<BigInt> = vec![BigInt::one()];
    for m in 0..order {
        let mut next = BigInt::zero();
        for i in 0..=m {
            next += &c[i] * &c[m - i];
        }
        c.push(next);
    }
    Series::new(order, c)
}

/// An element of the composition group `t + t^2·ℤ[[t]]`.
#[derive(Clone, Debug)]
pub struct GreekLetter {
    series: Series<BigInt>,
}

impl GreekLetter {
    pub fn new(series: Series<BigInt>) -> Result<Self> {
        if !series.coeff(0).is_zero() || !series.coeff(1).is_one() {
            return Err(Error::NotALetter);
        }
        Ok(GreekLetter { series })
    }

    /// The identity letter `t` (the λ base point).
    pub fn lambda(order: usize) -> Self {
        GreekLetter {
            series: Series::monomial(order, 1, BigInt::one()),
        }
    }

    /// The letter `Σ_{d≥1} t^d` (the γ base point).
    pub fn gamma(order: usize) -> Self {
        let mut coeffs = vec![BigInt::zero()];
        coeffs.extend(std::iter::repeat(BigInt::one()).take(order));
        GreekLetter {
            series: Series::new(order, coeffs),
        }
    }

    /// `π_1 = t/(1+t) = Σ (−1)^{d+1} t^d`; `π_{n+1} = π_n ∘ (t·C(−2^{n−1}t))`.
    pub fn pi(n: u32, order: usize) -> Self {
        assert!(n >= 1, "pi letters start at n = 1");
        let mut coeffs = vec![BigInt::zero()];
        for d in 1..=order {
            coeffs.push(if d % 2 == 1 {
                BigInt::one()
            } else {
                -BigInt::one()
            });
        }
        let mut letter = GreekLetter {
            series: Series::new(order, coeffs),
        };
        for m in 1..n {
            let step = catalan_letter(m, order);
            letter = letter.compose(&step).expect("orders match");
        }
        letter
    }

    pub fn series(&self) -> &Series<BigInt> {
        &self.series
    }

    pub fn order(&self) -> usize {
        self.series.order()
    }

    pub fn eq_letter(&self, rhs: &Self) -> bool {
        self.series.eq_series(&rhs.series)
    }

    /// Composition of letters stays a letter.
    pub fn compose(&self, rhs: &Self) -> Result<Self> {
        GreekLetter::new(self.series.compose(&rhs.series)?)
    }

    /// Compositional inverse, by the fixed-point iteration
    /// `g ← g − (f∘g − t)` refined degree by degree (exact for `c_1 = 1`).
    pub fn reversion(&self) -> Self {
        let t = self.order();
        let ident = Series::monomial(t, 1, BigInt::one());
        let mut g = ident.clone();
        for _ in 0..t {
            let err = self
                .series
                .compose(&g)
                .and_then(|fg| fg.sub(&ident))
                .expect("orders match");
            if err.is_zero() {
                break;
            }
            g = g.sub(&err).expect("orders match");
        }
        GreekLetter { series: g }
    }

    /// Lower-triangular matrix `a[k][d]` = coefficient of `t^d` in the k-th
    /// power of the letter, for `1 ≤ k ≤ d ≤ max_degree`. Row `d` is returned
    /// as the vector `[a[1][d], …, a[d][d]]`.
    pub fn letter_matrix(&self, max_degree: usize) -> Result<Vec<Vec<BigInt>>> {
        if max_degree > self.order() {
            return Err(Error::DegreeExceedsOrder {
                degree: max_degree,
                order: self.order(),
            });
        }
        let mut rows = vec![Vec::new(); max_degree];
        let mut pow = Series::one(self.order());
        let mut table = Vec::with_capacity(max_degree + 1);
        table.push(pow.clone());
        for _ in 1..=max_degree {
            pow = pow.mul(&self.series)?;
            table.push(pow.clone());
        }
        for d in 1..=max_degree {
            for k in 1..=d {
                rows[d - 1].push(table[k].coeff(d));
            }
        }
        Ok(rows)
    }
}

/// The letter `t·C(−2^{n−1}·t)` linking `π_n` to `π_{n+1}`.
pub fn catalan_letter(n: u32, order: usize) -> GreekLetter {
    let c = catalan(order);
    let scale = -(BigInt::one() << (n - 1));
    let mut coeffs = vec![BigInt::zero()];
    let mut p = BigInt::one();
    for d in 0..order {
        coeffs.push(c.coeff(d) * &p);
        p *= &scale;
    }
    GreekLetter {
        series: Series::new(order, coeffs),
    }
}

/// The letter `t + 2^{n−1}·t^2`, the compositional inverse of
/// [`catalan_letter`].
pub fn quadratic_letter(n: u32, order: usize) -> GreekLetter {
    let mut coeffs = vec![BigInt::zero(), BigInt::one()];
    coeffs.push(BigInt::one() << (n - 1));
    GreekLetter {
        series: Series::new(order, coeffs),
    }
}

/// Exact binomial coefficient with the convention that out-of-range values
/// (`m < 0` or `m > n` for `n ≥ 0`) are zero. Negative upper index follows
/// the polynomial extension `binom(n, m) = n(n−1)…(n−m+1)/m!`.
pub fn binom(n: i64, m: i64) -> BigInt {
    if m < 0 {
        return BigInt::zero();
    }
    if n >= 0 && m > n {
        return BigInt::zero();
    }
    let mut num = BigInt::one();
    let mut den = BigInt::one();
    for i in 0..m {
        num *= BigInt::from(n - i);
        den *= BigInt::from(i + 1);
    }
    num / den
}

/// Multinomial coefficient `(a+b+c)! / (a! b! c!)`; zero when any part is
/// negative.
pub fn multinom3(a: i64, b: i64, c: i64) -> BigInt {
    if a < 0 || b < 0 || c < 0 {
        return BigInt::zero();
    }
    binom(a + b + c, a) * binom(b + c, b)
}

/// 2-adic valuation of `n!` via Legendre's formula.
fn factorial_val2(n: i64) -> i64 {
    let mut v = 0;
    let mut p = 2;
    while p <= n {
        v += n / p;
        p *= 2;
    }
    v
}

/// Parity bit of the multinomial `binom(m; s+t−m, m−s, m−t)`, zero outside
/// the range `max(s,t) ≤ m ≤ s+t`.
pub fn multinomial_parity(s: u64, t: u64, m: u64) -> u8 {
    let (s, t, m) = (s as i64, t as i64, m as i64);
    if m < s.max(t) || m > s + t {
        return 0;
    }
    let v = factorial_val2(m)
        - factorial_val2(s + t - m)
        - factorial_val2(m - s)
        - factorial_val2(m - t);
    u8::from(v == 0)
}

/// Sign helper `(−1)^e` as a BigInt.
pub fn sign_pow(e: i64) -> BigInt {
    if e.rem_euclid(2) == 0 {
        BigInt::one()
    } else {
        -BigInt::one()
    }
}
