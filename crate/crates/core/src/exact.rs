//! Exact arithmetic in the ring of rational combinations of square roots.
//!
//! A [`RadicalSum`] is a finite sum `Σ q_d √d` over distinct square-free
//! radicands `d ≥ 1`.  All coefficients that appear in the coupled basis
//! tables and Clebsch-Gordan coefficients live here.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;
use core::cmp::Ordering;
use core::fmt;
use core::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};

/// Arbitrary-precision rational, always kept in lowest terms with a positive
/// denominator.
pub type Rational = num_rational::BigRational;

/// Build a rational from two machine integers.
pub fn ratio(n: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ExactError {
    /// Square root of a negative number.
    Negative,
    /// The square root does not lie in the ring (caller should fall back to
    /// floating point).
    NotRepresentable,
    /// A square-free radicand no longer fits in 64 bits.
    RadicandOverflow,
}

impl fmt::Display for ExactError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExactError::Negative => f.write_str("square root of a negative value"),
            ExactError::NotRepresentable => {
                f.write_str("value is not representable as a sum of square roots")
            }
            ExactError::RadicandOverflow => f.write_str("radicand exceeds 64 bits"),
        }
    }
}

/// A half-integer stored as its double.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct HalfInt(i32);

impl HalfInt {
    pub const ZERO: HalfInt = HalfInt(0);

    pub const fn from_doubled(doubled: i32) -> Self {
        HalfInt(doubled)
    }

    pub const fn from_int(n: i32) -> Self {
        HalfInt(2 * n)
    }

    pub const fn doubled(self) -> i32 {
        self.0
    }

    pub const fn is_integer(self) -> bool {
        self.0 % 2 == 0
    }

    pub fn abs(self) -> Self {
        HalfInt(self.0.abs())
    }

    /// The value as an integer, if it is one.
    pub fn to_int(self) -> Option<i32> {
        if self.is_integer() {
            Some(self.0 / 2)
        } else {
            None
        }
    }

    pub fn to_f64(self) -> f64 {
        f64::from(self.0) / 2.0
    }

    /// `2j + 1`, the dimension of a spin-`j` multiplet.
    pub fn multiplicity(self) -> i32 {
        self.0 + 1
    }

    /// `(-1)^self` for integer values.
    pub fn parity_sign(self) -> i32 {
        debug_assert!(self.is_integer());
        if (self.0 / 2).rem_euclid(2) == 0 {
            1
        } else {
            -1
        }
    }
}

impl Add for HalfInt {
    type Output = HalfInt;
    fn add(self, rhs: HalfInt) -> HalfInt {
        HalfInt(self.0 + rhs.0)
    }
}

impl Sub for HalfInt {
    type Output = HalfInt;
    fn sub(self, rhs: HalfInt) -> HalfInt {
        HalfInt(self.0 - rhs.0)
    }
}

impl Neg for HalfInt {
    type Output = HalfInt;
    fn neg(self) -> HalfInt {
        HalfInt(-self.0)
    }
}

impl fmt::Display for HalfInt {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_integer() {
            write!(f, "{}", self.0 / 2)
        } else {
            write!(f, "{}/2", self.0)
        }
    }
}

/// Split `n = outer² · inner` with `inner` square-free.
pub fn square_free_split(mut n: u64) -> (u64, u64) {
    if n == 0 {
        return (0, 1);
    }
    let mut outer = 1u64;
    let mut inner = 1u64;
    let mut p = 2u64;
    while p.saturating_mul(p) <= n {
        if n.is_multiple_of(p) {
            let mut e = 0;
            while n.is_multiple_of(p) {
                n /= p;
                e += 1;
            }
            for _ in 0..e / 2 {
                outer *= p;
            }
            if e % 2 == 1 {
                inner *= p;
            }
        }
        p += if p == 2 { 1 } else { 2 };
    }
    (outer, inner * n)
}

fn square_free_split_big(n: &BigUint) -> Result<(BigUint, u64), ExactError> {
    if let Some(small) = n.to_u64() {
        let (o, i) = square_free_split(small);
        return Ok((BigUint::from(o), i));
    }
    // Peel off small primes until the cofactor fits a machine word.
    let mut rest = n.clone();
    let mut outer = BigUint::one();
    let mut inner = 1u64;
    let mut p = 2u64;
    loop {
        if let Some(small) = rest.to_u64() {
            let (o, i) = square_free_split(small);
            outer *= o;
            inner = inner.checked_mul(i).ok_or(ExactError::RadicandOverflow)?;
            return Ok((outer, inner));
        }
        let bp = BigUint::from(p);
        if &bp * &bp > rest {
            // rest is prime and too large for a radicand
            return Err(ExactError::RadicandOverflow);
        }
        let mut e = 0;
        while (&rest % &bp).is_zero() {
            rest /= &bp;
            e += 1;
        }
        for _ in 0..e / 2 {
            outer *= p;
        }
        if e % 2 == 1 {
            inner = inner.checked_mul(p).ok_or(ExactError::RadicandOverflow)?;
        }
        p += if p == 2 { 1 } else { 2 };
    }
}

/// Exact value `Σ_d q_d √d`, canonical: radicands square-free, no zero terms.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct RadicalSum {
    terms: BTreeMap<u64, Rational>,
}

impl RadicalSum {
    pub fn zero() -> Self {
        RadicalSum::default()
    }

    pub fn one() -> Self {
        RadicalSum::from_rational(Rational::one())
    }

    pub fn from_rational(q: Rational) -> Self {
        RadicalSum::term(q, 1)
    }

    pub fn from_int(n: i64) -> Self {
        RadicalSum::from_rational(Rational::from_integer(BigInt::from(n)))
    }

    /// `q √d` for an arbitrary positive `d` (reduced to square-free form).
    pub fn term(q: Rational, d: u64) -> Self {
        let mut out = RadicalSum::zero();
        if q.is_zero() || d == 0 {
            return out;
        }
        let (o, i) = square_free_split(d);
        out.terms
            .insert(i, q * Rational::from_integer(BigInt::from(o)));
        out
    }

    /// `√d` for a positive integer.
    pub fn sqrt_int(d: u64) -> Self {
        RadicalSum::term(Rational::one(), d)
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Iterate `(radicand, coefficient)` in increasing radicand order.
    pub fn terms(&self) -> impl Iterator<Item = (u64, &Rational)> {
        self.terms.iter().map(|(d, q)| (*d, q))
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    /// The value when it is rational.
    pub fn as_rational(&self) -> Option<Rational> {
        match self.terms.len() {
            0 => Some(Rational::zero()),
            1 => self.terms.get(&1).cloned(),
            _ => None,
        }
    }

    /// `(q, d)` when the value is a single term `q √d`.
    pub fn as_single_term(&self) -> Option<(Rational, u64)> {
        match self.terms.len() {
            0 => Some((Rational::zero(), 1)),
            1 => self.terms.iter().next().map(|(d, q)| (q.clone(), *d)),
            _ => None,
        }
    }

    pub fn to_f64(&self) -> f64 {
        self.terms
            .iter()
            .map(|(d, q)| q.to_f64().unwrap_or(f64::NAN) * libm::sqrt(*d as f64))
            .sum()
    }

    /// Sign of the value. Single terms are decided exactly, sums by their
    /// floating-point value.
    pub fn signum(&self) -> i32 {
        if let Some((q, _)) = self.as_single_term() {
            return if q.is_positive() {
                1
            } else if q.is_negative() {
                -1
            } else {
                0
            };
        }
        let x = self.to_f64();
        if x > 0.0 {
            1
        } else if x < 0.0 {
            -1
        } else {
            0
        }
    }

    pub fn scale(&self, q: &Rational) -> Self {
        if q.is_zero() {
            return RadicalSum::zero();
        }
        RadicalSum {
            terms: self.terms.iter().map(|(d, c)| (*d, c * q)).collect(),
        }
    }

    fn add_term(&mut self, d: u64, q: Rational) {
        if q.is_zero() {
            return;
        }
        let remove = match self.terms.get_mut(&d) {
            Some(c) => {
                *c += q;
                c.is_zero()
            }
            None => {
                self.terms.insert(d, q);
                false
            }
        };
        if remove {
            self.terms.remove(&d);
        }
    }

    /// Multiplicative inverse; available for single-term values.
    pub fn inverse(&self) -> Result<Self, ExactError> {
        match self.as_single_term() {
            Some((q, d)) if !q.is_zero() => {
                // 1/(q√d) = √d / (q d)
                let den = q * Rational::from_integer(BigInt::from(d));
                Ok(RadicalSum::term(den.recip(), d))
            }
            _ => Err(ExactError::NotRepresentable),
        }
    }

    /// Render as text, e.g. `(1/13)√91 - 2√3`.
    pub fn render(&self) -> String {
        alloc::format!("{}", self)
    }
}

/// `√q` as a single term; fails for negative input.
pub fn sqrt_rational(q: &Rational) -> Result<RadicalSum, ExactError> {
    if q.is_negative() {
        return Err(ExactError::Negative);
    }
    if q.is_zero() {
        return Ok(RadicalSum::zero());
    }
    // √(n/m) = (a / (b t)) √(s t) with n = a² s, m = b² t
    let n = q.numer().magnitude();
    let m = q.denom().magnitude();
    let (a, s) = square_free_split_big(n)?;
    let (b, t) = square_free_split_big(m)?;
    let radicand = s.checked_mul(t).ok_or(ExactError::RadicandOverflow)?;
    let coeff = Rational::new(BigInt::from(a), BigInt::from(b) * BigInt::from(t));
    let mut out = RadicalSum::zero();
    out.terms.insert(radicand, coeff);
    Ok(out)
}

fn rational_sqrt_exact(q: &Rational) -> Option<Rational> {
    if q.is_negative() {
        return None;
    }
    let n = q.numer().magnitude();
    let d = q.denom().magnitude();
    let rn = n.sqrt();
    let rd = d.sqrt();
    if &(&rn * &rn) == n && &(&rd * &rd) == d {
        Some(Rational::new(BigInt::from(rn), BigInt::from(rd)))
    } else {
        None
    }
}

/// Square root inside the ring.
///
/// Rationals always succeed.  A two-term value `a + b√d` succeeds when it
/// denests as `√x + √y` with rational `x, y`.  Everything else reports
/// [`ExactError::NotRepresentable`].
pub fn rad_sqrt(a: &RadicalSum) -> Result<RadicalSum, ExactError> {
    if let Some(q) = a.as_rational() {
        return sqrt_rational(&q);
    }
    if a.to_f64() < 0.0 {
        return Err(ExactError::Negative);
    }
    if a.terms.len() == 2 {
        let r = a.terms.get(&1).cloned();
        let other = a.terms.iter().find(|(d, _)| **d != 1);
        if let (Some(r), Some((&d, b))) = (r, other) {
            // (√x + √y)² = x + y + 2√(xy): x + y = r, 4xy = b² d
            let disc = &r * &r - b * b * Rational::from_integer(BigInt::from(d));
            if let Some(root) = rational_sqrt_exact(&disc) {
                let two = Rational::from_integer(BigInt::from(2));
                let x = (&r + &root) / &two;
                let y = (&r - &root) / &two;
                if !x.is_negative() && !y.is_negative() {
                    let sx = sqrt_rational(&x)?;
                    let sy = sqrt_rational(&y)?;
                    let cand = if b.is_negative() { sx - sy } else { sx + sy };
                    if &(&cand * &cand) == a {
                        return Ok(cand);
                    }
                }
            }
        }
    }
    Err(ExactError::NotRepresentable)
}

impl Add for RadicalSum {
    type Output = RadicalSum;
    fn add(mut self, rhs: RadicalSum) -> RadicalSum {
        self += &rhs;
        self
    }
}

impl<'a> Add<&'a RadicalSum> for &'a RadicalSum {
    type Output = RadicalSum;
    fn add(self, rhs: &RadicalSum) -> RadicalSum {
        let mut out = self.clone();
        out += rhs;
        out
    }
}

impl AddAssign<&RadicalSum> for RadicalSum {
    fn add_assign(&mut self, rhs: &RadicalSum) {
        for (d, q) in rhs.terms.iter() {
            self.add_term(*d, q.clone());
        }
    }
}

impl AddAssign for RadicalSum {
    fn add_assign(&mut self, rhs: RadicalSum) {
        for (d, q) in rhs.terms {
            self.add_term(d, q);
        }
    }
}

impl SubAssign<&RadicalSum> for RadicalSum {
    fn sub_assign(&mut self, rhs: &RadicalSum) {
        for (d, q) in rhs.terms.iter() {
            self.add_term(*d, -q.clone());
        }
    }
}

impl Sub for RadicalSum {
    type Output = RadicalSum;
    fn sub(mut self, rhs: RadicalSum) -> RadicalSum {
        self -= &rhs;
        self
    }
}

impl<'a> Sub<&'a RadicalSum> for &'a RadicalSum {
    type Output = RadicalSum;
    fn sub(self, rhs: &RadicalSum) -> RadicalSum {
        let mut out = self.clone();
        out -= rhs;
        out
    }
}

impl Neg for RadicalSum {
    type Output = RadicalSum;
    fn neg(self) -> RadicalSum {
        RadicalSum {
            terms: self.terms.into_iter().map(|(d, q)| (d, -q)).collect(),
        }
    }
}

impl RadicalSum {
    /// Product, failing when a radicand leaves `u64`.
    pub fn checked_mul(&self, rhs: &RadicalSum) -> Result<RadicalSum, ExactError> {
        let mut out = RadicalSum::zero();
        for (d1, q1) in self.terms.iter() {
            for (d2, q2) in rhs.terms.iter() {
                // √d1 √d2 = g √((d1/g)(d2/g)), g = gcd(d1, d2)
                let g = d1.gcd(d2);
                let rad = (d1 / g)
                    .checked_mul(d2 / g)
                    .ok_or(ExactError::RadicandOverflow)?;
                let c = q1 * q2 * Rational::from_integer(BigInt::from(g));
                out.add_term(rad, c);
            }
        }
        Ok(out)
    }
}

/// Panics when a radicand leaves `u64`; see [`RadicalSum::checked_mul`].
impl<'a> Mul<&'a RadicalSum> for &'a RadicalSum {
    type Output = RadicalSum;
    fn mul(self, rhs: &RadicalSum) -> RadicalSum {
        self.checked_mul(rhs)
            .expect("radicand product overflows u64")
    }
}

impl Mul for RadicalSum {
    type Output = RadicalSum;
    fn mul(self, rhs: RadicalSum) -> RadicalSum {
        &self * &rhs
    }
}

impl PartialOrd for RadicalSum {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        let diff = self - other;
        Some(diff.signum().cmp(&0))
    }
}

impl fmt::Display for RadicalSum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return f.write_str("0");
        }
        for (i, (d, q)) in self.terms.iter().enumerate() {
            let neg = q.is_negative();
            if i == 0 {
                if neg {
                    f.write_str("-")?;
                }
            } else {
                f.write_str(if neg { " - " } else { " + " })?;
            }
            let a = q.abs();
            let whole = a.is_integer();
            match (*d, whole, a.is_one()) {
                (1, _, _) => write!(f, "{}", a)?,
                (d, _, true) => write!(f, "√{}", d)?,
                (d, true, false) => write!(f, "{}√{}", a, d)?,
                (d, false, false) => write!(f, "({})√{}", a, d)?,
            }
        }
        Ok(())
    }
}

/// Parse the textual forms used in coefficient tables:
/// `p`, `p/q`, `sqrt(p/q)`, `c*sqrt(p/q)`, `c/sqrt(n)`, with optional sign.
pub fn parse_radical(text: &str) -> Option<RadicalSum> {
    let s: String = text.chars().filter(|c| !c.is_whitespace()).collect();
    let (neg, body) = match s.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, s.strip_prefix('+').unwrap_or(&s)),
    };
    let value = if let Some(idx) = body.find("sqrt(") {
        let head = &body[..idx];
        let inner = body[idx + 5..].strip_suffix(')')?;
        let root = sqrt_rational(&parse_rational(inner)?).ok()?;
        match head {
            "" => root,
            h if h.ends_with('*') => root.scale(&parse_rational(&h[..h.len() - 1])?),
            h if h.ends_with('/') => root
                .inverse()
                .ok()?
                .scale(&parse_rational(&h[..h.len() - 1])?),
            _ => return None,
        }
    } else {
        RadicalSum::from_rational(parse_rational(body)?)
    };
    Some(if neg { -value } else { value })
}

fn parse_rational(s: &str) -> Option<Rational> {
    let mut parts = s.splitn(2, '/');
    let n: BigInt = parts.next()?.parse().ok()?;
    let d: BigInt = match parts.next() {
        Some(p) => p.parse().ok()?,
        None => BigInt::one(),
    };
    if d.is_zero() {
        return None;
    }
    Some(Rational::new(n, d))
}

/// Exact terms as `(numerator, denominator, radicand)` triples.
pub fn to_triples(r: &RadicalSum) -> Vec<(BigInt, BigInt, u64)> {
    r.terms()
        .map(|(d, q)| (q.numer().clone(), q.denom().clone(), d))
        .collect()
}
