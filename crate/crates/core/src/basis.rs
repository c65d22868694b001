//! Coupled (non-orthonormal) basis of an so(5) irrep in an SO(3) basis.
//!
//! A state `|(vf) τ L⟩` is encoded by its coefficient table
//! `b_{mK}(τL)`: the overlap with the highest-grade state `m` times the
//! rotation-matrix label `K`.  Tables for `(v,0)` and `(0,f)` are built by
//! coupling copies of the two fundamental irreps; generic irreps couple one
//! table of each kind.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;
use core::fmt;

use num_bigint::BigInt;
use num_traits::One;

use crate::angular::CgCache;
use crate::branching::{
    l_content, l_content_0f, l_content_v0, BranchingError, IrrepLabel, LContent,
};
use crate::exact::{ratio, ExactError, HalfInt, RadicalSum, Rational};
use crate::scalar::Scalar;

/// Table key `(m, K)`.
pub type MK = (HalfInt, HalfInt);

/// Coefficients `{(m, K) → value}` of one `(τ, L)` level.
#[derive(Clone, Debug, PartialEq)]
pub struct CoeffTable<S> {
    pub irrep: IrrepLabel,
    pub l: HalfInt,
    pub tau: usize,
    pub entries: BTreeMap<MK, S>,
}

impl<S: Scalar> CoeffTable<S> {
    pub fn get(&self, m: HalfInt, k: HalfInt) -> Option<&S> {
        self.entries.get(&(m, k))
    }

    /// Euclidean pairing `Σ_{mK} x_{mK} y_{mK}`.
    pub fn dot(&self, other: &CoeffTable<S>) -> S {
        dot(&self.entries, &other.entries)
    }

    pub fn norm_sq(&self) -> S {
        self.dot(self)
    }

    /// Entries in scan order: `m` descending, then `K` descending.
    pub fn scan(&self) -> impl Iterator<Item = (&MK, &S)> {
        self.entries.iter().rev()
    }

    pub fn to_f64(&self) -> CoeffTable<f64> {
        CoeffTable {
            irrep: self.irrep,
            l: self.l,
            tau: self.tau,
            entries: self.entries.iter().map(|(k, x)| (*k, x.to_f64())).collect(),
        }
    }
}

fn dot<S: Scalar>(a: &BTreeMap<MK, S>, b: &BTreeMap<MK, S>) -> S {
    try_dot(a, b).expect("radicand product overflows u64")
}

fn try_dot<S: Scalar>(a: &BTreeMap<MK, S>, b: &BTreeMap<MK, S>) -> Result<S, ExactError> {
    let (small, large) = if a.len() <= b.len() { (a, b) } else { (b, a) };
    let mut acc = S::zero();
    for (k, x) in small {
        if let Some(y) = large.get(k) {
            acc = acc.add(&x.try_mul(y)?);
        }
    }
    Ok(acc)
}

/// All levels of one irrep, keyed by `L`, each list ordered by `τ`.
#[derive(Clone, Debug, PartialEq)]
pub struct BasisSet<S> {
    pub irrep: IrrepLabel,
    pub levels: BTreeMap<HalfInt, Vec<CoeffTable<S>>>,
}

impl<S: Scalar> BasisSet<S> {
    pub fn content(&self) -> LContent {
        self.levels
            .iter()
            .map(|(l, v)| (*l, v.len() as u32))
            .collect()
    }

    pub fn level(&self, l: HalfInt) -> &[CoeffTable<S>] {
        self.levels.get(&l).map(|v| v.as_slice()).unwrap_or(&[])
    }

    /// `(L, τ)` for every state, `L` ascending.
    pub fn states(&self) -> Vec<(HalfInt, usize)> {
        self.levels
            .iter()
            .flat_map(|(l, v)| (0..v.len()).map(move |t| (*l, t)))
            .collect()
    }

    pub fn to_f64(&self) -> BasisSet<f64> {
        BasisSet {
            irrep: self.irrep,
            levels: self
                .levels
                .iter()
                .map(|(l, v)| (*l, v.iter().map(|t| t.to_f64()).collect()))
                .collect(),
        }
    }
}

/// Outcome of [`build_basis`]: exact when every normalization stayed inside
/// the radical ring, otherwise computed in double precision.
#[derive(Clone, Debug, PartialEq)]
pub enum Basis {
    Exact(BasisSet<RadicalSum>),
    Inexact {
        basis: BasisSet<f64>,
        reason: ExactError,
    },
}

impl Basis {
    pub fn is_exact(&self) -> bool {
        matches!(self, Basis::Exact(_))
    }

    pub fn irrep(&self) -> IrrepLabel {
        match self {
            Basis::Exact(b) => b.irrep,
            Basis::Inexact { basis, .. } => basis.irrep,
        }
    }

    pub fn content(&self) -> LContent {
        match self {
            Basis::Exact(b) => b.content(),
            Basis::Inexact { basis, .. } => basis.content(),
        }
    }

    pub fn to_f64(&self) -> BasisSet<f64> {
        match self {
            Basis::Exact(b) => b.to_f64(),
            Basis::Inexact { basis, .. } => basis.clone(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum BasisError {
    /// An exact normalization left the ring.
    Exact(ExactError),
    /// Requested `L` violates `|L_A - L_B| ≤ L ≤ L_A + L_B`.
    Triangle {
        la: HalfInt,
        lb: HalfInt,
        l: HalfInt,
    },
    /// Candidates ran out before reaching the branching multiplicity.
    MultiplicityShortfall {
        irrep: IrrepLabel,
        l: HalfInt,
        found: usize,
        expected: u32,
    },
    Branching(BranchingError),
}

impl fmt::Display for BasisError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BasisError::Exact(e) => write!(f, "{}", e),
            BasisError::Triangle { la, lb, l } => {
                write!(f, "L = {} cannot couple {} and {}", l, la, lb)
            }
            BasisError::MultiplicityShortfall {
                irrep,
                l,
                found,
                expected,
            } => write!(
                f,
                "irrep {}: only {} of {} independent states at L = {}",
                irrep, found, expected, l
            ),
            BasisError::Branching(e) => write!(f, "{}", e),
        }
    }
}

impl From<ExactError> for BasisError {
    fn from(e: ExactError) -> Self {
        BasisError::Exact(e)
    }
}

impl From<BranchingError> for BasisError {
    fn from(e: BranchingError) -> Self {
        BasisError::Branching(e)
    }
}

fn h(x: i32) -> HalfInt {
    HalfInt::from_doubled(x)
}

/// The five-dimensional irrep `(1,0)`: `L = 2`, `b_{0,2} = b_{0,-1} = 1/√2`.
pub fn fundamental_10<S: Scalar>() -> CoeffTable<S> {
    let c = S::sqrt_of(&ratio(1, 2)).expect("positive");
    let mut entries = BTreeMap::new();
    entries.insert((h(0), h(4)), c.clone());
    entries.insert((h(0), h(-2)), c);
    CoeffTable {
        irrep: IrrepLabel::new(1, 0),
        l: h(4),
        tau: 0,
        entries,
    }
}

/// The four-dimensional irrep `(0,1/2)`: `L = 3/2`.
pub fn fundamental_0half<S: Scalar>() -> CoeffTable<S> {
    let half = S::from_radical(&RadicalSum::from_rational(ratio(1, 2)));
    let mut entries = BTreeMap::new();
    entries.insert((h(1), h(3)), half.clone());
    entries.insert((h(1), h(-3)), half.neg());
    entries.insert((h(-1), h(1)), S::sqrt_of(&ratio(1, 2)).expect("positive"));
    CoeffTable {
        irrep: IrrepLabel::new(0, 1),
        l: h(3),
        tau: 0,
        entries,
    }
}

fn factorial(n: i32) -> BigInt {
    (2..=n).fold(BigInt::one(), |acc, k| acc * k)
}

/// Squared weight of `ξ_{m1} ⊙ ξ_{m2}` inside `ξ_m`, as an exact rational.
fn xi_factor_sq(ia: IrrepLabel, ma: HalfInt, ib: IrrepLabel, mb: HalfInt) -> Rational {
    let (fa, fb) = (ia.two_f as i32, ib.two_f as i32);
    let (va, vb) = (ia.v as i32, ib.v as i32);
    let (f, m, v) = (fa + fb, ma.doubled() + mb.doubled(), va + vb);
    let hf = |x: i32| factorial(x / 2);
    let num = hf(f + m) * hf(f - m) * factorial(v);
    let den = hf(fa + ma.doubled())
        * hf(fa - ma.doubled())
        * hf(fb + mb.doubled())
        * hf(fb - mb.doubled())
        * factorial(va)
        * factorial(vb);
    Rational::new(num, den)
}

/// Unnormalized coupled product `[A ⊙ B]_L`:
///
/// `c_{mK} = Σ ξ · b^A_{m1K1} b^B_{m2K2} · (L_B K2, L_A K1 | L K)`
///
/// over `m1 + m2 = m`, `K1 + K2 = K`.  The result belongs to the irrep
/// `(v_A + v_B, f_A + f_B)` and may vanish identically.
pub fn model_product<S: Scalar>(
    a: &CoeffTable<S>,
    b: &CoeffTable<S>,
    l: HalfInt,
    cache: &mut CgCache,
) -> Result<CoeffTable<S>, BasisError> {
    let (la, lb) = (a.l.doubled(), b.l.doubled());
    let ld = l.doubled();
    if ld < (la - lb).abs() || ld > la + lb || (la + lb + ld) % 2 != 0 {
        return Err(BasisError::Triangle {
            la: a.l,
            lb: b.l,
            l,
        });
    }
    let irrep = IrrepLabel::new(a.irrep.v + b.irrep.v, a.irrep.two_f + b.irrep.two_f);
    let mut xi: BTreeMap<(HalfInt, HalfInt), S> = BTreeMap::new();
    let mut out: BTreeMap<MK, S> = BTreeMap::new();
    for ((m1, k1), x) in &a.entries {
        for ((m2, k2), y) in &b.entries {
            let k = *k1 + *k2;
            if k.doubled().abs() > ld {
                continue;
            }
            let c = cache.get(lb, k2.doubled(), la, k1.doubled(), ld, k.doubled());
            if c.is_zero() {
                continue;
            }
            let c = S::from_radical(c);
            let w = match xi.get(&(*m1, *m2)) {
                Some(w) => w.clone(),
                None => {
                    let w = S::sqrt_of(&xi_factor_sq(a.irrep, *m1, b.irrep, *m2))?;
                    xi.insert((*m1, *m2), w.clone());
                    w
                }
            };
            let term = w.try_mul(x)?.try_mul(y)?.try_mul(&c)?;
            let key = (*m1 + *m2, k);
            let entry = out.entry(key).or_insert_with(S::zero);
            *entry = entry.add(&term);
        }
    }
    let scale = out.values().map(|x| x.to_f64().abs()).fold(0.0, f64::max);
    out.retain(|_, x| !x.negligible(scale));
    Ok(CoeffTable {
        irrep,
        l,
        tau: 0,
        entries: out,
    })
}

/// Order in which coupled candidates are offered to Gram-Schmidt.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum CandidateOrder {
    /// Source levels by `L` descending, `τ` ascending.
    #[default]
    Standard,
    /// The standard list reversed; used to probe gauge independence.
    Reversed,
}

/// Project `cand` off the accepted orthonormal tables, normalize, and apply
/// the leading-positive phase.  `None` when the candidate is dependent.
fn gram_schmidt_step<S: Scalar>(
    accepted: &[CoeffTable<S>],
    cand: &CoeffTable<S>,
) -> Result<Option<BTreeMap<MK, S>>, ExactError> {
    let scale = try_dot(&cand.entries, &cand.entries)?.to_f64();
    if scale == 0.0 {
        return Ok(None);
    }
    let mut r = cand.entries.clone();
    for e in accepted {
        let p = try_dot(&r, &e.entries)?;
        if p.negligible(scale) {
            continue;
        }
        for (k, x) in &e.entries {
            let cur = r.entry(*k).or_insert_with(S::zero);
            *cur = cur.sub(&p.try_mul(x)?);
        }
    }
    let amp = libm::sqrt(scale);
    r.retain(|_, x| !x.negligible(amp));
    let n2 = try_dot(&r, &r)?;
    let dependent = if S::EXACT {
        r.is_empty()
    } else {
        n2.to_f64() <= 1e-18 * scale
    };
    if dependent {
        return Ok(None);
    }
    let inv = n2.inv_sqrt()?;
    let mut out = BTreeMap::new();
    for (k, x) in r {
        out.insert(k, x.try_mul(&inv)?);
    }
    let lead = out
        .values()
        .rev()
        .map(|x| x.signum())
        .find(|s| *s != 0)
        .unwrap_or(1);
    if lead < 0 {
        for x in out.values_mut() {
            *x = x.neg();
        }
    }
    Ok(Some(out))
}

/// Accept candidates for each target `L` until its multiplicity is reached.
fn select_levels<S: Scalar>(
    irrep: IrrepLabel,
    target: &LContent,
    sources_a: &[CoeffTable<S>],
    sources_b: &[CoeffTable<S>],
    order: CandidateOrder,
    cache: &mut CgCache,
) -> Result<BTreeMap<HalfInt, Vec<CoeffTable<S>>>, BasisError> {
    let mut out = BTreeMap::new();
    for (&l, &mult) in target {
        let mut pairs: Vec<(usize, usize)> = Vec::new();
        for (i, a) in sources_a.iter().enumerate() {
            for (j, b) in sources_b.iter().enumerate() {
                let (la, lb, ld) = (a.l.doubled(), b.l.doubled(), l.doubled());
                if ld >= (la - lb).abs() && ld <= la + lb && (la + lb + ld) % 2 == 0 {
                    pairs.push((i, j));
                }
            }
        }
        if order == CandidateOrder::Reversed {
            pairs.reverse();
        }
        let mut accepted: Vec<CoeffTable<S>> = Vec::new();
        for (i, j) in pairs {
            if accepted.len() == mult as usize {
                break;
            }
            let cand = model_product(&sources_a[i], &sources_b[j], l, cache)?;
            if let Some(entries) = gram_schmidt_step(&accepted, &cand)? {
                accepted.push(CoeffTable {
                    irrep,
                    l,
                    tau: accepted.len(),
                    entries,
                });
            }
        }
        if accepted.len() < mult as usize {
            return Err(BasisError::MultiplicityShortfall {
                irrep,
                l,
                found: accepted.len(),
                expected: mult,
            });
        }
        out.insert(l, accepted);
    }
    Ok(out)
}

/// Flatten levels into source order: `L` descending, `τ` ascending.
fn source_order<S: Clone>(levels: &BTreeMap<HalfInt, Vec<CoeffTable<S>>>) -> Vec<CoeffTable<S>> {
    levels
        .iter()
        .rev()
        .flat_map(|(_, v)| v.iter().cloned())
        .collect()
}

#[derive(Clone, Copy)]
enum Chain {
    Seniority,
    Spinor,
}

/// Left fold of `n` copies of a fundamental irrep.
fn build_chain<S: Scalar>(
    chain: Chain,
    n: u32,
    order: CandidateOrder,
    cache: &mut CgCache,
) -> Result<BasisSet<S>, BasisError> {
    let base = match chain {
        Chain::Seniority => fundamental_10::<S>(),
        Chain::Spinor => fundamental_0half::<S>(),
    };
    let mut irrep = base.irrep;
    let mut levels = BTreeMap::new();
    levels.insert(base.l, alloc::vec![base.clone()]);
    for _ in 1..n {
        let next = IrrepLabel::new(irrep.v + base.irrep.v, irrep.two_f + base.irrep.two_f);
        let target = match chain {
            Chain::Seniority => l_content_v0(next.v),
            Chain::Spinor => l_content_0f(next.two_f),
        };
        let sources = source_order(&levels);
        levels = select_levels(
            next,
            &target,
            &sources,
            core::slice::from_ref(&base),
            order,
            cache,
        )?;
        irrep = next;
    }
    Ok(BasisSet { irrep, levels })
}

fn trivial<S: Scalar>() -> BasisSet<S> {
    let mut entries = BTreeMap::new();
    entries.insert((h(0), h(0)), S::from_radical(&RadicalSum::one()));
    let irrep = IrrepLabel::new(0, 0);
    let mut levels = BTreeMap::new();
    levels.insert(
        h(0),
        alloc::vec![CoeffTable {
            irrep,
            l: h(0),
            tau: 0,
            entries
        }],
    );
    BasisSet { irrep, levels }
}

/// Build the coupled basis over a chosen scalar type.
pub fn build_basis_with<S: Scalar>(
    irrep: IrrepLabel,
    order: CandidateOrder,
) -> Result<BasisSet<S>, BasisError> {
    let mut cache = CgCache::new();
    match (irrep.v, irrep.two_f) {
        (0, 0) => Ok(trivial()),
        (v, 0) => build_chain(Chain::Seniority, v, order, &mut cache),
        (0, t) => build_chain(Chain::Spinor, t, order, &mut cache),
        (v, t) => {
            let seniority = build_chain::<S>(Chain::Seniority, v, order, &mut cache)?;
            let spinor = build_chain::<S>(Chain::Spinor, t, order, &mut cache)?;
            let target = l_content(irrep)?;
            let levels = select_levels(
                irrep,
                &target,
                &source_order(&seniority.levels),
                &source_order(&spinor.levels),
                order,
                &mut cache,
            )?;
            Ok(BasisSet { irrep, levels })
        }
    }
}

/// Build the basis exactly, falling back to double precision when a
/// normalization leaves the radical ring.
pub fn build_basis(irrep: IrrepLabel) -> Result<Basis, BasisError> {
    build_basis_ordered(irrep, CandidateOrder::Standard)
}

pub fn build_basis_ordered(irrep: IrrepLabel, order: CandidateOrder) -> Result<Basis, BasisError> {
    match build_basis_with::<RadicalSum>(irrep, order) {
        Ok(b) => Ok(Basis::Exact(b)),
        Err(BasisError::Exact(reason)) => Ok(Basis::Inexact {
            basis: build_basis_with::<f64>(irrep, order)?,
            reason,
        }),
        Err(e) => Err(e),
    }
}

/// `K - m` residue every table entry of `(v, f)` shares, modulo 3.
pub fn residue(irrep: IrrepLabel) -> i32 {
    // 2(v + f) = 2v + 2f
    ((2 * irrep.v + irrep.two_f) % 3) as i32
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::sqrt_rational;

    fn sq(n: i64, d: i64) -> RadicalSum {
        sqrt_rational(&ratio(n, d)).unwrap()
    }

    fn normalized(t: &CoeffTable<RadicalSum>) -> BTreeMap<MK, RadicalSum> {
        gram_schmidt_step(&[], t).unwrap().unwrap()
    }

    #[test]
    fn fundamentals_are_normalized() {
        let a = fundamental_10::<RadicalSum>();
        assert_eq!(a.norm_sq(), RadicalSum::one());
        let b = fundamental_0half::<RadicalSum>();
        assert_eq!(b.norm_sq(), RadicalSum::one());
        for t in [&a, &b] {
            for (m, k) in t.entries.keys() {
                assert_eq!(
                    ((k.doubled() - m.doubled()) / 2).rem_euclid(3),
                    residue(t.irrep)
                );
            }
        }
    }

    #[test]
    fn twenty_products() {
        let f = fundamental_10::<RadicalSum>();
        let mut cache = CgCache::new();
        let l2 = normalized(&model_product(&f, &f, h(4), &mut cache).unwrap());
        assert_eq!(l2.get(&(h(0), h(8))), None);
        assert_eq!(l2[&(h(0), h(2))], RadicalSum::term(ratio(2, 5), 5));
        assert_eq!(l2[&(h(0), h(-4))], RadicalSum::term(ratio(-1, 5), 5));

        let l4 = normalized(&model_product(&f, &f, h(8), &mut cache).unwrap());
        assert_eq!(l4[&(h(0), h(8))], sq(7, 13));
        assert_eq!(l4[&(h(0), h(2))], sq(2, 13));
        assert_eq!(l4[&(h(0), h(-4))], RadicalSum::term(ratio(2, 13), 13));

        let l3 = model_product(&f, &f, h(6), &mut cache).unwrap();
        assert!(l3.entries.is_empty());
    }

    #[test]
    fn triangle_violation() {
        let f = fundamental_10::<RadicalSum>();
        let mut cache = CgCache::new();
        assert!(matches!(
            model_product(&f, &f, h(10), &mut cache),
            Err(BasisError::Triangle { .. })
        ));
    }

    #[test]
    fn single_fold_is_fundamental() {
        let b = build_basis_with::<RadicalSum>(IrrepLabel::new(1, 0), CandidateOrder::Standard)
            .unwrap();
        assert_eq!(b.levels.len(), 1);
        assert_eq!(b.levels[&h(4)][0], fundamental_10());
    }

    #[test]
    fn eleven_at_four() {
        let b = build_basis_with::<RadicalSum>(IrrepLabel::new(1, 2), CandidateOrder::Standard)
            .unwrap();
        let t = &b.levels[&h(8)][0];
        // m = 0 row, K - m = 4, 1, -2
        assert_eq!(t.entries[&(h(0), h(8))], sq(7, 829).scale(&ratio(-4, 1)));
        assert_eq!(t.entries[&(h(0), h(2))], sq(2, 829).scale(&ratio(11, 1)));
        assert_eq!(t.entries[&(h(0), h(-4))], sq(1, 829).scale(&ratio(-2, 1)));
    }

    #[test]
    fn zero_three_halves_at_nine_halves() {
        let b = build_basis_with::<RadicalSum>(IrrepLabel::new(0, 3), CandidateOrder::Standard)
            .unwrap();
        let t = &b.levels[&h(9)][0];
        // m = 3/2 row, K - m = 3, 0, -3, -6
        let row: Vec<RadicalSum> = [9, 3, -3, -9]
            .iter()
            .map(|k| t.entries.get(&(h(3), h(*k))).cloned().unwrap_or_default())
            .collect();
        assert_eq!(row[0], sq(7, 328).scale(&ratio(2, 1)));
        assert_eq!(row[1], -sq(3, 328));
        assert_eq!(row[2], sq(3, 328));
        assert_eq!(row[3], sq(7, 328).scale(&ratio(-2, 1)));
    }

    #[test]
    fn float_build_agrees_with_exact() {
        for (v, t) in [(1, 1), (2, 1), (1, 3), (0, 3)] {
            let irrep = IrrepLabel::new(v, t);
            let exact = build_basis_with::<RadicalSum>(irrep, CandidateOrder::Standard).unwrap();
            let float = build_basis_with::<f64>(irrep, CandidateOrder::Standard).unwrap();
            for (l, levels) in &exact.levels {
                for (a, b) in levels.iter().zip(&float.levels[l]) {
                    for (k, x) in &a.entries {
                        let y = b.entries.get(k).copied().unwrap_or(0.0);
                        assert!((x.to_f64() - y).abs() < 1e-12);
                    }
                }
            }
        }
    }

    #[test]
    fn xi_weights() {
        // (0,1/2) ⊙ (0,1/2) into (0,1)
        let half = IrrepLabel::new(0, 1);
        assert_eq!(xi_factor_sq(half, h(-1), half, h(1)), ratio(1, 1));
        assert_eq!(xi_factor_sq(half, h(1), half, h(1)), ratio(2, 1));
    }
}
