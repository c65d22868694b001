//! Octupole action on the coupled basis.
//!
//! `M` maps a source label `(m, K, L)` to target labels `(m', K', L')`;
//! contracting it with source and target coefficient tables gives the
//! (non-unitary) SO(3)-reduced octupole blocks.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use num_bigint::BigInt;

use crate::angular::{ladder_factor, CgCache, Ladder};
use crate::basis::{BasisSet, MK};
use crate::branching::{IrrepLabel, LContent};
use crate::exact::{sqrt_rational, ExactError, HalfInt, RadicalSum, Rational};
use crate::scalar::Scalar;

/// Source `(m, K, L)` and target `(m', K', L')` of an `M` entry.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct MEntryKey {
    pub m: HalfInt,
    pub k: HalfInt,
    pub l: HalfInt,
    pub m_target: HalfInt,
    pub k_target: HalfInt,
    pub l_target: HalfInt,
}

/// `(Δm, ΔK)` steps with nonzero entries, doubled.
pub const PATTERNS: [(i32, i32); 6] = [(0, 0), (2, 2), (-2, 4), (0, 6), (2, -4), (0, -6)];

/// `x / 2` as a rational.
fn half(x: i32) -> Rational {
    Rational::new(BigInt::from(x), BigInt::from(2))
}

fn int(x: i64) -> Rational {
    Rational::from_integer(BigInt::from(x))
}

fn root(q: Rational) -> RadicalSum {
    // arguments are products of non-negative factors at valid labels
    sqrt_rational(&q).unwrap_or_default()
}

/// `√5 · q`.
fn root5(q: Rational) -> RadicalSum {
    RadicalSum::term(q, 5)
}

/// All nonzero `M` entries leaving the source `(m, K, L)` towards `L'`.
///
/// Targets outside `|m'| ≤ f`, `|K'| ≤ L'` are dropped.
pub fn m_row(
    irrep: IrrepLabel,
    m: HalfInt,
    k: HalfInt,
    l: HalfInt,
    l_target: HalfInt,
    cache: &mut CgCache,
) -> Vec<(MK, RadicalSum)> {
    let (md, kd, ld, lt) = (m.doubled(), k.doubled(), l.doubled(), l_target.doubled());
    let v = irrep.v as i32;
    let fd = irrep.two_f as i32;
    let mut out = Vec::new();
    if (ld - lt).abs() > 6 || kd.abs() > ld || md.abs() > fd {
        return out;
    }
    // (L K1, 3 μ | L' Kt), all doubled
    let mut c = |k1: i32, mu: i32, kt: i32| cache.get(ld, k1, 6, 2 * mu, lt, kt).clone();
    let third = Rational::new(BigInt::from(1), BigInt::from(3));

    // diagonal: (m, K) → (m, K)
    {
        // (1/3)(5v + 5f - 5m - K)
        let coeff = &third * (int(5 * v as i64) + half(5 * fd - 5 * md - kd));
        let mut x = c(kd, 0, kd).scale(&coeff);
        // -(1/2)√(3(L+K)(L-K+1)) (L K-1, 3 1 | L' K)
        let lower = int(3) * half(ld + kd) * half(ld - kd + 2);
        x -= &(&root(lower) * &c(kd - 2, 1, kd)).scale(&half(1));
        // -√((1/3)(L-K)(L+K+1)) (L K+1, 3 -1 | L' K)
        let raise = &third * half(ld - kd) * half(ld + kd + 2);
        x -= &(&root(raise) * &c(kd + 2, -1, kd));
        out.push(((m, k), x));
    }
    // (m+1, K+1): (5/2)√((1/2)(f-m)(f+m+1)) (L K, 3 1 | L' K+1)
    {
        let r = half(1) * half(fd - md) * half(fd + md + 2);
        let x = (&root(r) * &c(kd, 1, kd + 2)).scale(&half(5));
        out.push((
            (m + HalfInt::from_doubled(2), k + HalfInt::from_doubled(2)),
            x,
        ));
    }
    // (m-1, K+2): -√(5(f+m)(f-m+1)) (L K, 3 2 | L' K+2)
    {
        let r = int(5) * half(fd + md) * half(fd - md + 2);
        let x = -(&root(r) * &c(kd, 2, kd + 4));
        out.push((
            (m - HalfInt::from_doubled(2), k + HalfInt::from_doubled(4)),
            x,
        ));
    }
    // (m, K+3): √((5/6)(L-K)(L+K+1)) (L K+1, 3 2 | L' K+3) - (√5/3)(2v+2f+m-K) (L K, 3 3 | L' K+3)
    {
        let r = Rational::new(BigInt::from(5), BigInt::from(6)) * half(ld - kd) * half(ld + kd + 2);
        let mut x = &root(r) * &c(kd + 2, 2, kd + 6);
        let lin = &third * (int(2 * v as i64) + half(2 * fd + md - kd));
        x -= &(&root5(lin) * &c(kd, 3, kd + 6));
        out.push(((m, k + HalfInt::from_doubled(6)), x));
    }
    // (m+1, K-2): -(1/2)√(5(f-m)(f+m+1)) (L K, 3 -2 | L' K-2)
    {
        let r = int(5) * half(fd - md) * half(fd + md + 2);
        let x = -(&root(r) * &c(kd, -2, kd - 4)).scale(&half(1));
        out.push((
            (m + HalfInt::from_doubled(2), k - HalfInt::from_doubled(4)),
            x,
        ));
    }
    // (m, K-3): (√5/3)(v+f+2m+K) (L K, 3 -3 | L' K-3)
    {
        let lin = &third * (int(v as i64) + half(fd + 2 * md + kd));
        let x = &root5(lin) * &c(kd, -3, kd - 6);
        out.push(((m, k - HalfInt::from_doubled(6)), x));
    }
    out.retain(|((mt, kt), x)| {
        !x.is_zero() && mt.doubled().abs() <= fd && kt.doubled().abs() <= lt
    });
    out
}

/// A single `M` entry; zero for steps outside the six patterns.
pub fn m_entry(irrep: IrrepLabel, key: &MEntryKey, cache: &mut CgCache) -> RadicalSum {
    m_row(irrep, key.m, key.k, key.l, key.l_target, cache)
        .into_iter()
        .find(|((mt, kt), _)| *mt == key.m_target && *kt == key.k_target)
        .map(|(_, x)| x)
        .unwrap_or_default()
}

/// Reduced octupole block between two levels, indexed `[target τ][source τ]`.
#[derive(Clone, Debug, PartialEq)]
pub struct OBlock<S> {
    pub irrep: IrrepLabel,
    pub l_source: HalfInt,
    pub l_target: HalfInt,
    pub matrix: Vec<Vec<S>>,
}

impl<S: Scalar> OBlock<S> {
    pub fn is_zero(&self) -> bool {
        self.matrix.iter().flatten().all(|x| x.negligible(1.0))
    }

    pub fn to_f64(&self) -> OBlock<f64> {
        OBlock {
            irrep: self.irrep,
            l_source: self.l_source,
            l_target: self.l_target,
            matrix: self
                .matrix
                .iter()
                .map(|r| r.iter().map(|x| x.to_f64()).collect())
                .collect(),
        }
    }
}

/// Row key `(m, K, L, L')`.
type RowKey = (HalfInt, HalfInt, HalfInt, HalfInt);

/// Memoized `M` rows.
#[derive(Default)]
pub struct MRows {
    cg: CgCache,
    rows: BTreeMap<RowKey, Vec<(MK, RadicalSum)>>,
}

impl MRows {
    pub fn new() -> Self {
        MRows::default()
    }

    pub fn row(
        &mut self,
        irrep: IrrepLabel,
        m: HalfInt,
        k: HalfInt,
        l: HalfInt,
        lt: HalfInt,
    ) -> &[(MK, RadicalSum)] {
        let cg = &mut self.cg;
        self.rows
            .entry((m, k, l, lt))
            .or_insert_with(|| m_row(irrep, m, k, l, lt, cg))
    }
}

/// `𝒪_{σ L', τ L} = Σ b_{mK}(τ L) M_{mKL, m'K'L'} b_{m'K'}(σ L')`.
///
/// Fails only when exact arithmetic leaves the radical ring.
pub fn o_block<S: Scalar>(
    basis: &BasisSet<S>,
    l_source: HalfInt,
    l_target: HalfInt,
    rows: &mut MRows,
) -> Result<OBlock<S>, ExactError> {
    let sources = basis.level(l_source);
    let targets = basis.level(l_target);
    let mut matrix = alloc::vec![alloc::vec![S::zero(); sources.len()]; targets.len()];
    if (l_source.doubled() - l_target.doubled()).abs() <= 6 {
        for (j, src) in sources.iter().enumerate() {
            let mut image: BTreeMap<MK, S> = BTreeMap::new();
            for ((m, k), b) in &src.entries {
                for (key, x) in rows.row(basis.irrep, *m, *k, l_source, l_target) {
                    let e = image.entry(*key).or_insert_with(S::zero);
                    *e = e.add(&b.try_mul(&S::from_radical(x))?);
                }
            }
            for (i, tgt) in targets.iter().enumerate() {
                let mut acc = S::zero();
                for (key, x) in &image {
                    if let Some(y) = tgt.entries.get(key) {
                        acc = acc.add(&x.try_mul(y)?);
                    }
                }
                matrix[i][j] = acc;
            }
        }
    }
    Ok(OBlock {
        irrep: basis.irrep,
        l_source,
        l_target,
        matrix,
    })
}

/// Every block with `|L - L'| ≤ 3`, keyed `(L_source, L_target)`.
pub fn o_blocks<S: Scalar>(
    basis: &BasisSet<S>,
) -> Result<BTreeMap<(HalfInt, HalfInt), OBlock<S>>, ExactError> {
    let mut rows = MRows::new();
    let ls: Vec<HalfInt> = basis.levels.keys().copied().collect();
    let mut out = BTreeMap::new();
    for &ls_ in &ls {
        for &lt in &ls {
            if (ls_.doubled() - lt.doubled()).abs() <= 6 {
                out.insert((ls_, lt), o_block(basis, ls_, lt, &mut rows)?);
            }
        }
    }
    Ok(out)
}

/// Sparse exact matrix.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct SparseMatrix {
    pub dim: usize,
    pub entries: BTreeMap<(usize, usize), RadicalSum>,
}

impl SparseMatrix {
    pub fn get(&self, row: usize, col: usize) -> RadicalSum {
        self.entries.get(&(row, col)).cloned().unwrap_or_default()
    }

    /// Exact product.
    pub fn mul(&self, other: &SparseMatrix) -> SparseMatrix {
        let mut out = SparseMatrix {
            dim: self.dim,
            entries: BTreeMap::new(),
        };
        for (&(i, k), a) in &self.entries {
            for (&(_, j), b) in other.entries.range((k, 0)..(k + 1, 0)) {
                let e = out.entries.entry((i, j)).or_default();
                *e += a * b;
            }
        }
        out.entries.retain(|_, x| !x.is_zero());
        out
    }

    pub fn add(&self, other: &SparseMatrix) -> SparseMatrix {
        let mut out = self.clone();
        for (k, x) in &other.entries {
            *out.entries.entry(*k).or_default() += x;
        }
        out.entries.retain(|_, x| !x.is_zero());
        out
    }
}

/// Angular momentum operators on the `(L, τ, M)` index set.
#[derive(Clone, Debug, PartialEq)]
pub struct LMatrices {
    pub index: Vec<(HalfInt, usize, HalfInt)>,
    pub l0: SparseMatrix,
    pub l_plus: SparseMatrix,
    pub l_minus: SparseMatrix,
}

/// Index order: `L` ascending, then `τ`, then `M` ascending.
pub fn state_index(content: &LContent) -> Vec<(HalfInt, usize, HalfInt)> {
    let mut index = Vec::new();
    for (l, mult) in content {
        for tau in 0..*mult as usize {
            for md in (-l.doubled()..=l.doubled()).step_by(2) {
                index.push((*l, tau, HalfInt::from_doubled(md)));
            }
        }
    }
    index
}

/// `L0`, `L+`, `L-` in their standard action; row = image state.
pub fn l_matrices(content: &LContent) -> LMatrices {
    let index = state_index(content);
    let pos: BTreeMap<_, _> = index.iter().enumerate().map(|(i, s)| (*s, i)).collect();
    let dim = index.len();
    let mut l0 = SparseMatrix {
        dim,
        entries: BTreeMap::new(),
    };
    let mut lp = l0.clone();
    let mut lm = l0.clone();
    let two = HalfInt::from_doubled(2);
    for (i, &(l, tau, m)) in index.iter().enumerate() {
        if m != HalfInt::ZERO {
            l0.entries
                .insert((i, i), RadicalSum::from_rational(half(m.doubled())));
        }
        if let Some(&j) = pos.get(&(l, tau, m + two)) {
            lp.entries
                .insert((j, i), ladder_factor(l, m, Ladder::Raise));
        }
        if let Some(&j) = pos.get(&(l, tau, m - two)) {
            lm.entries
                .insert((j, i), ladder_factor(l, m, Ladder::Lower));
        }
    }
    LMatrices {
        index,
        l0,
        l_plus: lp,
        l_minus: lm,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::{build_basis_with, CandidateOrder};

    fn h(x: i32) -> HalfInt {
        HalfInt::from_doubled(x)
    }

    #[test]
    fn far_levels_vanish() {
        let irrep = IrrepLabel::new(1, 1);
        let mut cache = CgCache::new();
        assert!(m_row(irrep, h(1), h(1), h(1), h(9), &mut cache).is_empty());
        let b = build_basis_with::<RadicalSum>(irrep, CandidateOrder::Standard).unwrap();
        let mut rows = MRows::new();
        let blk = o_block(&b, h(1), h(9), &mut rows).unwrap();
        assert!(blk.is_zero());
    }

    #[test]
    fn stretched_diagonal_drops_raising_ladder() {
        // at K = L the (L - K) ladder term is absent
        let irrep = IrrepLabel::new(2, 0);
        let mut cache = CgCache::new();
        let key = MEntryKey {
            m: h(0),
            k: h(8),
            l: h(8),
            m_target: h(0),
            k_target: h(8),
            l_target: h(8),
        };
        let got = m_entry(irrep, &key, &mut cache);
        let coeff = Rational::new(BigInt::from(10 - 4), BigInt::from(3));
        let mut want = crate::angular::cg_doubled(8, 8, 6, 0, 8, 8).scale(&coeff);
        let lower = int(3) * int(8) * int(1);
        want -= &(&root(lower) * &crate::angular::cg_doubled(8, 6, 6, 2, 8, 8)).scale(&half(1));
        assert_eq!(got, want);
    }

    #[test]
    fn seniority_irreps_have_no_m_steps() {
        let irrep = IrrepLabel::new(3, 0);
        let mut cache = CgCache::new();
        for l in [0, 6, 8, 12] {
            for k in (-l..=l).step_by(2) {
                for lt in [0, 6, 8, 12] {
                    for ((mt, _), _) in m_row(irrep, h(0), h(k), h(l), h(lt), &mut cache) {
                        assert_eq!(mt, h(0));
                    }
                }
            }
        }
    }

    #[test]
    fn steps_follow_patterns() {
        let irrep = IrrepLabel::new(1, 3);
        let mut cache = CgCache::new();
        for m in [-3, -1, 1, 3] {
            for k in (-7..=7).step_by(2) {
                for lt in [3, 5, 7, 9, 11, 13] {
                    for ((mt, kt), _) in m_row(irrep, h(m), h(k), h(7), h(lt), &mut cache) {
                        let step = (mt.doubled() - m, kt.doubled() - k);
                        assert!(PATTERNS.contains(&step), "{:?}", step);
                    }
                }
            }
        }
    }

    #[test]
    fn angular_momentum_basics() {
        let mut content = LContent::new();
        content.insert(h(4), 1);
        content.insert(h(3), 2);
        let lm = l_matrices(&content);
        assert_eq!(lm.index.len(), 5 + 8);
        let i = lm.index.iter().position(|s| *s == (h(4), 0, h(2))).unwrap();
        assert_eq!(lm.l0.get(i, i), RadicalSum::one());
        let top = lm.index.iter().position(|s| *s == (h(4), 0, h(4))).unwrap();
        assert!((0..lm.index.len()).all(|r| lm.l_plus.get(r, top).is_zero()));
        // L- L+ + L0 + L0² = L(L+1)
        let casimir = lm
            .l_minus
            .mul(&lm.l_plus)
            .add(&lm.l0)
            .add(&lm.l0.mul(&lm.l0));
        for (r, (l, _, _)) in lm.index.iter().enumerate() {
            let want = half(l.doubled()) * (half(l.doubled()) + int(1));
            assert_eq!(casimir.get(r, r), RadicalSum::from_rational(want));
            for c in 0..lm.index.len() {
                if c != r {
                    assert!(casimir.get(r, c).is_zero());
                }
            }
        }
    }

    #[test]
    fn single_level_block_is_scalar() {
        let b = build_basis_with::<RadicalSum>(IrrepLabel::new(1, 0), CandidateOrder::Standard)
            .unwrap();
        let blocks = o_blocks(&b).unwrap();
        assert_eq!(blocks.len(), 1);
        let blk = &blocks[&(h(4), h(4))];
        assert_eq!(blk.matrix.len(), 1);
        assert_eq!(blk.matrix[0].len(), 1);
    }

    /// `⟨m|O_μ|τ L K⟩` as a list of `(source m, source K, coefficient)`
    /// from the single-component octupole actions.
    fn single_component(
        irrep: IrrepLabel,
        m: i32,
        k: i32,
        l: i32,
        mu: i32,
    ) -> Vec<(i32, i32, RadicalSum)> {
        let v = irrep.v as i32;
        let f = irrep.two_f as i32;
        let third = Rational::new(BigInt::from(1), BigInt::from(3));
        let mut out = Vec::new();
        match mu {
            0 => out.push((
                m,
                k,
                RadicalSum::from_rational(&third * half(10 * v + 5 * f - 5 * m - k)),
            )),
            1 => {
                out.push((
                    m - 2,
                    k,
                    root(half(1) * half(f + m) * half(f - m + 2)).scale(&half(5)),
                ));
                out.push((
                    m,
                    k + 2,
                    -root(int(3) * half(l - k) * half(l + k + 2)).scale(&half(1)),
                ));
            }
            -1 => out.push((m, k - 2, -root(&third * half(l + k) * half(l - k + 2)))),
            2 => {
                let r =
                    Rational::new(BigInt::from(5), BigInt::from(6)) * half(l + k) * half(l - k + 2);
                out.push((m, k - 2, root(r)));
                out.push((m + 2, k, -root(int(5) * half(f - m) * half(f + m + 2))));
            }
            -2 => out.push((
                m - 2,
                k,
                -root(int(5) * half(f + m) * half(f - m + 2)).scale(&half(1)),
            )),
            3 => out.push((m, k, -root5(&third * half(4 * v + 2 * f + m - k)))),
            -3 => out.push((m, k, root5(&third * half(2 * v + f + 2 * m + k)))),
            _ => {}
        }
        out.retain(|(ms, ks, x)| !x.is_zero() && ms.abs() <= f && ks.abs() <= l);
        out
    }

    #[test]
    fn rows_match_single_component_actions() {
        let mut cache = CgCache::new();
        for (v, f) in [(0, 1), (1, 0), (1, 1), (2, 0), (0, 3), (1, 3), (2, 2)] {
            let irrep = IrrepLabel::new(v, f);
            let content = crate::branching::l_content(irrep).unwrap();
            for l in content.keys().map(|x| x.doubled()) {
                for lt in content.keys().map(|x| x.doubled()) {
                    // oracle: source (m, K) → target (m', K') coefficients
                    let mut want: BTreeMap<(i32, i32, i32, i32), RadicalSum> = BTreeMap::new();
                    for mt in (-(f as i32)..=f as i32).step_by(2) {
                        for mu in -3..=3 {
                            for k in (-l..=l).step_by(2) {
                                let kt = k + 2 * mu;
                                if kt.abs() > lt {
                                    continue;
                                }
                                let c = cache.get(l, k, 6, 2 * mu, lt, kt).clone();
                                if c.is_zero() {
                                    continue;
                                }
                                for (ms, ks, x) in single_component(irrep, mt, k, l, mu) {
                                    *want.entry((ms, ks, mt, kt)).or_default() += &x * &c;
                                }
                            }
                        }
                    }
                    want.retain(|_, x| !x.is_zero());
                    let mut got = BTreeMap::new();
                    for ms in (-(f as i32)..=f as i32).step_by(2) {
                        for ks in (-l..=l).step_by(2) {
                            for ((mt, kt), x) in m_row(irrep, h(ms), h(ks), h(l), h(lt), &mut cache)
                            {
                                got.insert((ms, ks, mt.doubled(), kt.doubled()), x);
                            }
                        }
                    }
                    assert_eq!(got, want, "{} L={} L'={}", irrep, l, lt);
                }
            }
        }
    }
}
