//! so(5) ⊃ so(3) branching.
//!
//! Weights are kept in the orthogonal basis where the highest weight of
//! `(v, f)` is `(v + f, f)`.  Everything is stored doubled so spinor irreps
//! stay integral.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;
use core::fmt;

use crate::exact::HalfInt;

/// Highest weight `(v, f)` stored as `(v, 2f)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct IrrepLabel {
    pub v: u32,
    pub two_f: u32,
}

impl IrrepLabel {
    pub const fn new(v: u32, two_f: u32) -> Self {
        IrrepLabel { v, two_f }
    }

    pub fn f(&self) -> HalfInt {
        HalfInt::from_doubled(self.two_f as i32)
    }

    /// Spinor irreps carry half-integer angular momenta.
    pub fn is_spinor(&self) -> bool {
        self.two_f % 2 == 1
    }

    /// Doubled highest weight in the orthogonal basis.
    fn lambda2(&self) -> (i64, i64) {
        (2 * self.v as i64 + self.two_f as i64, self.two_f as i64)
    }
}

impl fmt::Display for IrrepLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.v, self.f())
    }
}

/// A weight `(w1, w2)` in the orthogonal basis.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Weight {
    pub w1: HalfInt,
    pub w2: HalfInt,
}

impl Weight {
    fn from_doubled(a: i64, b: i64) -> Self {
        Weight {
            w1: HalfInt::from_doubled(a as i32),
            w2: HalfInt::from_doubled(b as i32),
        }
    }

    pub fn doubled(&self) -> (i64, i64) {
        (self.w1.doubled() as i64, self.w2.doubled() as i64)
    }

    /// Eigenvalue of `L0` in the natural embedding, `2 w1 + w2`.
    pub fn l0(&self) -> HalfInt {
        HalfInt::from_doubled(2 * self.w1.doubled() + self.w2.doubled())
    }
}

/// SO(3) content: angular momentum → multiplicity.
pub type LContent = BTreeMap<HalfInt, u32>;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum BranchingError {
    /// A peeled multiplicity came out negative.
    NegativeMultiplicity { l: HalfInt },
    /// Freudenthal numerator not divisible by its denominator.
    NonIntegralWeight { weight: Weight },
}

impl fmt::Display for BranchingError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BranchingError::NegativeMultiplicity { l } => {
                write!(f, "negative multiplicity at L = {}", l)
            }
            BranchingError::NonIntegralWeight { weight } => {
                write!(
                    f,
                    "non-integral multiplicity at weight ({}, {})",
                    weight.w1, weight.w2
                )
            }
        }
    }
}

const RHO2: (i64, i64) = (3, 1);
const POSITIVE_ROOTS2: [(i64, i64); 4] = [(2, -2), (0, 2), (2, 0), (2, 2)];

fn norm2(a: (i64, i64)) -> i64 {
    a.0 * a.0 + a.1 * a.1
}

/// Whether a doubled weight lies in the convex hull of the Weyl orbit of `lam`.
fn dominated(mu: (i64, i64), lam: (i64, i64)) -> bool {
    let (a, b) = (mu.0.abs(), mu.1.abs());
    let (d1, d2) = if a >= b { (a, b) } else { (b, a) };
    d1 <= lam.0 && d1 + d2 <= lam.0 + lam.1
}

/// Weight diagram with multiplicities, by Freudenthal's recursion.
pub fn weight_multiplicities(irrep: IrrepLabel) -> Result<BTreeMap<Weight, u32>, BranchingError> {
    let lam = irrep.lambda2();
    let lam_rho = norm2((lam.0 + RHO2.0, lam.1 + RHO2.1));
    let mut mult: BTreeMap<(i64, i64), i64> = BTreeMap::new();
    // μ = Λ - a α1 - b α2 with α1 = e1 - e2, α2 = e2; depth = a + b
    let max_depth = 2 * (lam.0 + lam.1) + 2;
    for depth in 0..=max_depth {
        for a in 0..=depth {
            let b = depth - a;
            let mu = (lam.0 - 2 * a, lam.1 + 2 * a - 2 * b);
            if !dominated(mu, lam) {
                continue;
            }
            if depth == 0 {
                mult.insert(mu, 1);
                continue;
            }
            let mut num = 0i64;
            for alpha in POSITIVE_ROOTS2 {
                let mut k = 1;
                loop {
                    let w = (mu.0 + k * alpha.0, mu.1 + k * alpha.1);
                    if !dominated(w, lam) {
                        break;
                    }
                    num += mult.get(&w).copied().unwrap_or(0) * (w.0 * alpha.0 + w.1 * alpha.1);
                    k += 1;
                }
            }
            let den = lam_rho - norm2((mu.0 + RHO2.0, mu.1 + RHO2.1));
            if den == 0 || (2 * num) % den != 0 {
                return Err(BranchingError::NonIntegralWeight {
                    weight: Weight::from_doubled(mu.0, mu.1),
                });
            }
            let m = 2 * num / den;
            if m > 0 {
                mult.insert(mu, m);
            }
        }
    }
    Ok(mult
        .into_iter()
        .map(|((a, b), m)| (Weight::from_doubled(a, b), m as u32))
        .collect())
}

/// SO(3) content from the distribution of `L0` eigenvalues over the weights.
pub fn l_content(irrep: IrrepLabel) -> Result<LContent, BranchingError> {
    let weights = weight_multiplicities(irrep)?;
    let mut n: BTreeMap<i32, i64> = BTreeMap::new();
    for (w, m) in &weights {
        *n.entry(w.l0().doubled()).or_insert(0) += *m as i64;
    }
    let mut out = LContent::new();
    for (&l, &count) in n.range(0..) {
        let above = n.get(&(l + 2)).copied().unwrap_or(0);
        let m = count - above;
        if m < 0 {
            return Err(BranchingError::NegativeMultiplicity {
                l: HalfInt::from_doubled(l),
            });
        }
        if m > 0 {
            out.insert(HalfInt::from_doubled(l), m as u32);
        }
    }
    Ok(out)
}

/// Closed-form content of `(v, 0)`: `L = 2K, 2K-2, 2K-3, …, K` for
/// `K = v, v-3, … ≥ 0`.
pub fn l_content_v0(v: u32) -> LContent {
    let mut out = LContent::new();
    let mut k = v as i32;
    while k >= 0 {
        let mut push = |l: i32| *out.entry(HalfInt::from_int(l)).or_insert(0) += 1;
        push(2 * k);
        let mut l = 2 * k - 2;
        while l >= k {
            push(l);
            l -= 1;
        }
        k -= 3;
    }
    out
}

/// Closed-form content of `(0, f)`: `L = 3K, 3K-2, 3K-3, …, K` for
/// `K = f, f-2, … ≥ 0`.  Works on doubled values.
pub fn l_content_0f(two_f: u32) -> LContent {
    let mut out = LContent::new();
    let mut k2 = two_f as i32;
    while k2 >= 0 {
        let mut push = |l2: i32| *out.entry(HalfInt::from_doubled(l2)).or_insert(0) += 1;
        push(3 * k2);
        let mut l2 = 3 * k2 - 4;
        while l2 >= k2 {
            push(l2);
            l2 -= 2;
        }
        k2 -= 4;
    }
    out
}

/// Weyl dimension with `λ1 = v`, `λ2 = 2f`.
pub fn dimension(irrep: IrrepLabel) -> u64 {
    let l1 = irrep.v as u64;
    let l2 = irrep.two_f as u64;
    (l1 + 1) * (l2 + 1) * (l1 + l2 + 2) * (2 * l1 + l2 + 3) / 6
}

/// `Σ_L m_L (2L + 1)`.
pub fn content_dimension(content: &LContent) -> u64 {
    content
        .iter()
        .map(|(l, m)| (*m as u64) * (l.multiplicity() as u64))
        .sum()
}

/// Flatten a content into a sorted list of doubled angular momenta, with
/// repeats for multiplicities.
pub fn content_list(content: &LContent) -> Vec<i32> {
    let mut out = Vec::new();
    for (l, m) in content {
        for _ in 0..*m {
            out.push(l.doubled());
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn doubled_list(v: u32, two_f: u32) -> Vec<i32> {
        content_list(&l_content(IrrepLabel::new(v, two_f)).unwrap())
    }

    #[test]
    fn fundamental_weights() {
        let five = weight_multiplicities(IrrepLabel::new(1, 0)).unwrap();
        let want: Vec<(i64, i64)> = vec![(-2, 0), (0, -2), (0, 0), (0, 2), (2, 0)];
        let got: Vec<(i64, i64)> = five.keys().map(|w| w.doubled()).collect();
        assert_eq!(got, want);
        assert!(five.values().all(|m| *m == 1));

        let four = weight_multiplicities(IrrepLabel::new(0, 1)).unwrap();
        assert_eq!(four.len(), 4);
        assert!(four
            .keys()
            .all(|w| w.w1.doubled().abs() == 1 && w.w2.doubled().abs() == 1));
        assert!(four.values().all(|m| *m == 1));
    }

    #[test]
    fn adjoint_sized_irrep() {
        let w = weight_multiplicities(IrrepLabel::new(1, 2)).unwrap();
        let total: u32 = w.values().sum();
        assert_eq!(total, 35);
        assert_eq!(doubled_list(1, 2), vec![2, 4, 6, 8, 10]);
    }

    #[test]
    fn table_rows() {
        assert_eq!(doubled_list(2, 2), vec![2, 4, 6, 6, 8, 10, 10, 12, 14]);
        assert_eq!(doubled_list(0, 0), vec![0]);
        assert_eq!(doubled_list(1, 3), vec![1, 3, 5, 7, 7, 9, 11, 13]);
    }

    #[test]
    fn closed_forms() {
        assert_eq!(content_list(&l_content_v0(3)), vec![0, 6, 8, 12]);
        assert_eq!(content_list(&l_content_v0(0)), vec![0]);
        assert_eq!(content_list(&l_content_0f(5)), vec![3, 5, 7, 9, 11, 15]);
    }

    #[test]
    fn dimensions() {
        assert_eq!(dimension(IrrepLabel::new(1, 0)), 5);
        assert_eq!(dimension(IrrepLabel::new(0, 1)), 4);
        assert_eq!(dimension(IrrepLabel::new(2, 2)), 81);
        assert_eq!(dimension(IrrepLabel::new(3, 3)), 256);
        assert_eq!(dimension(IrrepLabel::new(2, 3)), 140);
    }

    #[test]
    fn weyl_group_invariance() {
        for v in 0..=4 {
            for t in 0..=4 {
                let w = weight_multiplicities(IrrepLabel::new(v, t)).unwrap();
                let sum: u32 = w.values().sum();
                assert_eq!(sum as u64, dimension(IrrepLabel::new(v, t)));
                for (wt, m) in &w {
                    let (a, b) = wt.doubled();
                    // the B2 Weyl group: sign changes and the swap
                    for (x, y) in [
                        (a, b),
                        (-a, b),
                        (a, -b),
                        (-a, -b),
                        (b, a),
                        (-b, a),
                        (b, -a),
                        (-b, -a),
                    ] {
                        assert_eq!(w.get(&Weight::from_doubled(x, y)), Some(m));
                    }
                }
            }
        }
    }

    #[test]
    fn label_display() {
        assert_eq!(alloc::format!("{}", IrrepLabel::new(1, 3)), "(1,3/2)");
        assert_eq!(alloc::format!("{}", IrrepLabel::new(2, 2)), "(2,1)");
    }
}
