//! Independent checks on a computed representation.
//!
//! Full generator matrices are rebuilt from reduced elements by the
//! Wigner-Eckart theorem and tested against the so(5) commutation
//! relations.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use crate::angular::cg_f64;
use crate::branching::LContent;
use crate::exact::HalfInt;
use crate::linalg::Mat;
use crate::matrix_elements::{l_matrices, SparseMatrix};
use crate::unitarize::{Blocks, Node, UnitaryIrrep};

/// Dense generators over the `(L, α, M)` index set.
#[derive(Clone, Debug, PartialEq)]
pub struct GeneratorMatrices {
    pub index: Vec<(HalfInt, usize, HalfInt)>,
    pub l0: Mat,
    pub l_plus: Mat,
    pub l_minus: Mat,
    /// `O_ν` for `ν = -3 … 3`, stored at `ν + 3`.
    pub octupole: [Mat; 7],
}

impl GeneratorMatrices {
    pub fn dim(&self) -> usize {
        self.index.len()
    }

    pub fn o(&self, nu: i32) -> &Mat {
        &self.octupole[(nu + 3) as usize]
    }

    /// Spherical components `L_{+1} = -L_+/√2`, `L_0`, `L_{-1} = L_-/√2`.
    pub fn l_spherical(&self, k: i32) -> Mat {
        let r = core::f64::consts::FRAC_1_SQRT_2;
        match k {
            1 => self.l_plus.scale(-r),
            0 => self.l0.clone(),
            -1 => self.l_minus.scale(r),
            _ => Mat::zeros(self.dim(), self.dim()),
        }
    }
}

fn dense(s: &SparseMatrix) -> Mat {
    let mut m = Mat::zeros(s.dim, s.dim);
    for (&(i, j), x) in &s.entries {
        m[(i, j)] = x.to_f64();
    }
    m
}

/// Rebuild generators from `element(target, source)`, placed with
/// `(L M, 3 ν | L' M')`.
fn assemble(content: &LContent, element: impl Fn(Node, Node) -> f64) -> GeneratorMatrices {
    let lm = l_matrices(content);
    let index = lm.index.clone();
    let n = index.len();
    let mut octupole: [Mat; 7] = core::array::from_fn(|_| Mat::zeros(n, n));
    let mut reduced: BTreeMap<(Node, Node), f64> = BTreeMap::new();
    for (i, &(lt, at, mt)) in index.iter().enumerate() {
        for (j, &(ls, as_, ms)) in index.iter().enumerate() {
            let nu2 = mt.doubled() - ms.doubled();
            if nu2.abs() > 6 || (lt.doubled() - ls.doubled()).abs() > 6 {
                continue;
            }
            let c = cg_f64(
                ls.doubled(),
                ms.doubled(),
                6,
                nu2,
                lt.doubled(),
                mt.doubled(),
            );
            if c == 0.0 {
                continue;
            }
            let key = (Node::new(lt, at), Node::new(ls, as_));
            let r = *reduced.entry(key).or_insert_with(|| element(key.0, key.1));
            octupole[(nu2 / 2 + 3) as usize][(i, j)] = c * r;
        }
    }
    GeneratorMatrices {
        index,
        l0: dense(&lm.l0),
        l_plus: dense(&lm.l_plus),
        l_minus: dense(&lm.l_minus),
        octupole,
    }
}

fn content_of(u: &UnitaryIrrep) -> LContent {
    let mut c = LContent::new();
    for n in &u.nodes {
        *c.entry(n.l).or_insert(0) += 1;
    }
    c
}

/// `⟨β L' M'|O_ν|α L M⟩ = (2L'+1)^(-1/2) (L M, 3 ν | L' M') ⟨βL'‖O‖αL⟩`.
pub fn reconstruct(u: &UnitaryIrrep) -> GeneratorMatrices {
    assemble(&content_of(u), |t, s| {
        u.reduced_element(t, s) / libm::sqrt(t.l.multiplicity() as f64)
    })
}

/// Generators in the coupled, non-orthonormal basis straight from the
/// octupole blocks.  Closure is similarity invariant, so this checks the
/// matrix elements independently of the K-matrices.
pub fn reconstruct_from_blocks(content: &LContent, blocks: &Blocks) -> GeneratorMatrices {
    assemble(content, |t, s| {
        blocks
            .get(&(s.l, t.l))
            .map_or(0.0, |b| b[(t.alpha, s.alpha)])
    })
}

fn commutator(a: &Mat, b: &Mat) -> Mat {
    a.mul(b).sub(&b.mul(a))
}

/// Largest residual of the three commutation relations
/// `[L_k, L_l] = √2 (1 l, 1 k | 1 k+l) L_{k+l}`,
/// `[L_k, O_ν] = 2√3 (3 ν, 1 k | 3 k+ν) O_{k+ν}`,
/// `[O_μ, O_ν] = 2√7 (3 ν, 3 μ | 1 μ+ν) L_{μ+ν} - √6 (3 ν, 3 μ | 3 μ+ν) O_{μ+ν}`.
pub fn check_commutators(g: &GeneratorMatrices) -> f64 {
    let n = g.dim();
    let zero = Mat::zeros(n, n);
    let ls: Vec<Mat> = (-1..=1).map(|k| g.l_spherical(k)).collect();
    let l = |k: i32| {
        if k.abs() <= 1 {
            &ls[(k + 1) as usize]
        } else {
            &zero
        }
    };
    let o = |nu: i32| if nu.abs() <= 3 { g.o(nu) } else { &zero };
    let (s2, s3, s6, s7) = (
        libm::sqrt(2.0),
        libm::sqrt(3.0),
        libm::sqrt(6.0),
        libm::sqrt(7.0),
    );
    let mut worst: f64 = 0.0;
    for k in -1..=1 {
        for q in -1..=1 {
            let rhs = l(k + q).scale(s2 * cg_f64(2, 2 * q, 2, 2 * k, 2, 2 * (k + q)));
            worst = worst.max(commutator(l(k), l(q)).sub(&rhs).max_abs());
        }
        for nu in -3..=3 {
            let rhs = o(k + nu).scale(2.0 * s3 * cg_f64(6, 2 * nu, 2, 2 * k, 6, 2 * (k + nu)));
            worst = worst.max(commutator(l(k), o(nu)).sub(&rhs).max_abs());
        }
    }
    for mu in -3..=3 {
        for nu in -3..=3 {
            let s = mu + nu;
            let rhs = l(s)
                .scale(2.0 * s7 * cg_f64(6, 2 * nu, 6, 2 * mu, 2, 2 * s))
                .sub(&o(s).scale(s6 * cg_f64(6, 2 * nu, 6, 2 * mu, 6, 2 * s)));
            worst = worst.max(commutator(o(mu), o(nu)).sub(&rhs).max_abs());
        }
    }
    worst
}

/// `max |⟨t‖O‖s⟩ - (-1)^(L_s - L_t) ⟨s‖O‖t⟩|`.
pub fn check_hermiticity(u: &UnitaryIrrep) -> f64 {
    let mut worst: f64 = 0.0;
    for (i, t) in u.nodes.iter().enumerate() {
        for (j, s) in u.nodes.iter().enumerate() {
            let sign = if ((s.l.doubled() - t.l.doubled()) / 2).rem_euclid(2) == 0 {
                1.0
            } else {
                -1.0
            };
            worst = worst.max((u.reduced[(i, j)] - sign * u.reduced[(j, i)]).abs());
        }
    }
    worst
}

/// Largest same-L reduced element between distinct states.
pub fn same_l_off_diagonal(u: &UnitaryIrrep) -> f64 {
    let mut worst: f64 = 0.0;
    for (i, t) in u.nodes.iter().enumerate() {
        for (j, s) in u.nodes.iter().enumerate() {
            if i != j && s.l == t.l {
                worst = worst.max(u.reduced[(i, j)].abs());
            }
        }
    }
    worst
}

/// `O_νᵀ = (-1)^ν O_{-ν}` on the full matrices.
pub fn check_adjoint(g: &GeneratorMatrices) -> f64 {
    (-3..=3)
        .map(|nu: i32| {
            let sign = if nu.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
            g.o(nu).transpose().sub(&g.o(-nu).scale(sign)).max_abs()
        })
        .fold(0.0, f64::max)
}

/// Deviation of `L·L = L0² + (L+L- + L-L+)/2` from `L(L+1)` on each block.
pub fn casimir_residual(g: &GeneratorMatrices) -> f64 {
    let ll = g.l0.mul(&g.l0).add(
        &g.l_plus
            .mul(&g.l_minus)
            .add(&g.l_minus.mul(&g.l_plus))
            .scale(0.5),
    );
    let mut want = Mat::zeros(g.dim(), g.dim());
    for (i, (l, _, _)) in g.index.iter().enumerate() {
        let x = l.to_f64();
        want[(i, i)] = x * (x + 1.0);
    }
    ll.sub(&want).max_abs()
}

/// Summary of every check on one irrep.
#[derive(Clone, Debug, PartialEq)]
pub struct ValidationReport {
    pub dimension: usize,
    pub commutators: f64,
    pub coupled_commutators: f64,
    pub hermiticity: f64,
    pub adjoint: f64,
    pub same_l_off_diagonal: f64,
    pub casimir: f64,
    /// `max_m |Σ a_{mK}² - 1|`.
    pub normalization: f64,
}

impl ValidationReport {
    pub fn worst(&self) -> f64 {
        [
            self.commutators,
            self.coupled_commutators,
            self.hermiticity,
            self.adjoint,
            self.same_l_off_diagonal,
            self.casimir,
            self.normalization,
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }
}

pub fn validate(u: &UnitaryIrrep) -> ValidationReport {
    let g = reconstruct(u);
    let coupled = reconstruct_from_blocks(&content_of(u), &u.blocks);
    let two_f = u.irrep.two_f as i32;
    let normalization = (-two_f..=two_f)
        .step_by(2)
        .map(|m| (crate::unitarize::grade_norm(&u.a_tables, HalfInt::from_doubled(m)) - 1.0).abs())
        .fold(0.0, f64::max);
    ValidationReport {
        dimension: g.dim(),
        commutators: check_commutators(&g),
        coupled_commutators: check_commutators(&coupled),
        hermiticity: check_hermiticity(u),
        adjoint: check_adjoint(&g),
        same_l_off_diagonal: same_l_off_diagonal(u),
        casimir: casimir_residual(&g),
        normalization,
    }
}
