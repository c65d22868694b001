//! Change of basis to an orthonormal, unitary representation.
//!
//! Two routes produce the K-matrices:
//!
//! * the eigenvector route diagonalizes each same-L octupole block and fixes
//!   the relative state norms from ratios of reduced elements, propagated
//!   breadth-first over the graph of coupled states, with a dedicated solve
//!   for degenerate levels at `L ≤ 1`;
//! * the metric route solves the Hermiticity conditions, which are linear in
//!   the metrics `P(L) = K(L) K(L)ᵀ`, and then diagonalizes the same-L
//!   blocks in the metric's inner product.
//!
//! The eigenvector route needs symmetric same-L blocks, which only holds on
//! multiplicity-free levels; [`unitary_irrep`] falls back to the metric route
//! whenever it fails.

use alloc::collections::{BTreeMap, BTreeSet, VecDeque};
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::basis::{
    build_basis_ordered, Basis, BasisError, BasisSet, CandidateOrder, CoeffTable, MK,
};
use crate::branching::IrrepLabel;
use crate::exact::{ExactError, HalfInt};
use crate::linalg::{eigh_symmetric, least_squares, null_vector, sym_sqrt_pair, LinalgError, Mat};
use crate::matrix_elements::o_blocks;
use crate::scalar::Scalar;

/// A state `(L, α)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Node {
    pub l: HalfInt,
    pub alpha: usize,
}

impl Node {
    pub const fn new(l: HalfInt, alpha: usize) -> Self {
        Node { l, alpha }
    }
}

impl fmt::Display for Node {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}_{}", self.l, self.alpha + 1)
    }
}

/// Float octupole blocks keyed `(L_source, L_target)`, each `[target × source]`.
/// Absent keys are zero blocks.
pub type Blocks = BTreeMap<(HalfInt, HalfInt), Mat>;

/// Threshold for a usable edge in the ratio graph.
pub const EDGE_TOL: f64 = 1e-10;
/// Relative tolerance for ratio products around cycles.
pub const CYCLE_TOL: f64 = 1e-6;
/// Relative tolerance for the low-L least-squares residual.
pub const LOW_L_TOL: f64 = 1e-8;

#[derive(Clone, Debug, PartialEq)]
pub enum UnitarizeError {
    Basis(BasisError),
    Linalg(LinalgError),
    /// A same-L block is not symmetric, so its eigenvectors are not orthogonal.
    NonSymmetricBlock {
        l: HalfInt,
        deviation: f64,
    },
    /// A ratio of reduced elements that must be a squared norm is negative.
    NegativeRatio {
        from: Node,
        to: Node,
        ratio: f64,
    },
    DisconnectedGraph {
        unreached: Vec<Node>,
    },
    CycleInconsistency {
        from: Node,
        to: Node,
        deviation: f64,
    },
    UnderdeterminedSystem {
        l: HalfInt,
        rank: usize,
        unknowns: usize,
    },
    /// Least-squares residual of the low-L Hermiticity solve too large.
    InconsistentLowL {
        l: HalfInt,
        residual: f64,
    },
    /// The Hermiticity conditions have no one-dimensional solution space.
    NoUniqueMetric {
        smallest: f64,
        next: f64,
    },
    MetricNotPositive {
        l: HalfInt,
    },
}

impl fmt::Display for UnitarizeError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        use UnitarizeError::*;
        match self {
            Basis(e) => write!(f, "basis: {}", e),
            Linalg(e) => write!(f, "linear algebra: {}", e),
            NonSymmetricBlock { l, deviation } => write!(
                f,
                "same-L block at L = {} not symmetric (deviation {:e})",
                l, deviation
            ),
            NegativeRatio { from, to, ratio } => write!(
                f,
                "negative norm ratio {:e} on edge {} -> {}",
                ratio, from, to
            ),
            DisconnectedGraph { unreached } => write!(
                f,
                "{} states unreachable in the ratio graph",
                unreached.len()
            ),
            CycleInconsistency {
                from,
                to,
                deviation,
            } => {
                write!(
                    f,
                    "inconsistent cycle through {} -> {} (relative deviation {:e})",
                    from, to, deviation
                )
            }
            UnderdeterminedSystem { l, rank, unknowns } => {
                write!(
                    f,
                    "low-L solve at L = {} underdetermined (rank {} of {})",
                    l, rank, unknowns
                )
            }
            InconsistentLowL { l, residual } => {
                write!(f, "low-L solve at L = {} has residual {:e}", l, residual)
            }
            NoUniqueMetric { smallest, next } => {
                write!(
                    f,
                    "Hermiticity conditions not rank-deficient by one (eigenvalues {:e}, {:e})",
                    smallest, next
                )
            }
            MetricNotPositive { l } => write!(f, "metric at L = {} not positive definite", l),
        }
    }
}

impl From<BasisError> for UnitarizeError {
    fn from(e: BasisError) -> Self {
        UnitarizeError::Basis(e)
    }
}

impl From<LinalgError> for UnitarizeError {
    fn from(e: LinalgError) -> Self {
        UnitarizeError::Linalg(e)
    }
}

/// Which construction produced the K-matrices.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Route {
    /// Same-L eigenvectors and propagated norm ratios.
    Eigenvector,
    /// Same-L eigenvectors and ratios, with the low-L Hermiticity solve.
    EigenvectorLowL,
    /// Hermitian metric solve.
    Metric,
}

impl fmt::Display for Route {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Route::Eigenvector => "eigenvector",
            Route::EigenvectorLowL => "eigenvector+low-L",
            Route::Metric => "metric",
        })
    }
}

/// Which routes [`unitary_irrep_with`] may use.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Strategy {
    /// Eigenvector route, metric route on failure.
    #[default]
    Auto,
    EigenvectorOnly,
    MetricOnly,
}

/// Orthogonal eigenvector matrices per level and positive scale factors
/// per state; `K(L) = 𝒦(L) diag(k)`.
#[derive(Clone, Debug, PartialEq)]
pub struct KMatrixSet {
    pub eigenvectors: BTreeMap<HalfInt, Mat>,
    pub k: BTreeMap<Node, f64>,
}

impl KMatrixSet {
    pub fn k_matrix(&self, l: HalfInt) -> Mat {
        let e = &self.eigenvectors[&l];
        let d: Vec<f64> = (0..e.cols()).map(|a| self.k[&Node::new(l, a)]).collect();
        e.mul(&Mat::diag(&d))
    }
}

/// K-matrices and their inverses per level.
#[derive(Clone, Debug, PartialEq)]
pub struct KMatrices {
    pub k: BTreeMap<HalfInt, Mat>,
    pub k_inv: BTreeMap<HalfInt, Mat>,
}

impl KMatrices {
    fn scaled(mut self, g: f64) -> Self {
        for m in self.k.values_mut() {
            *m = m.scale(g);
        }
        for m in self.k_inv.values_mut() {
            *m = m.scale(1.0 / g);
        }
        self
    }
}

/// An orthonormal realization of one irrep.
#[derive(Clone, Debug, PartialEq)]
pub struct UnitaryIrrep {
    pub irrep: IrrepLabel,
    /// Whether the coupled basis was built exactly.
    pub exact_basis: bool,
    /// Whether the octupole blocks were computed exactly before conversion.
    pub exact_blocks: bool,
    pub route: Route,
    /// States, `L` ascending then `α`.
    pub nodes: Vec<Node>,
    /// `a_{mK}(αL)`, aligned with `nodes`.
    pub a_tables: Vec<CoeffTable<f64>>,
    /// `⟨target ‖ O ‖ source⟩`, rows and columns aligned with `nodes`.
    pub reduced: Mat,
    pub k_matrices: KMatrices,
    /// Octupole blocks in the coupled basis.
    pub blocks: Blocks,
}

impl UnitaryIrrep {
    pub fn index(&self, node: Node) -> Option<usize> {
        self.nodes.iter().position(|n| *n == node)
    }

    /// `⟨target ‖ O ‖ source⟩`.
    pub fn reduced_element(&self, target: Node, source: Node) -> f64 {
        match (self.index(target), self.index(source)) {
            (Some(i), Some(j)) => self.reduced[(i, j)],
            _ => 0.0,
        }
    }

    pub fn dimension(&self) -> usize {
        self.nodes.iter().map(|n| n.l.multiplicity() as usize).sum()
    }
}

fn c_factor(l: HalfInt) -> f64 {
    libm::sqrt(l.multiplicity() as f64)
}

/// `(-1)^(L - L')` for a pair of levels with integral difference.
fn phase(l: HalfInt, lp: HalfInt) -> f64 {
    if ((l.doubled() - lp.doubled()) / 2).rem_euclid(2) == 0 {
        1.0
    } else {
        -1.0
    }
}

fn block(
    blocks: &Blocks,
    source: HalfInt,
    target: HalfInt,
    mult: &BTreeMap<HalfInt, usize>,
) -> Mat {
    blocks
        .get(&(source, target))
        .cloned()
        .unwrap_or_else(|| Mat::zeros(mult[&target], mult[&source]))
}

/// Octupole blocks of a basis, converted to floats.
pub fn float_blocks<S: Scalar>(basis: &BasisSet<S>) -> Result<Blocks, ExactError> {
    Ok(o_blocks(basis)?
        .into_iter()
        .map(|(key, b)| {
            let rows: Vec<Vec<f64>> = b
                .matrix
                .iter()
                .map(|r| r.iter().map(|x| x.to_f64()).collect())
                .collect();
            let m = if rows.is_empty() || rows[0].is_empty() {
                Mat::zeros(rows.len(), 0)
            } else {
                Mat::from_rows(&rows)
            };
            (key, m)
        })
        .collect())
}

fn multiplicities(basis: &BasisSet<f64>) -> BTreeMap<HalfInt, usize> {
    basis.levels.iter().map(|(l, v)| (*l, v.len())).collect()
}

fn node_list(mult: &BTreeMap<HalfInt, usize>) -> Vec<Node> {
    mult.iter()
        .flat_map(|(l, n)| (0..*n).map(move |a| Node::new(*l, a)))
        .collect()
}

/// Propagate scale factors over the ratio graph from `nodes[0]`.
///
/// `transformed` holds blocks in the same-L eigenbasis.  Returns the factors
/// found and the unreached nodes; nodes in `skip` are neither visited nor
/// used as bridges.
fn propagate_k(
    nodes: &[Node],
    transformed: &Blocks,
    skip: &BTreeSet<HalfInt>,
) -> Result<(BTreeMap<Node, f64>, Vec<Node>), UnitarizeError> {
    let active: Vec<Node> = nodes
        .iter()
        .copied()
        .filter(|n| !skip.contains(&n.l))
        .collect();
    let mut k = BTreeMap::new();
    let Some(&root) = active.first() else {
        return Ok((k, Vec::new()));
    };
    let entry = |s: Node, t: Node| -> f64 {
        transformed
            .get(&(s.l, t.l))
            .map_or(0.0, |b| b[(t.alpha, s.alpha)])
    };
    k.insert(root, 1.0);
    let mut queue = VecDeque::from([root]);
    while let Some(t) = queue.pop_front() {
        for &s in &active {
            if s.l == t.l {
                continue;
            }
            let ts = entry(s, t);
            let st = entry(t, s);
            if ts.abs() <= EDGE_TOL || st.abs() <= EDGE_TOL {
                continue;
            }
            // (k_s / k_t)^2 = (-1)^(L_s - L_t) c_s O(s<-t) / (c_t O(t<-s))
            let ratio = phase(s.l, t.l) * c_factor(s.l) * st / (c_factor(t.l) * ts);
            if ratio <= 0.0 {
                return Err(UnitarizeError::NegativeRatio {
                    from: t,
                    to: s,
                    ratio,
                });
            }
            let want = k[&t] * libm::sqrt(ratio);
            match k.get(&s) {
                Some(&have) => {
                    let deviation = (have - want).abs() / have.abs().max(want.abs());
                    if deviation > CYCLE_TOL {
                        return Err(UnitarizeError::CycleInconsistency {
                            from: t,
                            to: s,
                            deviation,
                        });
                    }
                }
                None => {
                    k.insert(s, want);
                    queue.push_back(s);
                }
            }
        }
    }
    let unreached = nodes
        .iter()
        .copied()
        .filter(|n| !k.contains_key(n))
        .collect();
    Ok((k, unreached))
}

/// Scale factors from a fully connected ratio graph, reference node at 1.
pub fn compute_k_factors(
    nodes: &[Node],
    transformed: &Blocks,
) -> Result<BTreeMap<Node, f64>, UnitarizeError> {
    let (k, unreached) = propagate_k(nodes, transformed, &BTreeSet::new())?;
    if unreached.is_empty() {
        Ok(k)
    } else {
        Err(UnitarizeError::DisconnectedGraph { unreached })
    }
}

/// Index of the symmetric unknowns `P_ij`, `i ≤ j`, of an `n × n` metric.
fn sym_index(n: usize, i: usize, j: usize) -> usize {
    let (i, j) = if i <= j { (i, j) } else { (j, i) };
    i * n - i * (i + 1) / 2 + j
}

fn sym_from_vec(n: usize, x: &[f64]) -> Mat {
    let mut p = Mat::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            p[(i, j)] = x[sym_index(n, i, j)];
        }
    }
    p
}

/// Metric of a degenerate low-L level from Hermiticity against fixed levels.
///
/// With `P_t = K_t K_tᵀ` known for every partner `t`, unitarity requires
/// `c_t O(t←L) P = (-1)^(L-L_t) c_L P_t O(L←t)ᵀ`, linear in the unknown
/// metric `P` of level `L`.  Returns `P`, solved by least squares.
pub fn special_low_l(
    l: HalfInt,
    n: usize,
    blocks: &Blocks,
    fixed: &BTreeMap<HalfInt, Mat>,
) -> Result<Mat, UnitarizeError> {
    let unknowns = n * (n + 1) / 2;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut rhs = Vec::new();
    for (&lt, pt) in fixed {
        let nt = pt.rows();
        let (Some(o_tl), Some(o_lt)) = (blocks.get(&(l, lt)), blocks.get(&(lt, l))) else {
            continue;
        };
        let s = phase(l, lt);
        // target t ← source L: [nt × n]; target L ← source t: [n × nt]
        let b = pt.mul(&o_lt.transpose()).scale(s * c_factor(l));
        for i in 0..nt {
            for j in 0..n {
                let mut row = vec![0.0; unknowns];
                for q in 0..n {
                    row[sym_index(n, q, j)] += c_factor(lt) * o_tl[(i, q)];
                }
                if row.iter().any(|x| *x != 0.0) || b[(i, j)] != 0.0 {
                    rows.push(row);
                    rhs.push(b[(i, j)]);
                }
            }
        }
    }
    if rows.is_empty() {
        return Err(UnitarizeError::UnderdeterminedSystem {
            l,
            rank: 0,
            unknowns,
        });
    }
    let a = Mat::from_rows(&rows);
    let (x, rank) = least_squares(&a, &rhs)?;
    if rank < unknowns {
        return Err(UnitarizeError::UnderdeterminedSystem { l, rank, unknowns });
    }
    let scale = rhs.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    let residual = (0..a.rows())
        .map(|i| ((0..unknowns).map(|j| a[(i, j)] * x[j]).sum::<f64>() - rhs[i]).abs())
        .fold(0.0, f64::max);
    if residual > LOW_L_TOL * scale {
        return Err(UnitarizeError::InconsistentLowL { l, residual });
    }
    Ok(sym_from_vec(n, &x))
}

fn check_symmetric(l: HalfInt, o: &Mat) -> Result<(), UnitarizeError> {
    let deviation = o.asymmetry();
    if deviation > 1e-9 * o.max_abs().max(1.0) {
        return Err(UnitarizeError::NonSymmetricBlock { l, deviation });
    }
    Ok(())
}

/// K-matrices by diagonalizing same-L blocks and propagating ratios.
pub fn eigenvector_route(
    basis: &BasisSet<f64>,
    blocks: &Blocks,
) -> Result<(KMatrices, Route), UnitarizeError> {
    let mult = multiplicities(basis);
    let nodes = node_list(&mult);
    // levels whose same-L block vanishes by the triangle rule
    let low: BTreeSet<HalfInt> = mult
        .iter()
        .filter(|(l, n)| **n > 1 && l.doubled() <= 2)
        .map(|(l, _)| *l)
        .collect();
    let mut eig = BTreeMap::new();
    for &l in mult.keys() {
        if low.contains(&l) {
            eig.insert(l, Mat::identity(mult[&l]));
            continue;
        }
        let o = block(blocks, l, l, &mult);
        check_symmetric(l, &o)?;
        eig.insert(l, eigh_symmetric(&o)?.vectors);
    }
    let mut transformed = Blocks::new();
    for (&(s, t), o) in blocks {
        transformed.insert((s, t), eig[&t].transpose().mul(o).mul(&eig[&s]));
    }
    let (k, unreached) = propagate_k(&nodes, &transformed, &low)?;
    let unreached_levels: BTreeSet<HalfInt> = unreached.iter().map(|n| n.l).collect();
    if !unreached_levels.is_subset(&low) {
        return Err(UnitarizeError::DisconnectedGraph { unreached });
    }
    let set = KMatrixSet {
        eigenvectors: eig,
        k,
    };
    let mut out = KMatrices {
        k: BTreeMap::new(),
        k_inv: BTreeMap::new(),
    };
    let mut fixed = BTreeMap::new();
    for &l in mult.keys() {
        if low.contains(&l) {
            continue;
        }
        let km = set.k_matrix(l);
        let d: Vec<f64> = (0..mult[&l])
            .map(|a| 1.0 / set.k[&Node::new(l, a)])
            .collect();
        out.k_inv
            .insert(l, Mat::diag(&d).mul(&set.eigenvectors[&l].transpose()));
        fixed.insert(l, km.mul(&km.transpose()));
        out.k.insert(l, km);
    }
    for &l in &low {
        let p = special_low_l(l, mult[&l], blocks, &fixed)?;
        let (r, ri) = sym_sqrt_pair(&p).map_err(|_| UnitarizeError::MetricNotPositive { l })?;
        out.k.insert(l, r);
        out.k_inv.insert(l, ri);
    }
    let route = if low.is_empty() {
        Route::Eigenvector
    } else {
        Route::EigenvectorLowL
    };
    Ok((out, route))
}

/// K-matrices from the Hermitian metric.
pub fn metric_route(basis: &BasisSet<f64>, blocks: &Blocks) -> Result<KMatrices, UnitarizeError> {
    let mult = multiplicities(basis);
    let levels: Vec<HalfInt> = mult.keys().copied().collect();
    let mut offset = BTreeMap::new();
    let mut unknowns = 0;
    for &l in &levels {
        offset.insert(l, unknowns);
        unknowns += mult[&l] * (mult[&l] + 1) / 2;
    }
    let var = |l: HalfInt, i: usize, j: usize| offset[&l] + sym_index(mult[&l], i, j);
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (a, &l) in levels.iter().enumerate() {
        for &lp in &levels[a..] {
            if (l.doubled() - lp.doubled()).abs() > 6 {
                continue;
            }
            let o_pl = block(blocks, l, lp, &mult); // target L' ← source L
            let o_lp = block(blocks, lp, l, &mult); // target L ← source L'
            let s = phase(l, lp);
            // c_L' O(L'←L) P(L) - s c_L P(L') O(L←L')ᵀ = 0
            for i in 0..mult[&lp] {
                for j in 0..mult[&l] {
                    let mut row = vec![0.0; unknowns];
                    for q in 0..mult[&l] {
                        row[var(l, q, j)] += c_factor(lp) * o_pl[(i, q)];
                    }
                    for q in 0..mult[&lp] {
                        row[var(lp, i, q)] -= s * c_factor(l) * o_lp[(j, q)];
                    }
                    if row.iter().any(|x| *x != 0.0) {
                        rows.push(row);
                    }
                }
            }
        }
    }
    let e = if rows.is_empty() {
        Mat::zeros(1, unknowns)
    } else {
        Mat::from_rows(&rows)
    };
    let nv = null_vector(&e)?;
    let scale = e.transpose().mul(&e).max_abs().max(1.0);
    if nv.residual > 1e-16 * scale || nv.next < 1e-10 * scale {
        return Err(UnitarizeError::NoUniqueMetric {
            smallest: nv.residual,
            next: nv.next,
        });
    }
    let mut x = nv.vector;
    let first = levels[0];
    if x[offset[&first]] < 0.0 {
        x.iter_mut().for_each(|v| *v = -*v);
    }
    let mut out = KMatrices {
        k: BTreeMap::new(),
        k_inv: BTreeMap::new(),
    };
    for &l in &levels {
        let n = mult[&l];
        let p = sym_from_vec(n, &x[offset[&l]..offset[&l] + n * (n + 1) / 2]);
        let (r, ri) = sym_sqrt_pair(&p).map_err(|_| UnitarizeError::MetricNotPositive { l })?;
        let s = ri.mul(&block(blocks, l, l, &mult)).mul(&r);
        check_symmetric(l, &s)?;
        let q = eigh_symmetric(&s.symmetrized())?.vectors;
        out.k_inv.insert(l, q.transpose().mul(&ri));
        out.k.insert(l, r.mul(&q));
    }
    Ok(out)
}

fn a_table(basis: &BasisSet<f64>, k: &Mat, node: Node) -> CoeffTable<f64> {
    let mut entries: BTreeMap<MK, f64> = BTreeMap::new();
    for (sigma, b) in basis.level(node.l).iter().enumerate() {
        let w = k[(sigma, node.alpha)];
        for (key, x) in &b.entries {
            *entries.entry(*key).or_insert(0.0) += x * w;
        }
    }
    CoeffTable {
        irrep: basis.irrep,
        l: node.l,
        tau: node.alpha,
        entries,
    }
}

/// `Σ_{αLK} a_{mK}(αL)²` for a fixed `m`.
pub fn grade_norm(tables: &[CoeffTable<f64>], m: HalfInt) -> f64 {
    tables
        .iter()
        .flat_map(|t| t.entries.iter())
        .filter(|((mm, _), _)| *mm == m)
        .map(|(_, x)| x * x)
        .sum()
}

fn finish(basis: &BasisSet<f64>, blocks: Blocks, kmats: KMatrices, route: Route) -> UnitaryIrrep {
    let irrep = basis.irrep;
    let mult = multiplicities(basis);
    let nodes = node_list(&mult);
    let raw: Vec<CoeffTable<f64>> = nodes
        .iter()
        .map(|n| a_table(basis, &kmats.k[&n.l], *n))
        .collect();
    let g = 1.0 / libm::sqrt(grade_norm(&raw, irrep.f()));
    let kmats = kmats.scaled(g);
    let a_tables = raw
        .into_iter()
        .map(|mut t| {
            t.entries.values_mut().for_each(|x| *x *= g);
            t
        })
        .collect();
    let mut reduced = Mat::zeros(nodes.len(), nodes.len());
    let mut cache: BTreeMap<(HalfInt, HalfInt), Mat> = BTreeMap::new();
    for (i, t) in nodes.iter().enumerate() {
        for (j, s) in nodes.iter().enumerate() {
            let Some(o) = blocks.get(&(s.l, t.l)) else {
                continue;
            };
            let r = cache.entry((s.l, t.l)).or_insert_with(|| {
                kmats.k_inv[&t.l]
                    .mul(o)
                    .mul(&kmats.k[&s.l])
                    .scale(c_factor(t.l))
            });
            reduced[(i, j)] = r[(t.alpha, s.alpha)];
        }
    }
    UnitaryIrrep {
        irrep,
        exact_basis: false,
        exact_blocks: false,
        route,
        nodes,
        a_tables,
        reduced,
        k_matrices: kmats,
        blocks,
    }
}

/// Coupled basis and octupole blocks in floats.
#[derive(Clone, Debug, PartialEq)]
pub struct FloatStage {
    pub basis: BasisSet<f64>,
    pub blocks: Blocks,
    pub exact_basis: bool,
    pub exact_blocks: bool,
}

/// Build the basis and blocks exactly where possible.  Blocks fall back to
/// double precision when their exact contraction leaves the radical ring.
pub fn float_stage(irrep: IrrepLabel, order: CandidateOrder) -> Result<FloatStage, UnitarizeError> {
    let inexact = |e: ExactError| UnitarizeError::Basis(BasisError::Exact(e));
    Ok(match build_basis_ordered(irrep, order)? {
        Basis::Exact(b) => {
            let basis = b.to_f64();
            match float_blocks(&b) {
                Ok(blocks) => FloatStage {
                    basis,
                    blocks,
                    exact_basis: true,
                    exact_blocks: true,
                },
                Err(_) => {
                    let blocks = float_blocks(&basis).map_err(inexact)?;
                    FloatStage {
                        basis,
                        blocks,
                        exact_basis: true,
                        exact_blocks: false,
                    }
                }
            }
        }
        Basis::Inexact { basis, .. } => {
            let blocks = float_blocks(&basis).map_err(inexact)?;
            FloatStage {
                basis,
                blocks,
                exact_basis: false,
                exact_blocks: false,
            }
        }
    })
}

/// Full pipeline with a chosen route policy and candidate order.
pub fn unitary_irrep_with(
    irrep: IrrepLabel,
    strategy: Strategy,
    order: CandidateOrder,
) -> Result<UnitaryIrrep, UnitarizeError> {
    let FloatStage {
        basis,
        blocks,
        exact_basis,
        exact_blocks,
    } = float_stage(irrep, order)?;
    let (kmats, route) = match strategy {
        Strategy::MetricOnly => (metric_route(&basis, &blocks)?, Route::Metric),
        Strategy::EigenvectorOnly => eigenvector_route(&basis, &blocks)?,
        Strategy::Auto => match eigenvector_route(&basis, &blocks) {
            Ok(x) => x,
            Err(
                UnitarizeError::NonSymmetricBlock { .. }
                | UnitarizeError::DisconnectedGraph { .. }
                | UnitarizeError::UnderdeterminedSystem { .. }
                | UnitarizeError::InconsistentLowL { .. }
                | UnitarizeError::NegativeRatio { .. }
                | UnitarizeError::MetricNotPositive { .. },
            ) => (metric_route(&basis, &blocks)?, Route::Metric),
            Err(e) => return Err(e),
        },
    };
    let mut u = finish(&basis, blocks, kmats, route);
    u.exact_basis = exact_basis;
    u.exact_blocks = exact_blocks;
    Ok(u)
}

/// Orthonormal a-coefficients and reduced octupole elements of `(v, f)`.
pub fn unitary_irrep(irrep: IrrepLabel) -> Result<UnitaryIrrep, UnitarizeError> {
    unitary_irrep_with(irrep, Strategy::Auto, CandidateOrder::Standard)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn h(x: i32) -> HalfInt {
        HalfInt::from_doubled(x)
    }

    fn hermiticity(u: &UnitaryIrrep) -> f64 {
        let mut r: f64 = 0.0;
        for (i, t) in u.nodes.iter().enumerate() {
            for (j, s) in u.nodes.iter().enumerate() {
                r = r.max((u.reduced[(i, j)] - phase(s.l, t.l) * u.reduced[(j, i)]).abs());
            }
        }
        r
    }

    #[test]
    fn one_node_irrep() {
        let u = unitary_irrep(IrrepLabel::new(1, 0)).unwrap();
        assert_eq!(u.route, Route::Eigenvector);
        assert_eq!(u.nodes.len(), 1);
        let b = crate::basis::fundamental_10::<f64>();
        for (key, x) in &b.entries {
            assert!((u.a_tables[0].entries[key] - x).abs() < 1e-12);
        }
    }

    #[test]
    fn sample_spinor_irrep() {
        let u = unitary_irrep(IrrepLabel::new(1, 1)).unwrap();
        assert_eq!(u.route, Route::Eigenvector);
        let t = &u.a_tables[0];
        assert_eq!(t.l, h(1));
        // K - m = 0 column: m = 1/2 and m = -1/2
        let top = t.entries[&(h(1), h(1))];
        let bottom = t.entries[&(h(-1), h(-1))];
        assert!((top.abs() - 0.474341).abs() < 1e-6 && (bottom.abs() - 0.387298).abs() < 1e-6);
        assert!(top * bottom < 0.0);
        let n = |l: i32| Node::new(h(l), 0);
        assert!((u.reduced_element(n(1), n(5)).abs() - 6.123724).abs() < 1e-6);
        assert!((u.reduced_element(n(1), n(7)).abs() - 6.0).abs() < 1e-6);
        assert!((u.reduced_element(n(7), n(7)).abs() - 3.070597).abs() < 1e-6);
        assert!(hermiticity(&u) < 1e-9);
    }

    #[test]
    fn metric_route_handles_multiplicity() {
        let u = unitary_irrep(IrrepLabel::new(1, 3)).unwrap();
        assert_eq!(u.route, Route::Metric);
        assert!(hermiticity(&u) < 1e-9);
        let a = u.index(Node::new(h(7), 0)).unwrap();
        let b = u.index(Node::new(h(7), 1)).unwrap();
        assert!(u.reduced[(a, b)].abs() < 1e-9 && u.reduced[(b, a)].abs() < 1e-9);
        let mut diag = [u.reduced[(a, a)], u.reduced[(b, b)]];
        diag.sort_by(|x, y| y.partial_cmp(x).unwrap());
        assert!((diag[0] - 13.576570).abs() < 1e-5 && (diag[1] + 7.807568).abs() < 1e-5);
        for md in [-3, -1, 1, 3] {
            assert!((grade_norm(&u.a_tables, h(md)) - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn eigenvector_route_refuses_multiplicity() {
        let r = unitary_irrep_with(
            IrrepLabel::new(1, 3),
            Strategy::EigenvectorOnly,
            CandidateOrder::Standard,
        );
        assert!(matches!(r, Err(UnitarizeError::NonSymmetricBlock { .. })));
    }

    #[test]
    fn ratios_are_positive_on_sample_irreps() {
        for (v, t) in [(1, 1), (1, 2), (2, 1), (2, 0), (0, 3)] {
            let irrep = IrrepLabel::new(v, t);
            let FloatStage { basis, blocks, .. } =
                float_stage(irrep, CandidateOrder::Standard).unwrap();
            let mult = multiplicities(&basis);
            let mut eig = BTreeMap::new();
            for &l in mult.keys() {
                eig.insert(
                    l,
                    eigh_symmetric(&block(&blocks, l, l, &mult))
                        .unwrap()
                        .vectors,
                );
            }
            let nodes = node_list(&mult);
            let mut tr = Blocks::new();
            for (&(s, t), o) in &blocks {
                tr.insert((s, t), eig[&t].transpose().mul(o).mul(&eig[&s]));
            }
            for s in &nodes {
                for t in &nodes {
                    if s.l == t.l {
                        continue;
                    }
                    let (Some(ts), Some(st)) = (tr.get(&(t.l, s.l)), tr.get(&(s.l, t.l))) else {
                        continue;
                    };
                    let (x, y) = (ts[(s.alpha, t.alpha)], st[(t.alpha, s.alpha)]);
                    if x.abs() > EDGE_TOL && y.abs() > EDGE_TOL {
                        assert!(phase(s.l, t.l) * x / y > 0.0, "{} {} {}", irrep, s, t);
                    }
                }
            }
            assert!(compute_k_factors(&nodes, &tr).is_ok());
        }
    }

    /// Two `L = 0` states fixed by two orthonormal `L = 3` partners.
    fn synthetic() -> (Blocks, BTreeMap<HalfInt, Mat>, Mat) {
        let (l0, l3) = (h(0), h(6));
        // reduced elements of a unitary rep: R(0←3) = -R(3←0)ᵀ
        let r30 = Mat::from_rows(&[vec![1.3, -0.4], vec![0.7, 2.1]]);
        let r03 = r30.transpose().scale(-1.0);
        let theta: f64 = 0.37;
        let (c, s) = (libm::cos(theta), libm::sin(theta));
        let rot = Mat::from_rows(&[vec![c, -s], vec![s, c]]);
        let k0 = rot.mul(&Mat::diag(&[1.7, 0.6]));
        let k0_inv = Mat::diag(&[1.0 / 1.7, 1.0 / 0.6]).mul(&rot.transpose());
        let mut blocks = Blocks::new();
        // R(t←s) = c_t K_t⁻¹ O(t←s) K_s with K_3 = 1
        blocks.insert((l0, l3), r30.mul(&k0_inv).scale(1.0 / c_factor(l3)));
        blocks.insert((l3, l0), k0.mul(&r03).scale(1.0 / c_factor(l0)));
        let mut fixed = BTreeMap::new();
        fixed.insert(l3, Mat::identity(2));
        (blocks, fixed, k0.mul(&k0.transpose()))
    }

    fn residual_for(blocks: &Blocks, p: &Mat) -> f64 {
        let (l0, l3) = (h(0), h(6));
        let lhs = blocks[&(l0, l3)].mul(p).scale(c_factor(l3));
        let rhs = blocks[&(l3, l0)].transpose().scale(-c_factor(l0));
        lhs.sub(&rhs).max_abs()
    }

    #[test]
    fn low_l_solve_matches_scan() {
        let (blocks, fixed, p_true) = synthetic();
        let p = special_low_l(h(0), 2, &blocks, &fixed).unwrap();
        assert!(p.sub(&p_true).max_abs() < 1e-10);
        let angle_of = |m: &Mat| {
            let v = eigh_symmetric(m).unwrap().vectors;
            let a = libm::atan2(v[(1, 0)], v[(0, 0)]);
            // principal axis angle modulo π
            a.rem_euclid(core::f64::consts::PI)
        };
        // brute-force: P(φ) = R(φ) diag(p1, p2) R(φ)ᵀ, p fitted per φ
        let objective = |phi: f64| {
            let (c, s) = (libm::cos(phi), libm::sin(phi));
            let rot = Mat::from_rows(&[vec![c, -s], vec![s, c]]);
            let cols: Vec<Mat> = [[1.0, 0.0], [0.0, 1.0]]
                .iter()
                .map(|d| rot.mul(&Mat::diag(d)).mul(&rot.transpose()))
                .collect();
            // two-parameter linear fit for the diagonal
            let (l0, l3) = (h(0), h(6));
            let a_of = |m: &Mat| blocks[&(l0, l3)].mul(m).scale(c_factor(l3));
            let b = blocks[&(l3, l0)].transpose().scale(-c_factor(l0));
            let (a1, a2) = (a_of(&cols[0]), a_of(&cols[1]));
            let mut rows = Vec::new();
            let mut rhs = Vec::new();
            for i in 0..2 {
                for j in 0..2 {
                    rows.push(vec![a1[(i, j)], a2[(i, j)]]);
                    rhs.push(b[(i, j)]);
                }
            }
            let (x, _) = least_squares(&Mat::from_rows(&rows), &rhs).unwrap();
            let pm = cols[0].scale(x[0]).add(&cols[1].scale(x[1]));
            (residual_for(&blocks, &pm), pm)
        };
        let pi = core::f64::consts::PI;
        let steps = 20000;
        let mut best = (f64::INFINITY, 0.0);
        for i in 0..steps {
            let phi = pi * i as f64 / steps as f64;
            let (r, _) = objective(phi);
            if r < best.0 {
                best = (r, phi);
            }
        }
        // golden-section refinement around the grid minimum
        let (mut a, mut b) = (best.1 - pi / steps as f64, best.1 + pi / steps as f64);
        let g = (libm::sqrt(5.0) - 1.0) / 2.0;
        for _ in 0..200 {
            let c = b - g * (b - a);
            let d = a + g * (b - a);
            if objective(c).0 < objective(d).0 {
                b = d;
            } else {
                a = c;
            }
        }
        let phi = 0.5 * (a + b);
        let (_, p_scan) = objective(phi);
        assert!(p_scan.sub(&p).max_abs() < 1e-8);
        let d = (angle_of(&p) - angle_of(&p_scan)).abs();
        assert!(
            d.min(pi - d) < 1e-8,
            "{} vs {}",
            angle_of(&p),
            angle_of(&p_scan)
        );
    }

    #[test]
    fn low_l_without_partners_is_underdetermined() {
        let (blocks, _, _) = synthetic();
        let r = special_low_l(h(0), 2, &blocks, &BTreeMap::new());
        assert!(matches!(
            r,
            Err(UnitarizeError::UnderdeterminedSystem { .. })
        ));
    }

    #[test]
    fn routes_agree_without_multiplicity() {
        for (v, t) in [
            (1, 0),
            (0, 1),
            (1, 1),
            (2, 0),
            (0, 2),
            (0, 3),
            (1, 2),
            (3, 0),
        ] {
            let irrep = IrrepLabel::new(v, t);
            let a = unitary_irrep_with(irrep, Strategy::EigenvectorOnly, CandidateOrder::Standard)
                .unwrap();
            let b =
                unitary_irrep_with(irrep, Strategy::MetricOnly, CandidateOrder::Standard).unwrap();
            assert!(a.reduced.sub(&b.reduced).max_abs() < 1e-9, "{}", irrep);
            for (x, y) in a.a_tables.iter().zip(&b.a_tables) {
                for (key, val) in &x.entries {
                    assert!(
                        (val - y.entries.get(key).copied().unwrap_or(0.0)).abs() < 1e-9,
                        "{}",
                        irrep
                    );
                }
            }
        }
    }
}
