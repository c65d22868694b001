//! Small dense real linear algebra.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::ops::{Index, IndexMut};

/// Row-major dense matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct Mat {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum LinalgError {
    NotSymmetric { deviation: f64 },
    NotPositive { eigenvalue: f64 },
    NoConvergence,
}

impl fmt::Display for LinalgError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LinalgError::NotSymmetric { deviation } => {
                write!(f, "matrix not symmetric (deviation {:e})", deviation)
            }
            LinalgError::NotPositive { eigenvalue } => write!(
                f,
                "matrix not positive definite (eigenvalue {:e})",
                eigenvalue
            ),
            LinalgError::NoConvergence => write!(f, "Jacobi sweeps did not converge"),
        }
    }
}

impl Mat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Mat {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Mat::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, |x| x.len());
        let mut m = Mat::zeros(r, c);
        for (i, row) in rows.iter().enumerate() {
            assert_eq!(row.len(), c, "ragged rows");
            m.data[i * c..(i + 1) * c].copy_from_slice(row);
        }
        m
    }

    pub fn diag(values: &[f64]) -> Self {
        let mut m = Mat::zeros(values.len(), values.len());
        for (i, x) in values.iter().enumerate() {
            m[(i, i)] = *x;
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.data
            .chunks(self.cols.max(1))
            .take(self.rows)
            .map(|r| r.to_vec())
            .collect()
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn transpose(&self) -> Mat {
        let mut t = Mat::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    pub fn mul(&self, other: &Mat) -> Mat {
        assert_eq!(self.cols, other.rows, "shape mismatch");
        let mut out = Mat::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == 0.0 {
                    continue;
                }
                for j in 0..other.cols {
                    out.data[i * other.cols + j] += a * other.data[k * other.cols + j];
                }
            }
        }
        out
    }

    pub fn add(&self, other: &Mat) -> Mat {
        self.zip(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Mat) -> Mat {
        self.zip(other, |a, b| a - b)
    }

    pub fn scale(&self, s: f64) -> Mat {
        Mat {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|x| x * s).collect(),
        }
    }

    fn zip(&self, other: &Mat, op: impl Fn(f64, f64) -> f64) -> Mat {
        assert_eq!(
            (self.rows, self.cols),
            (other.rows, other.cols),
            "shape mismatch"
        );
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| op(*a, *b))
            .collect();
        Mat {
            rows: self.rows,
            cols: self.cols,
            data,
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    /// Largest `|A_ij - A_ji|`.
    pub fn asymmetry(&self) -> f64 {
        assert_eq!(self.rows, self.cols, "not square");
        let mut d: f64 = 0.0;
        for i in 0..self.rows {
            for j in 0..i {
                d = d.max((self[(i, j)] - self[(j, i)]).abs());
            }
        }
        d
    }

    /// `(A + Aᵀ) / 2`.
    pub fn symmetrized(&self) -> Mat {
        self.add(&self.transpose()).scale(0.5)
    }
}

impl Index<(usize, usize)> for Mat {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for Mat {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

/// Eigen-decomposition `A = V diag(values) Vᵀ`; column `k` of `vectors`
/// belongs to `values[k]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Eigh {
    pub values: Vec<f64>,
    pub vectors: Mat,
}

/// Relative asymmetry accepted by [`eigh_symmetric`].
pub const SYMMETRY_TOL: f64 = 1e-9;

/// Cyclic Jacobi diagonalization of a real symmetric matrix.
///
/// Eigenvalues are sorted descending; each eigenvector is normalized with
/// its largest-magnitude component positive (the first such on ties).
pub fn eigh_symmetric(a: &Mat) -> Result<Eigh, LinalgError> {
    let n = a.rows;
    assert_eq!(n, a.cols, "not square");
    let scale = a.max_abs().max(1.0);
    let dev = a.asymmetry();
    if dev > SYMMETRY_TOL * scale {
        return Err(LinalgError::NotSymmetric { deviation: dev });
    }
    let mut m = a.symmetrized();
    let mut v = Mat::identity(n);
    let mut converged = false;
    for _sweep in 0..100 {
        let mut off = 0.0;
        for i in 0..n {
            for j in 0..i {
                off += m[(i, j)] * m[(i, j)];
            }
        }
        if libm::sqrt(off) <= 1e-15 * scale {
            converged = true;
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = m[(p, q)];
                if apq.abs() <= 1e-300 {
                    continue;
                }
                let theta = (m[(q, q)] - m[(p, p)]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + libm::sqrt(theta * theta + 1.0));
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / libm::sqrt(t * t + 1.0);
                let s = t * c;
                for k in 0..n {
                    let mkp = m[(k, p)];
                    let mkq = m[(k, q)];
                    m[(k, p)] = c * mkp - s * mkq;
                    m[(k, q)] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let mpk = m[(p, k)];
                    let mqk = m[(q, k)];
                    m[(p, k)] = c * mpk - s * mqk;
                    m[(q, k)] = s * mpk + c * mqk;
                }
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
    }
    if !converged && n > 1 {
        return Err(LinalgError::NoConvergence);
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| {
        m[(y, y)]
            .partial_cmp(&m[(x, x)])
            .unwrap_or(core::cmp::Ordering::Equal)
    });
    let values = order.iter().map(|&k| m[(k, k)]).collect();
    let mut vectors = Mat::zeros(n, n);
    for (col, &k) in order.iter().enumerate() {
        let mut best = 0;
        for i in 0..n {
            if v[(i, k)].abs() > v[(best, k)].abs() + 1e-12 {
                best = i;
            }
        }
        let sign = if v[(best, k)] < 0.0 { -1.0 } else { 1.0 };
        for i in 0..n {
            vectors[(i, col)] = sign * v[(i, k)];
        }
    }
    Ok(Eigh { values, vectors })
}

/// `A^(1/2)` and `A^(-1/2)` of a symmetric positive definite matrix.
pub fn sym_sqrt_pair(a: &Mat) -> Result<(Mat, Mat), LinalgError> {
    let e = eigh_symmetric(a)?;
    let floor = 1e-12 * e.values.first().copied().unwrap_or(1.0).abs().max(1e-300);
    if let Some(&w) = e.values.iter().find(|w| **w <= floor) {
        return Err(LinalgError::NotPositive { eigenvalue: w });
    }
    let r: Vec<f64> = e.values.iter().map(|w| libm::sqrt(*w)).collect();
    let ri: Vec<f64> = r.iter().map(|x| 1.0 / x).collect();
    let vt = e.vectors.transpose();
    Ok((
        e.vectors.mul(&Mat::diag(&r)).mul(&vt),
        e.vectors.mul(&Mat::diag(&ri)).mul(&vt),
    ))
}

/// Smallest eigenpair of `EᵀE`, i.e. the best null vector of `E`, with the
/// gap to the next singular value squared.
#[derive(Clone, Debug, PartialEq)]
pub struct NullVector {
    pub vector: Vec<f64>,
    /// Smallest eigenvalue of `EᵀE`.
    pub residual: f64,
    /// Second smallest eigenvalue of `EᵀE` (infinite when there is only one).
    pub next: f64,
}

pub fn null_vector(e: &Mat) -> Result<NullVector, LinalgError> {
    let g = e.transpose().mul(e);
    let eig = eigh_symmetric(&g)?;
    let n = eig.values.len();
    let residual = eig.values[n - 1].max(0.0);
    let next = if n > 1 {
        eig.values[n - 2]
    } else {
        f64::INFINITY
    };
    Ok(NullVector {
        vector: eig.vectors.column(n - 1),
        residual,
        next,
    })
}

/// Least-squares solution of `A x = b` through the pseudo-inverse of `AᵀA`;
/// returns `(x, rank)`.
pub fn least_squares(a: &Mat, b: &[f64]) -> Result<(Vec<f64>, usize), LinalgError> {
    let g = a.transpose().mul(a);
    let rhs: Vec<f64> = (0..a.cols)
        .map(|j| (0..a.rows).map(|i| a[(i, j)] * b[i]).sum())
        .collect();
    let eig = eigh_symmetric(&g)?;
    let top = eig.values.first().copied().unwrap_or(0.0).abs();
    let mut x = vec![0.0; a.cols];
    let mut rank = 0;
    for (k, w) in eig.values.iter().enumerate() {
        if *w <= 1e-12 * top.max(1e-300) {
            continue;
        }
        rank += 1;
        let col = eig.vectors.column(k);
        let proj: f64 = col.iter().zip(&rhs).map(|(c, r)| c * r).sum::<f64>() / w;
        for (xi, ci) in x.iter_mut().zip(&col) {
            *xi += proj * ci;
        }
    }
    Ok((x, rank))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn identity_and_exchange() {
        let e = eigh_symmetric(&Mat::identity(3)).unwrap();
        assert_eq!(e.values, vec![1.0, 1.0, 1.0]);
        let x = Mat::from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]);
        let e = eigh_symmetric(&x).unwrap();
        assert!(close(e.values[0], 1.0, 1e-14) && close(e.values[1], -1.0, 1e-14));
        let h = core::f64::consts::FRAC_1_SQRT_2;
        assert!(close(e.vectors[(0, 0)], h, 1e-14) && close(e.vectors[(1, 0)], h, 1e-14));
        // largest component positive, first on ties
        assert!(close(e.vectors[(0, 1)], h, 1e-14) && close(e.vectors[(1, 1)], -h, 1e-14));
    }

    #[test]
    fn rejects_asymmetric() {
        let a = Mat::from_rows(&[vec![1.0, 2.0], vec![0.0, 1.0]]);
        assert!(matches!(
            eigh_symmetric(&a),
            Err(LinalgError::NotSymmetric { .. })
        ));
    }

    fn det(a: &Mat) -> f64 {
        // Gaussian elimination with partial pivoting
        let n = a.rows();
        let mut m = a.clone();
        let mut d = 1.0;
        for c in 0..n {
            let p = (c..n)
                .max_by(|&x, &y| m[(x, c)].abs().partial_cmp(&m[(y, c)].abs()).unwrap())
                .unwrap();
            if m[(p, c)] == 0.0 {
                return 0.0;
            }
            if p != c {
                for k in 0..n {
                    let t = m[(c, k)];
                    m[(c, k)] = m[(p, k)];
                    m[(p, k)] = t;
                }
                d = -d;
            }
            d *= m[(c, c)];
            for r in c + 1..n {
                let f = m[(r, c)] / m[(c, c)];
                for k in c..n {
                    m[(r, k)] -= f * m[(c, k)];
                }
            }
        }
        d
    }

    #[test]
    fn matches_characteristic_polynomial_roots() {
        let a = Mat::from_rows(&[
            vec![4.0, 1.0, -2.0, 2.0, 0.5],
            vec![1.0, 2.0, 0.0, 1.0, -1.0],
            vec![-2.0, 0.0, 3.0, -2.0, 0.0],
            vec![2.0, 1.0, -2.0, -1.0, 3.0],
            vec![0.5, -1.0, 0.0, 3.0, 1.5],
        ]);
        let e = eigh_symmetric(&a).unwrap();
        let charp = |x: f64| det(&a.sub(&Mat::identity(5).scale(x)));
        // independent roots by sign changes on a fine grid, then bisection
        let mut roots = Vec::new();
        let (lo, hi, steps) = (-20.0, 20.0, 40000);
        let mut prev = charp(lo);
        for s in 1..=steps {
            let x = lo + (hi - lo) * s as f64 / steps as f64;
            let cur = charp(x);
            if prev.signum() != cur.signum() {
                let (mut a0, mut b0) = (x - (hi - lo) / steps as f64, x);
                for _ in 0..80 {
                    let mid = 0.5 * (a0 + b0);
                    if charp(mid).signum() == charp(a0).signum() {
                        a0 = mid;
                    } else {
                        b0 = mid;
                    }
                }
                roots.push(0.5 * (a0 + b0));
            }
            prev = cur;
        }
        roots.reverse();
        assert_eq!(roots.len(), 5);
        for (r, w) in roots.iter().zip(&e.values) {
            assert!(close(*r, *w, 1e-9), "{} vs {}", r, w);
        }
        // A V = V Λ and VᵀV = 1
        let av = a.mul(&e.vectors);
        let vl = e.vectors.mul(&Mat::diag(&e.values));
        assert!(av.sub(&vl).max_abs() < 1e-12);
        assert!(
            e.vectors
                .transpose()
                .mul(&e.vectors)
                .sub(&Mat::identity(5))
                .max_abs()
                < 1e-13
        );
    }

    #[test]
    fn square_roots() {
        let a = Mat::from_rows(&[vec![5.0, 2.0], vec![2.0, 3.0]]);
        let (r, ri) = sym_sqrt_pair(&a).unwrap();
        assert!(r.mul(&r).sub(&a).max_abs() < 1e-13);
        assert!(r.mul(&ri).sub(&Mat::identity(2)).max_abs() < 1e-13);
        let neg = Mat::from_rows(&[vec![1.0, 2.0], vec![2.0, 1.0]]);
        assert!(matches!(
            sym_sqrt_pair(&neg),
            Err(LinalgError::NotPositive { .. })
        ));
    }

    #[test]
    fn null_and_least_squares() {
        let e = Mat::from_rows(&[vec![1.0, -1.0, 0.0], vec![0.0, 1.0, -1.0]]);
        let nv = null_vector(&e).unwrap();
        let s = 1.0 / libm::sqrt(3.0);
        assert!(nv.vector.iter().all(|x| close(x.abs(), s, 1e-13)));
        assert!(nv.residual < 1e-24 && nv.next > 0.5);
        let a = Mat::from_rows(&[vec![1.0, 0.0], vec![0.0, 1.0], vec![1.0, 1.0]]);
        let (x, rank) = least_squares(&a, &[1.0, 2.0, 3.0]).unwrap();
        assert_eq!(rank, 2);
        assert!(close(x[0], 1.0, 1e-13) && close(x[1], 2.0, 1e-13));
    }
}
