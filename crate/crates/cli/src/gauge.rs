//! Distance between two realizations of the same irrep modulo the gauge
//! freedom: one orthogonal mixing per level (a sign for singly occurring
//! levels).

use std::collections::{BTreeMap, BTreeSet};

use so5::linalg::{sym_sqrt_pair, Mat};
use so5::{HalfInt, UnitaryIrrep};

/// Largest deviation after aligning `other` to `reference`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GaugeDistance {
    pub coefficients: f64,
    pub reduced: f64,
}

fn keys(
    u: &UnitaryIrrep,
    v: &UnitaryIrrep,
    idx: &[usize],
    jdx: &[usize],
) -> Vec<(HalfInt, HalfInt)> {
    let set: BTreeSet<_> = idx
        .iter()
        .flat_map(|&i| u.a_tables[i].entries.keys())
        .chain(jdx.iter().flat_map(|&j| v.a_tables[j].entries.keys()))
        .copied()
        .collect();
    set.into_iter().collect()
}

fn columns(u: &UnitaryIrrep, idx: &[usize], keys: &[(HalfInt, HalfInt)]) -> Mat {
    Mat::from_rows(
        &keys
            .iter()
            .map(|k| {
                idx.iter()
                    .map(|&i| u.a_tables[i].entries.get(k).copied().unwrap_or(0.0))
                    .collect()
            })
            .collect::<Vec<_>>(),
    )
}

/// The orthogonal factor of `m`, i.e. the orthogonal `Q` closest to it.
fn polar(m: &Mat) -> Option<Mat> {
    let (_, inv_sqrt) = sym_sqrt_pair(&m.transpose().mul(m)).ok()?;
    Some(m.mul(&inv_sqrt))
}

/// Align `other` to `reference` level by level using the coefficient
/// overlaps, then compare coefficients and reduced elements.
pub fn gauge_distance(reference: &UnitaryIrrep, other: &UnitaryIrrep) -> Option<GaugeDistance> {
    if reference.nodes != other.nodes {
        return None;
    }
    let n = reference.nodes.len();
    let mut levels: BTreeMap<HalfInt, Vec<usize>> = BTreeMap::new();
    for (i, node) in reference.nodes.iter().enumerate() {
        levels.entry(node.l).or_default().push(i);
    }
    // q maps other's states onto reference's: reference ≈ other · q
    let mut q = vec![vec![0.0; n]; n];
    let mut coefficients: f64 = 0.0;
    for idx in levels.values() {
        let ks = keys(reference, other, idx, idx);
        let a = columns(reference, idx, &ks);
        let b = columns(other, idx, &ks);
        let block = polar(&b.transpose().mul(&a))?;
        for (x, &i) in idx.iter().enumerate() {
            for (y, &j) in idx.iter().enumerate() {
                q[i][j] = block[(x, y)];
            }
        }
        coefficients = coefficients.max(b.mul(&block).sub(&a).max_abs());
    }
    let q = Mat::from_rows(&q);
    let reduced = q
        .transpose()
        .mul(&other.reduced)
        .mul(&q)
        .sub(&reference.reduced)
        .max_abs();
    Some(GaugeDistance {
        coefficients,
        reduced,
    })
}
