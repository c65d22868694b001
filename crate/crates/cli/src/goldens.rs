//! Comparison of computed results against the reference corpus.
//!
//! The corpus holds three files:
//! `branching.json` (angular momentum content of twenty irreps),
//! `b_tables.json` (exact basis coefficients as printed, radicals as text)
//! and `samples.json` (orthonormal coefficients and reduced matrix elements
//! to six decimals).

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::{Path, PathBuf};

use serde::Deserialize;
use so5::basis::{build_basis, Basis};
use so5::branching::{content_list, l_content};
use so5::exact::parse_radical;
use so5::linalg::Mat;
use so5::{HalfInt, IrrepLabel, RadicalSum, UnitaryIrrep};

/// Tolerance for the floating-point sample tables.
pub const SAMPLE_TOL: f64 = 5e-6;

#[derive(Debug)]
pub enum CorpusError {
    Missing(PathBuf),
    Unreadable(PathBuf, String),
    Malformed(PathBuf, String),
}

impl fmt::Display for CorpusError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CorpusError::Missing(p) => write!(f, "corpus file {} not found", p.display()),
            CorpusError::Unreadable(p, e) => write!(f, "cannot read {}: {}", p.display(), e),
            CorpusError::Malformed(p, e) => {
                write!(f, "malformed corpus file {}: {}", p.display(), e)
            }
        }
    }
}

impl std::error::Error for CorpusError {}

#[derive(Clone, Debug, Deserialize)]
pub struct BranchingRow {
    pub v: u32,
    pub two_f: u32,
    pub two_l: Vec<i32>,
}

#[derive(Clone, Debug, Deserialize)]
struct BranchingFile {
    rows: Vec<BranchingRow>,
}

#[derive(Clone, Debug, Deserialize)]
pub struct ExactEntry {
    pub two_m: i32,
    pub two_k: i32,
    pub value: String,
}

#[derive(Clone, Debug, Deserialize)]
pub struct ExactLevel {
    pub two_l: i32,
    pub tau: usize,
    pub entries: Vec<ExactEntry>,
}

#[derive(Clone, Debug, Deserialize)]
pub struct BTable {
    pub v: u32,
    pub two_f: u32,
    pub levels: Vec<ExactLevel>,
}

#[derive(Clone, Debug, Deserialize)]
struct BTableFile {
    tables: Vec<BTable>,
}

#[derive(Clone, Debug, Deserialize)]
pub struct FloatEntry {
    pub two_m: i32,
    pub two_k: i32,
    pub value: f64,
}

#[derive(Clone, Debug, Deserialize)]
pub struct LevelRef {
    pub two_l: i32,
    pub tau: usize,
}

#[derive(Clone, Debug, Deserialize)]
pub struct FloatTable {
    pub two_l: i32,
    pub tau: usize,
    pub entries: Vec<FloatEntry>,
}

#[derive(Clone, Debug, Deserialize)]
pub struct Sample {
    pub v: u32,
    pub two_f: u32,
    pub levels: Vec<LevelRef>,
    pub a_tables: Vec<FloatTable>,
    /// As printed: `reduced[i][j]` pairs state `i` with state `j`.
    pub reduced: Vec<Vec<f64>>,
}

#[derive(Clone, Debug, Deserialize)]
struct SampleFile {
    samples: Vec<Sample>,
}

#[derive(Clone, Debug)]
pub struct Corpus {
    pub branching: Vec<BranchingRow>,
    pub b_tables: Vec<BTable>,
    pub samples: Vec<Sample>,
}

fn read_json<T: for<'de> Deserialize<'de>>(dir: &Path, name: &str) -> Result<T, CorpusError> {
    let path = dir.join(name);
    if !path.is_file() {
        return Err(CorpusError::Missing(path));
    }
    let text = std::fs::read_to_string(&path)
        .map_err(|e| CorpusError::Unreadable(path.clone(), e.to_string()))?;
    serde_json::from_str(&text).map_err(|e| CorpusError::Malformed(path, e.to_string()))
}

pub fn load_corpus(dir: &Path) -> Result<Corpus, CorpusError> {
    let branching: BranchingFile = read_json(dir, "branching.json")?;
    let b_tables: BTableFile = read_json(dir, "b_tables.json")?;
    let samples: SampleFile = read_json(dir, "samples.json")?;
    Ok(Corpus {
        branching: branching.rows,
        b_tables: b_tables.tables,
        samples: samples.samples,
    })
}

/// The corpus shipped with this crate.
pub fn default_corpus_dir() -> PathBuf {
    PathBuf::from(concat!(env!("CARGO_MANIFEST_DIR"), "/goldens"))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Comparison {
    /// Integer lists compared for equality.
    Content,
    /// Canonical exact equality.
    Exact,
    /// Absolute deviation against a tolerance.
    Float(f64),
}

/// Result for one reference table.
#[derive(Clone, Debug)]
pub struct TableReport {
    pub name: String,
    pub comparison: Comparison,
    /// Cells compared.
    pub checked: usize,
    pub max_deviation: f64,
    pub mismatches: Vec<String>,
    pub notes: Vec<String>,
}

impl TableReport {
    fn new(name: String, comparison: Comparison) -> Self {
        TableReport {
            name,
            comparison,
            checked: 0,
            max_deviation: 0.0,
            mismatches: Vec::new(),
            notes: Vec::new(),
        }
    }

    pub fn passed(&self) -> bool {
        self.mismatches.is_empty()
    }
}

fn label(v: u32, two_f: u32) -> IrrepLabel {
    IrrepLabel::new(v, two_f)
}

/// Table of angular momentum content, one report for all rows.
pub fn check_branching(rows: &[BranchingRow]) -> TableReport {
    let mut rep = TableReport::new("branching".to_string(), Comparison::Content);
    for row in rows {
        let irrep = label(row.v, row.two_f);
        rep.checked += 1;
        let mut expected = row.two_l.clone();
        expected.sort_unstable();
        match l_content(irrep).map(|c| content_list(&c)) {
            Ok(got) if got == expected => {}
            Ok(got) => {
                rep.max_deviation = 1.0;
                rep.mismatches.push(format!(
                    "{}: expected 2L {:?}, computed {:?}",
                    irrep, expected, got
                ));
            }
            Err(e) => {
                rep.max_deviation = 1.0;
                rep.mismatches.push(format!("{}: {}", irrep, e));
            }
        }
    }
    rep
}

/// Exact comparison of one printed coefficient table; absent cells are zero.
pub fn check_b_table(table: &BTable) -> TableReport {
    let irrep = label(table.v, table.two_f);
    let mut rep = TableReport::new(format!("b {}", irrep), Comparison::Exact);
    let basis = match build_basis(irrep) {
        Ok(Basis::Exact(b)) => b,
        Ok(Basis::Inexact { reason, .. }) => {
            rep.mismatches
                .push(format!("exact basis unavailable: {}", reason));
            rep.max_deviation = f64::INFINITY;
            return rep;
        }
        Err(e) => {
            rep.mismatches.push(format!("basis: {}", e));
            rep.max_deviation = f64::INFINITY;
            return rep;
        }
    };
    for level in &table.levels {
        let l = HalfInt::from_doubled(level.two_l);
        let Some(computed) = basis.level(l).get(level.tau) else {
            rep.mismatches
                .push(format!("L = {} τ = {} not present", l, level.tau));
            continue;
        };
        let mut printed: BTreeMap<(HalfInt, HalfInt), RadicalSum> = BTreeMap::new();
        for e in &level.entries {
            let key = (
                HalfInt::from_doubled(e.two_m),
                HalfInt::from_doubled(e.two_k),
            );
            match parse_radical(&e.value) {
                Some(r) => {
                    printed.insert(key, r);
                }
                None => rep
                    .mismatches
                    .push(format!("L = {} unparsable value `{}`", l, e.value)),
            }
        }
        let keys: BTreeSet<_> = printed
            .keys()
            .chain(computed.entries.keys())
            .copied()
            .collect();
        for key in keys {
            let zero = RadicalSum::zero();
            let p = printed.get(&key).unwrap_or(&zero);
            let c = computed.entries.get(&key).unwrap_or(&zero);
            rep.checked += 1;
            if p != c {
                rep.max_deviation = rep.max_deviation.max((p.to_f64() - c.to_f64()).abs());
                rep.mismatches.push(format!(
                    "L = {} τ = {} m = {} K = {}: printed {}, computed {}",
                    l, level.tau, key.0, key.1, p, c
                ));
            }
        }
    }
    rep
}

/// Deviation of the sample tables after gauge fitting.
#[derive(Clone, Debug)]
pub struct SampleFit {
    pub irrep: IrrepLabel,
    pub a: TableReport,
    pub reduced: TableReport,
    /// Whether the printed matrix is read as `[target][source]`.
    pub target_rows: bool,
    /// Least-squares scale of the printed coefficients relative to ours.
    pub a_scale: f64,
}

fn vector(entries: &[FloatEntry]) -> BTreeMap<(i32, i32), f64> {
    entries
        .iter()
        .map(|e| ((e.two_m, e.two_k), e.value))
        .collect()
}

fn computed_vector(u: &UnitaryIrrep, i: usize) -> BTreeMap<(i32, i32), f64> {
    u.a_tables[i]
        .entries
        .iter()
        .map(|(&(m, k), &x)| ((m.doubled(), k.doubled()), x))
        .collect()
}

fn overlap(a: &BTreeMap<(i32, i32), f64>, b: &BTreeMap<(i32, i32), f64>) -> f64 {
    a.iter()
        .map(|(k, x)| x * b.get(k).copied().unwrap_or(0.0))
        .sum()
}

/// `Qᵀ R Q` for block-diagonal `Q`.
fn conjugate(r: &Mat, q: &Mat) -> Mat {
    q.transpose().mul(r).mul(q)
}

fn max_dev(a: &Mat, b: &Mat) -> f64 {
    a.sub(b).max_abs()
}

fn rotation(theta: f64, reflect: bool) -> [[f64; 2]; 2] {
    let (s, c) = theta.sin_cos();
    if reflect {
        [[c, s], [s, -c]]
    } else {
        [[c, -s], [s, c]]
    }
}

fn with_block(q: &Mat, idx: &[usize], block: [[f64; 2]; 2]) -> Mat {
    let mut rows = q.to_rows();
    for (a, &i) in idx.iter().enumerate() {
        for (b, &j) in idx.iter().enumerate() {
            rows[i][j] = block[a][b];
        }
    }
    Mat::from_rows(&rows)
}

fn sq_dev(a: &Mat, b: &Mat) -> f64 {
    let d = a.sub(b);
    (0..d.rows())
        .flat_map(|i| (0..d.cols()).map(move |j| (i, j)))
        .map(|(i, j)| d[(i, j)] * d[(i, j)])
        .sum()
}

/// Best `O(2)` mixing of a two-state multiplet for matching `target`.
fn fit_pair(r: &Mat, q: &Mat, idx: &[usize], target: &Mat) -> Mat {
    let cost = |theta: f64, reflect: bool| {
        sq_dev(
            &conjugate(r, &with_block(q, idx, rotation(theta, reflect))),
            target,
        )
    };
    let mut best = (f64::INFINITY, 0.0, false);
    let steps = 720;
    for reflect in [false, true] {
        for s in 0..steps {
            let theta = std::f64::consts::TAU * s as f64 / steps as f64;
            let c = cost(theta, reflect);
            if c < best.0 {
                best = (c, theta, reflect);
            }
        }
    }
    // golden-section refinement around the best grid point
    let h = std::f64::consts::TAU / steps as f64;
    let (mut lo, mut hi) = (best.1 - h, best.1 + h);
    let g = (5f64.sqrt() - 1.0) / 2.0;
    for _ in 0..80 {
        let a = hi - g * (hi - lo);
        let b = lo + g * (hi - lo);
        if cost(a, best.2) < cost(b, best.2) {
            hi = b;
        } else {
            lo = a;
        }
    }
    with_block(q, idx, rotation(0.5 * (lo + hi), best.2))
}

/// Compare one sample against a computed irrep.
///
/// Gauge: each singly occurring level gets the sign that maximizes the
/// overlap of its coefficients with the printed ones; a doubly occurring
/// level is mixed by the `O(2)` transformation (rotation, reflection or
/// exchange) that best fits the reduced elements. Both orientations of the
/// printed matrix are tried and the better one kept.
pub fn fit_sample(sample: &Sample, u: &UnitaryIrrep) -> SampleFit {
    let irrep = label(sample.v, sample.two_f);
    let mut a_rep = TableReport::new(format!("a {}", irrep), Comparison::Float(SAMPLE_TOL));
    let mut r_rep = TableReport::new(format!("reduced {}", irrep), Comparison::Float(SAMPLE_TOL));
    let n = sample.levels.len();
    let same_shape = n == u.nodes.len()
        && sample.reduced.len() == n
        && sample.reduced.iter().all(|r| r.len() == n)
        && sample
            .levels
            .iter()
            .zip(&u.nodes)
            .all(|(p, c)| p.two_l == c.l.doubled());
    if !same_shape {
        let msg = format!(
            "state list differs: printed {:?}, computed {:?}",
            sample.levels.iter().map(|l| l.two_l).collect::<Vec<_>>(),
            u.nodes.iter().map(|n| n.l.doubled()).collect::<Vec<_>>()
        );
        a_rep.mismatches.push(msg.clone());
        r_rep.mismatches.push(msg);
        return SampleFit {
            irrep,
            a: a_rep,
            reduced: r_rep,
            target_rows: true,
            a_scale: f64::NAN,
        };
    }
    let printed_a: Vec<BTreeMap<(i32, i32), f64>> = sample
        .levels
        .iter()
        .map(|lv| {
            sample
                .a_tables
                .iter()
                .find(|t| t.two_l == lv.two_l && t.tau == lv.tau)
                .map(|t| vector(&t.entries))
                .unwrap_or_default()
        })
        .collect();
    let ours_a: Vec<BTreeMap<(i32, i32), f64>> = (0..n).map(|i| computed_vector(u, i)).collect();

    // signs from coefficient overlaps
    let mut q = Mat::identity(n);
    let mut multiplets: BTreeMap<i32, Vec<usize>> = BTreeMap::new();
    for (i, lv) in sample.levels.iter().enumerate() {
        multiplets.entry(lv.two_l).or_default().push(i);
    }
    let mut rows = q.to_rows();
    for idx in multiplets.values().filter(|v| v.len() == 1) {
        let i = idx[0];
        rows[i][i] = if overlap(&ours_a[i], &printed_a[i]) < 0.0 {
            -1.0
        } else {
            1.0
        };
    }
    q = Mat::from_rows(&rows);

    let printed = Mat::from_rows(&sample.reduced);
    let mut best: Option<(f64, bool, Mat)> = None;
    for target_rows in [true, false] {
        let target = if target_rows {
            printed.clone()
        } else {
            printed.transpose()
        };
        let mut qq = q.clone();
        for idx in multiplets.values().filter(|v| v.len() > 1) {
            if idx.len() == 2 {
                qq = fit_pair(&u.reduced, &qq, idx, &target);
            } else {
                r_rep
                    .notes
                    .push(format!("multiplet of {} states left unmixed", idx.len()));
            }
        }
        let dev = max_dev(&conjugate(&u.reduced, &qq), &target);
        if best.as_ref().is_none_or(|b| dev < b.0) {
            best = Some((dev, target_rows, qq));
        }
    }
    let (_, target_rows, qq) = best.expect("two orientations tried");
    let target = if target_rows {
        printed.clone()
    } else {
        printed.transpose()
    };
    let fitted = conjugate(&u.reduced, &qq);
    let labels: Vec<String> = sample
        .levels
        .iter()
        .map(|l| format!("{}_{}", HalfInt::from_doubled(l.two_l), l.tau + 1))
        .collect();
    for i in 0..n {
        for j in 0..n {
            let d = (fitted[(i, j)] - target[(i, j)]).abs();
            r_rep.checked += 1;
            r_rep.max_deviation = r_rep.max_deviation.max(d);
            if d > SAMPLE_TOL {
                r_rep.mismatches.push(format!(
                    "<{}|O|{}>: printed {:.6}, computed {:.6}",
                    labels[i],
                    labels[j],
                    target[(i, j)],
                    fitted[(i, j)]
                ));
            }
        }
    }
    r_rep.notes.push(format!(
        "printed rows are {}",
        if target_rows { "targets" } else { "sources" }
    ));

    // coefficients mixed by the same gauge
    let mut cells = Vec::new();
    for j in 0..n {
        let mut mixed: BTreeMap<(i32, i32), f64> = BTreeMap::new();
        for i in 0..n {
            if qq[(i, j)] != 0.0 {
                for (k, x) in &ours_a[i] {
                    *mixed.entry(*k).or_insert(0.0) += qq[(i, j)] * x;
                }
            }
        }
        let keys: BTreeSet<(i32, i32)> = mixed.keys().chain(printed_a[j].keys()).copied().collect();
        for k in keys {
            let c = mixed.get(&k).copied().unwrap_or(0.0);
            let p = printed_a[j].get(&k).copied().unwrap_or(0.0);
            let cell = format!(
                "{} m = {} K = {}",
                labels[j],
                HalfInt::from_doubled(k.0),
                HalfInt::from_doubled(k.1)
            );
            cells.push((cell, p, c));
        }
    }
    let describe = |(cell, p, c): &(String, f64, f64)| {
        format!("{}: printed {:.6}, computed {:.6}", cell, p, c)
    };
    for x in &cells {
        let d = (x.1 - x.2).abs();
        a_rep.checked += 1;
        a_rep.max_deviation = a_rep.max_deviation.max(d);
        if d > SAMPLE_TOL {
            a_rep.mismatches.push(describe(x));
        }
    }
    // a uniform factor between printed and computed coefficients, if that
    // explains most of the differences
    let (pp, cc) = cells
        .iter()
        .fold((0.0, 0.0), |(a, b), x| (a + x.1 * x.1, b + x.2 * x.2));
    let a_scale = if cc > 0.0 { (pp / cc).sqrt() } else { f64::NAN };
    let rescaled: Vec<&(String, f64, f64)> = cells
        .iter()
        .filter(|x| (x.1 - a_scale * x.2).abs() > SAMPLE_TOL * a_scale.max(1.0) * 2.0)
        .collect();
    if a_rep.mismatches.len() > 2 * rescaled.len() {
        let dev = cells
            .iter()
            .map(|x| (x.1 - a_scale * x.2).abs())
            .fold(0.0, f64::max);
        a_rep.notes.push(format!(
            "printed coefficients are ours times {:.6}; with that factor removed {} cells differ (max deviation {:.1e})",
            a_scale,
            rescaled.len(),
            dev
        ));
        for x in rescaled {
            a_rep.notes.push(format!(
                "after rescaling, {}",
                describe(&(x.0.clone(), x.1, a_scale * x.2))
            ));
        }
    }
    SampleFit {
        irrep,
        a: a_rep,
        reduced: r_rep,
        target_rows,
        a_scale,
    }
}

/// Compute and compare every sample.
pub fn check_samples(samples: &[Sample]) -> Vec<SampleFit> {
    samples
        .iter()
        .map(|s| {
            let irrep = label(s.v, s.two_f);
            match so5::unitary_irrep(irrep) {
                Ok(u) => fit_sample(s, &u),
                Err(e) => {
                    let mut a =
                        TableReport::new(format!("a {}", irrep), Comparison::Float(SAMPLE_TOL));
                    a.mismatches.push(format!("unitarization failed: {}", e));
                    a.max_deviation = f64::INFINITY;
                    let mut reduced = a.clone();
                    reduced.name = format!("reduced {}", irrep);
                    SampleFit {
                        irrep,
                        a,
                        reduced,
                        target_rows: true,
                        a_scale: f64::NAN,
                    }
                }
            }
        })
        .collect()
}

/// Every table of the corpus.
pub fn run_goldens(corpus_dir: &Path) -> Result<Vec<TableReport>, CorpusError> {
    let corpus = load_corpus(corpus_dir)?;
    let mut out = vec![check_branching(&corpus.branching)];
    out.extend(corpus.b_tables.iter().map(check_b_table));
    for fit in check_samples(&corpus.samples) {
        out.push(fit.a);
        out.push(fit.reduced);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shipped_corpus_loads() {
        let c = load_corpus(&default_corpus_dir()).unwrap();
        assert_eq!(c.branching.len(), 20);
        assert_eq!(c.b_tables.len(), 8);
        assert_eq!(c.samples.len(), 4);
    }

    #[test]
    fn missing_corpus_is_reported() {
        let dir = std::env::temp_dir().join("so5-no-such-corpus");
        assert!(matches!(run_goldens(&dir), Err(CorpusError::Missing(_))));
    }

    #[test]
    fn fit_recovers_a_rotated_pair() {
        // a symmetric matrix mixed inside a pair, with one sign flip outside
        let r = Mat::from_rows(&[
            vec![1.0, 2.0, 0.5],
            vec![2.0, 3.0, -1.0],
            vec![0.5, -1.0, 4.0],
        ]);
        let q = with_block(&Mat::diag(&[1.0, 1.0, -1.0]), &[0, 1], rotation(0.7, true));
        let target = conjugate(&r, &q);
        let start = Mat::diag(&[1.0, 1.0, -1.0]);
        let fitted = fit_pair(&r, &start, &[0, 1], &target);
        assert!(max_dev(&conjugate(&r, &fitted), &target) < 1e-9);
    }
}
