//! SU(2) Clebsch-Gordan coefficients (Condon-Shortley phase) and ladder
//! matrix elements, all exact.

use alloc::collections::BTreeMap;
use core::fmt;

use num_bigint::BigInt;
use num_traits::{One, Zero};

use crate::exact::{sqrt_rational, HalfInt, RadicalSum, Rational};

/// Arguments of `(j1 m1, j2 m2 | J M)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CgArgs {
    pub j1: HalfInt,
    pub m1: HalfInt,
    pub j2: HalfInt,
    pub m2: HalfInt,
    pub j: HalfInt,
    pub m: HalfInt,
}

impl CgArgs {
    pub fn new(j1: HalfInt, m1: HalfInt, j2: HalfInt, m2: HalfInt, j: HalfInt, m: HalfInt) -> Self {
        CgArgs {
            j1,
            m1,
            j2,
            m2,
            j,
            m,
        }
    }

    /// Build from doubled integers.
    pub fn doubled(j1: i32, m1: i32, j2: i32, m2: i32, j: i32, m: i32) -> Self {
        let h = HalfInt::from_doubled;
        CgArgs::new(h(j1), h(m1), h(j2), h(m2), h(j), h(m))
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum AngularError {
    /// Some `j - m` is not an integer, or a `j` is negative.
    Malformed(CgArgs),
}

impl fmt::Display for AngularError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AngularError::Malformed(a) => write!(
                f,
                "malformed angular momenta ({} {}, {} {} | {} {})",
                a.j1, a.m1, a.j2, a.m2, a.j, a.m
            ),
        }
    }
}

fn factorial(n: i32) -> BigInt {
    let mut acc = BigInt::one();
    for k in 2..=n {
        acc *= k;
    }
    acc
}

/// Exact Clebsch-Gordan coefficient by the Racah closed-form sum.
///
/// Returns zero when `M != m1 + m2`, when a projection exceeds its `j`, or
/// when the triangle rule fails.
pub fn cg(a: &CgArgs) -> Result<RadicalSum, AngularError> {
    let (j1, m1, j2, m2, j, m) = (
        a.j1.doubled(),
        a.m1.doubled(),
        a.j2.doubled(),
        a.m2.doubled(),
        a.j.doubled(),
        a.m.doubled(),
    );
    if j1 < 0 || j2 < 0 || j < 0 || (j1 - m1) % 2 != 0 || (j2 - m2) % 2 != 0 || (j - m) % 2 != 0 {
        return Err(AngularError::Malformed(*a));
    }
    if m1 + m2 != m || m1.abs() > j1 || m2.abs() > j2 || m.abs() > j {
        return Ok(RadicalSum::zero());
    }
    if (j1 + j2 + j) % 2 != 0 || j < (j1 - j2).abs() || j > j1 + j2 {
        return Ok(RadicalSum::zero());
    }
    let h = |x: i32| x / 2;
    let f = |x: i32| factorial(h(x));

    let num = BigInt::from(j + 1)
        * f(j1 + j2 - j)
        * f(j1 - j2 + j)
        * f(-j1 + j2 + j)
        * f(j1 + m1)
        * f(j1 - m1)
        * f(j2 + m2)
        * f(j2 - m2)
        * f(j + m)
        * f(j - m);
    let den = factorial(h(j1 + j2 + j) + 1);
    let pre = Rational::new(num, den);

    let mut sum = Rational::zero();
    let kmax = h(j1 + j2 - j).min(h(j1 - m1)).min(h(j2 + m2));
    let kmin = 0.max(-h(j - j2 + m1)).max(-h(j - j1 - m2));
    for k in kmin..=kmax {
        let d = factorial(k)
            * factorial(h(j1 + j2 - j) - k)
            * factorial(h(j1 - m1) - k)
            * factorial(h(j2 + m2) - k)
            * factorial(h(j - j2 + m1) + k)
            * factorial(h(j - j1 - m2) + k);
        let term = Rational::new(BigInt::one(), d);
        if k % 2 == 0 {
            sum += term;
        } else {
            sum -= term;
        }
    }
    let root = sqrt_rational(&pre).expect("CG prefactor is positive");
    Ok(root.scale(&sum))
}

/// Shorthand for [`cg`] on doubled arguments; zero for malformed input.
pub fn cg_doubled(j1: i32, m1: i32, j2: i32, m2: i32, j: i32, m: i32) -> RadicalSum {
    cg(&CgArgs::doubled(j1, m1, j2, m2, j, m)).unwrap_or_else(|_| RadicalSum::zero())
}

/// Floating-point value of [`cg_doubled`].
pub fn cg_f64(j1: i32, m1: i32, j2: i32, m2: i32, j: i32, m: i32) -> f64 {
    cg_doubled(j1, m1, j2, m2, j, m).to_f64()
}

/// Direction of a ladder operator.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Ladder {
    Raise,
    Lower,
}

/// `√((L ∓ M)(L ± M + 1))`, the matrix element of `L±` on `|L M⟩`.
pub fn ladder_factor(l: HalfInt, m: HalfInt, dir: Ladder) -> RadicalSum {
    let (l, m) = (l.doubled(), m.doubled());
    if m.abs() > l {
        return RadicalSum::zero();
    }
    let (a, b) = match dir {
        Ladder::Raise => ((l - m) / 2, (l + m) / 2 + 1),
        Ladder::Lower => ((l + m) / 2, (l - m) / 2 + 1),
    };
    RadicalSum::sqrt_int((a as u64) * (b as u64))
}

/// Memoized Clebsch-Gordan coefficients keyed by doubled arguments.
#[derive(Default, Debug, Clone)]
pub struct CgCache {
    table: BTreeMap<[i32; 6], RadicalSum>,
}

impl CgCache {
    pub fn new() -> Self {
        CgCache::default()
    }

    pub fn get(&mut self, j1: i32, m1: i32, j2: i32, m2: i32, j: i32, m: i32) -> &RadicalSum {
        self.table
            .entry([j1, m1, j2, m2, j, m])
            .or_insert_with(|| cg_doubled(j1, m1, j2, m2, j, m))
    }

    pub fn len(&self) -> usize {
        self.table.len()
    }

    pub fn is_empty(&self) -> bool {
        self.table.is_empty()
    }
}
