use num_bigint::BigInt;
use proptest::prelude::*;
use so5::angular::cg_doubled;
use so5::basis::{build_basis_with, residue, CandidateOrder};
use so5::branching::{content_dimension, l_content_0f, l_content_v0};
use so5::exact::sqrt_rational;
use so5::{dimension, l_content, IrrepLabel, RadicalSum, Rational};

fn rational(n: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}

/// Small radical sums with up to three terms.
fn radical() -> impl Strategy<Value = RadicalSum> {
    prop::collection::vec((-20i64..=20, 1i64..=12, 1u64..=30), 0..=3).prop_map(|terms| {
        let mut out = RadicalSum::zero();
        for (n, d, r) in terms {
            out += RadicalSum::term(rational(n, d), r);
        }
        out
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn square_root_squares_back(n in 0i64..=5000, d in 1i64..=5000) {
        let q = rational(n, d);
        let r = sqrt_rational(&q).unwrap();
        prop_assert_eq!(&r * &r, RadicalSum::from_rational(q));
    }

    #[test]
    fn product_of_roots_in_floats(a in 0i64..=400, b in 1i64..=400, c in 0i64..=400, d in 1i64..=400) {
        let p = sqrt_rational(&rational(a, b)).unwrap();
        let q = sqrt_rational(&rational(c, d)).unwrap();
        let want = ((a as f64 / b as f64) * (c as f64 / d as f64)).sqrt();
        prop_assert!(((&p * &q).to_f64() - want).abs() <= 1e-12 * want.max(1.0));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn multiplication_is_commutative_and_associative(x in radical(), y in radical(), z in radical()) {
        prop_assert_eq!(&x * &y, &y * &x);
        prop_assert_eq!(&(&x * &y) * &z, &x * &(&y * &z));
        prop_assert_eq!(&x * &(&y + &z), &(&x * &y) + &(&x * &z));
    }

    #[test]
    fn clebsch_gordan_exchange_symmetry(j1 in 0i32..=8, j2 in 0i32..=8, pick_j in 0i32..=8, pick_m1 in 0i32..=8, pick_m2 in 0i32..=8) {
        // doubled arguments in the physical range
        let lo = (j1 - j2).abs();
        let j = lo + 2 * (pick_j % ((j1 + j2 - lo) / 2 + 1));
        let m1 = -j1 + 2 * (pick_m1 % (j1 + 1));
        let m2 = -j2 + 2 * (pick_m2 % (j2 + 1));
        let m = m1 + m2;
        let a = cg_doubled(j1, m1, j2, m2, j, m);
        let b = cg_doubled(j2, m2, j1, m1, j, m);
        let sign = if ((j1 + j2 - j) / 2) % 2 == 0 { 1 } else { -1 };
        prop_assert_eq!(a.clone(), b.scale(&rational(sign, 1)));
        prop_assert!(a.num_terms() <= 1);
    }

    #[test]
    fn branching_dimension_matches_weyl(v in 0u32..=6, t in 0u32..=6) {
        let irrep = IrrepLabel::new(v, t);
        prop_assert_eq!(content_dimension(&l_content(irrep).unwrap()), dimension(irrep));
    }
}

#[test]
fn closed_forms_agree_with_freudenthal() {
    for v in 0..=9 {
        assert_eq!(
            l_content_v0(v),
            l_content(IrrepLabel::new(v, 0)).unwrap(),
            "v = {}",
            v
        );
    }
    for t in 0..=9 {
        assert_eq!(
            l_content_0f(t),
            l_content(IrrepLabel::new(0, t)).unwrap(),
            "2f = {}",
            t
        );
    }
}

#[test]
fn basis_invariants() {
    for v in 0..=3 {
        for t in 0..=3 {
            let irrep = IrrepLabel::new(v, t);
            if (v, t) == (3, 3) {
                // leaves the radical ring; checked in floats
                let b = build_basis_with::<f64>(irrep, CandidateOrder::Standard).unwrap();
                assert_eq!(b.content(), l_content(irrep).unwrap());
                for tables in b.levels.values() {
                    for (i, x) in tables.iter().enumerate() {
                        for (j, y) in tables.iter().enumerate() {
                            let want = if i == j { 1.0 } else { 0.0 };
                            assert!((x.dot(y) - want).abs() < 1e-12);
                        }
                    }
                }
                continue;
            }
            let b = build_basis_with::<RadicalSum>(irrep, CandidateOrder::Standard).unwrap();
            assert_eq!(b.content(), l_content(irrep).unwrap(), "{}", irrep);
            for tables in b.levels.values() {
                for (i, x) in tables.iter().enumerate() {
                    for (m, k) in x.entries.keys() {
                        let r = ((k.doubled() - m.doubled()) / 2).rem_euclid(3);
                        assert_eq!(r, residue(irrep), "{} sparsity", irrep);
                    }
                    let lead = x.scan().next().unwrap().1;
                    assert_eq!(lead.signum(), 1, "{} phase", irrep);
                    for (j, y) in tables.iter().enumerate() {
                        let want = if i == j {
                            RadicalSum::one()
                        } else {
                            RadicalSum::zero()
                        };
                        assert_eq!(x.dot(y), want, "{} orthonormality", irrep);
                    }
                }
            }
        }
    }
}
