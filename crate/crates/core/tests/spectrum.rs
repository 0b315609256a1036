use std::f64::consts::PI;

use proptest::prelude::*;
use rsnl_core::spectrum::{CoeffVector, ProjectionConfig, Spectrum};

fn gram_defect(s: &Spectrum) -> f64 {
    let cfg = ProjectionConfig::default();
    let mut worst: f64 = 0.0;
    for j in 1..=s.len() {
        let c = s.analyze(|x| s.eigenfunction(j, x).unwrap(), &cfg).unwrap();
        for k in 1..=s.len() {
            let want = if j == k { 1.0 } else { 0.0 };
            worst = worst.max((c.get(k) - want).abs());
        }
    }
    worst
}

#[test]
fn interval_eigenfunctions_are_orthonormal() {
    assert!(gram_defect(&Spectrum::dirichlet_interval(PI, 12).unwrap()) <= 1e-10);
    assert!(gram_defect(&Spectrum::dirichlet_interval(2.5, 8).unwrap()) <= 1e-10);
}

#[test]
fn rectangle_eigenfunctions_are_orthonormal() {
    assert!(gram_defect(&Spectrum::dirichlet_rectangle(PI, PI, 10).unwrap()) <= 1e-10);
    assert!(gram_defect(&Spectrum::dirichlet_rectangle(1.0, 2.0, 10).unwrap()) <= 1e-10);
}

#[test]
fn square_has_double_eigenvalue() {
    let s = Spectrum::dirichlet_rectangle(PI, PI, 6).unwrap();
    assert_eq!(s.lambdas()[..3], [2.0, 5.0, 5.0]);
    assert_eq!(s.multiplicity(2), 2);
    assert_eq!(s.multiplicity(3), 2);
    assert_eq!(s.multiplicity(1), 1);
}

#[test]
fn table_round_trip() {
    let s = Spectrum::from_csv("k,lambda\n1,1.5\n2,4\n3,4\n".as_bytes()).unwrap();
    assert_eq!(s.lambdas(), vec![1.5, 4.0, 4.0]);
    assert_eq!(s.groups().len(), 2);
    assert!(s.eigenfunction(1, &[0.1]).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn analyze_inverts_synthesize(coeffs in prop::collection::vec(-1.0f64..1.0, 6)) {
        let s = Spectrum::dirichlet_rectangle(PI, 2.0, 6).unwrap();
        let c = CoeffVector::new(coeffs).unwrap();
        let back = s.analyze(|x| s.synthesize(&c, x).unwrap(), &ProjectionConfig::default()).unwrap();
        for k in 1..=6 {
            prop_assert!((back.get(k) - c.get(k)).abs() <= 1e-10);
        }
    }

    #[test]
    fn eigenvalues_are_sorted_and_positive(a in 0.2f64..5.0, b in 0.2f64..5.0, n in 1usize..40) {
        let s = Spectrum::dirichlet_rectangle(a, b, n).unwrap();
        let l = s.lambdas();
        prop_assert!(l[0] > 0.0);
        prop_assert!(l.windows(2).all(|w| w[0] <= w[1]));
        let covered: usize = s.groups().iter().map(|g| g.len()).sum();
        prop_assert_eq!(covered, n);
    }

    #[test]
    fn sobolev_zero_is_l2(coeffs in prop::collection::vec(-10.0f64..10.0, 1..20)) {
        let s = Spectrum::dirichlet_interval(PI, coeffs.len()).unwrap();
        let c = CoeffVector::new(coeffs).unwrap();
        prop_assert!((s.sobolev_norm(&c, 0.0).unwrap() - c.norm()).abs() <= 1e-12 * (1.0 + c.norm()));
    }
}
