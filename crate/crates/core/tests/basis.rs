mod common;

use manyknot::basis::{bspline_eval, derive_coefficients, manyknot_eval, manyknot_support};
use manyknot::{BSplineOrder, ManyKnotBasis};
use proptest::prelude::*;

#[test]
fn partition_of_unity_on_fine_grid() {
    let q = ManyKnotBasis::quadric();
    for i in 0..=2000 {
        let x = -10.0 + i as f64 * 1e-2;
        let s: f64 = (-15..=15).map(|j| manyknot_eval(&q, x - j as f64)).sum();
        assert!((s - 1.0).abs() < 1e-10, "x = {x}: {s}");
    }
}

#[test]
fn cardinal_on_integers() {
    let q = ManyKnotBasis::quadric();
    for j in -5i32..=5 {
        let expected = if j == 0 { 1.0 } else { 0.0 };
        assert!((q.eval(f64::from(j)) - expected).abs() < 1e-12);
    }
}

#[test]
fn derived_coefficients_agree_with_closed_form() {
    let t = derive_coefficients(BSplineOrder::QUADRATIC, &[0.0, 0.5]).unwrap();
    let q = ManyKnotBasis::new(BSplineOrder::QUADRATIC, vec![0.0, 0.5], t).unwrap();
    let mut pts = common::Points::new(7);
    for _ in 0..1000 {
        let x = pts.uniform(-2.0, 2.0);
        assert!((q.eval(x) - common::q2(x)).abs() < 1e-12);
    }
}

#[test]
fn linear_and_cubic_bases_reproduce_linears() {
    let cubic = ManyKnotBasis::from_shifts(BSplineOrder::CUBIC, vec![0.0, 0.25, 0.75]).unwrap();
    for basis in [ManyKnotBasis::linear(), ManyKnotBasis::quadric(), cubic] {
        let reach = basis.support().half_width().ceil() as i32 + 1;
        for i in 0..=300 {
            let x = -1.5 + i as f64 * 0.01;
            let ones: f64 = (-reach - 3..=reach + 3).map(|j| basis.eval(x - f64::from(j))).sum();
            let ramp: f64 = (-reach - 3..=reach + 3)
                .map(|j| f64::from(j) * basis.eval(x - f64::from(j)))
                .sum();
            assert!((ones - 1.0).abs() < 1e-10);
            assert!((ramp - x).abs() < 1e-10);
        }
    }
}

#[test]
fn support_examples() {
    let s = manyknot_support(&ManyKnotBasis::quadric());
    assert_eq!((s.lo, s.hi), (-2.0, 2.0));
}

proptest! {
    #[test]
    fn bases_are_even(x in -4.0f64..4.0) {
        let q = ManyKnotBasis::quadric();
        prop_assert_eq!(q.eval(x), q.eval(-x));
        for k in 1..=3 {
            let o = BSplineOrder::new(k).unwrap();
            prop_assert_eq!(bspline_eval(o, x), bspline_eval(o, -x));
        }
    }

    #[test]
    fn zero_outside_support(x in 2.0f64..1e6) {
        let q = ManyKnotBasis::quadric();
        prop_assert_eq!(q.eval(x), 0.0);
        prop_assert_eq!(q.eval(-x), 0.0);
    }

    #[test]
    fn derived_bases_are_cardinal(a1 in 0.05f64..0.45, gap in 0.05f64..0.4) {
        // Shifts small enough that the support reaches no integer beyond k - 1.
        let shifts = vec![0.0, a1, a1 + gap];
        if let Ok(b) = ManyKnotBasis::from_shifts(BSplineOrder::CUBIC, shifts) {
            let total: f64 = b.coeffs().iter().sum();
            prop_assert!((total - 1.0).abs() < 1e-10);
            for j in -4i32..=4 {
                let expected = if j == 0 { 1.0 } else { 0.0 };
                prop_assert!((b.eval(f64::from(j)) - expected).abs() < 1e-10);
            }
        }
    }
}
