use nalgebra::DMatrix;
use proptest::prelude::*;

use hypoliouville::dilation::Dilation;
use hypoliouville::fields::{heisenberg_fields, lie_bracket, Operator};
use hypoliouville::group::GroupLaw;
use hypoliouville::kolmogorov::{gram, matrix_exp, KolmogorovSpec};
use hypoliouville::lens::{extract_measures, LensDomain};

fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
    a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol * (1.0 + x.abs().max(y.abs())))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn heisenberg_law_is_associative_with_inverses(
        x in prop::array::uniform3(-5.0f64..5.0),
        y in prop::array::uniform3(-5.0f64..5.0),
        z in prop::array::uniform3(-5.0f64..5.0),
    ) {
        let g = GroupLaw::heisenberg();
        let left = g.compose(&g.compose(&x, &y), &z);
        let right = g.compose(&x, &g.compose(&y, &z));
        prop_assert!(close(&left, &right, 1e-12));
        let e = g.compose(&x, &g.inverse(&x).unwrap());
        prop_assert!(e.iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn dilations_are_automorphisms(
        x in prop::array::uniform3(-3.0f64..3.0),
        y in prop::array::uniform3(-3.0f64..3.0),
        lambda in 0.1f64..10.0,
    ) {
        let g = GroupLaw::heisenberg();
        let d = Dilation::from_integers(&[1, 1, 2]).unwrap();
        let lhs = d.apply(lambda, &g.compose(&x, &y)).unwrap();
        let rhs = g.compose(&d.apply(lambda, &x).unwrap(), &d.apply(lambda, &y).unwrap());
        prop_assert!(close(&lhs, &rhs, 1e-12));
    }

    #[test]
    fn heisenberg_bracket_is_the_vertical_field(x in prop::array::uniform3(-10.0f64..10.0)) {
        let [x1, x2] = heisenberg_fields();
        let b = lie_bracket(&x1, &x2).unwrap();
        prop_assert!(close(&b.eval(&x), &[0.0, 0.0, 1.0], 1e-14));
        let r = lie_bracket(&x2, &x1).unwrap();
        prop_assert!(close(&r.eval(&x), &[0.0, 0.0, -1.0], 1e-14));
    }

    #[test]
    fn flow_has_the_group_property(entries in prop::array::uniform4(-1.5f64..1.5), s in -2.0f64..2.0, t in -2.0f64..2.0) {
        let b = DMatrix::from_row_slice(2, 2, &entries);
        let lhs = matrix_exp(&b, s + t);
        let rhs = matrix_exp(&b, s) * matrix_exp(&b, t);
        prop_assert!((lhs - &rhs).abs().max() <= 1e-10 * (1.0 + rhs.abs().max()));
    }

    #[test]
    fn gram_matrix_is_symmetric_and_grows(t in 0.05f64..5.0, k in 0.0f64..1.0) {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 0.0]);
        let b = DMatrix::from_row_slice(2, 2, &[0.0, -k, 1.0, 0.0]);
        let spec = KolmogorovSpec::from_f64(&a, &b).unwrap();
        let c = gram(&spec, t).unwrap();
        let later = gram(&spec, 1.5 * t).unwrap();
        prop_assert!((c[(0, 1)] - c[(1, 0)]).abs() <= 1e-12 * (1.0 + c.abs().max()));
        prop_assert!(c.determinant() > 0.0);
        // C is nondecreasing in t in the Loewner order
        let diff = later - c;
        prop_assert!(diff.symmetric_eigenvalues().min() >= -1e-10);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn harmonic_measure_is_a_probability(r in 2.0f64..6.0, eps in 0.5f64..1.5) {
        let dom = LensDomain::new(2, r, eps).unwrap();
        let m = extract_measures(&Operator::laplacian(2), &dom, 1.0 / 16.0, 0.0).unwrap();
        let s = m.summary();
        prop_assert!((s.mu_total - 1.0).abs() < 1e-8);
        prop_assert!(s.nonnegative);
    }
}
