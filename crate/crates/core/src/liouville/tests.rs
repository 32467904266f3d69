use std::f64::consts::PI;

use super::*;
use crate::expr::parse;

#[test]
fn euclidean_kernel_calibrates_to_one_over_four_pi() {
    let g = gamma_euclidean(3).unwrap();
    assert!((g.constant() - 1.0 / (4.0 * PI)).abs() < 1e-3, "{}", g.constant());
    assert!((g.eval(&[2.0, 0.0, 0.0]) - 0.5 * g.eval(&[1.0, 0.0, 0.0])).abs() < 1e-15);
    let lap = g.operator().apply(&g.unit_expr()).unwrap();
    assert!(lap.eval(&[1.0, 1.0, 1.0]).abs() < 1e-12);
    assert!(gamma_euclidean(2).is_err());
}

#[test]
fn calibration_is_linear_in_the_kernel() {
    let g = FundamentalSolution::with_constant(Kernel::Euclidean { n: 3 }, 1.0).unwrap();
    let c1 = calibrate(&|x: &[f64]| g.unit(x), g.operator(), g.dilation()).unwrap();
    let c2 = calibrate(&|x: &[f64]| 2.0 * g.unit(x), g.operator(), g.dilation()).unwrap();
    assert!((c1 - 2.0 * c2).abs() < 1e-12 * c1);
}

#[test]
fn heisenberg_kernel() {
    let g = gamma_heisenberg().unwrap();
    println!("heisenberg c = {}", g.constant());
    assert!(g.constant() > 0.0);
    let report = verify_gamma(&g, 10_000, 50, 3).unwrap();
    assert!(report.passed, "{report:?}");
    let lg = g.operator().apply(&g.unit_expr()).unwrap();
    assert!(lg.eval(&[1.0, 0.0, 1.0]).abs() < 1e-9);
    // cross-validation on a different bump
    let defect = pairing_defect(&g, TestBump { radius: 1.7 }).unwrap();
    assert!(defect.abs() < 1e-3, "{defect}");
    assert_eq!(g.p_star(), crate::expr::rat(2, 1));
}

#[test]
fn convolution_far_field_and_linearity() {
    let g = gamma_euclidean(3).unwrap();
    let f = Bump::unit_mass(3, 1.0);
    let fe = |y: &[f64]| f.eval(y);
    let x = [20.0, 0.0, 0.0];
    let v = convolve(&g, &fe, 1.0, &x).unwrap();
    let ratio = v / g.eval(&x);
    assert!((0.95..=1.05).contains(&ratio), "{ratio}");
    let f3 = |y: &[f64]| 3.0 * f.eval(y);
    let x = [0.3, 0.1, -0.2];
    let (a, b) = (convolve(&g, &fe, 1.0, &x).unwrap(), convolve(&g, &f3, 1.0, &x).unwrap());
    assert!((b - 3.0 * a).abs() < 1e-10 * b);
    assert!(a > 0.0);
    // Newtonian potential of a radial source at the centre: ∫ f(y)/(4π|y|) dy
    let center = convolve(&g, &fe, 1.0, &[0.0; 3]).unwrap();
    let exact: f64 = crate::quad::gauss_legendre(20)
        .iter()
        .map(|(t, w)| {
            let r = 0.5 * (1.0 + t);
            0.5 * w * f.eval(&[r, 0.0, 0.0]) * r
        })
        .sum();
    assert!((center - exact).abs() < 1e-4 * exact, "{center} {exact}");
}

#[test]
fn convolution_is_translation_consistent() {
    let g = gamma_euclidean(3).unwrap();
    let f = Bump::unit_mass(3, 0.5);
    let z = [0.2, -0.1, 0.05];
    let shifted = |y: &[f64]| f.eval(&[y[0] - z[0], y[1] - z[1], y[2] - z[2]]);
    let x = [0.4, 0.3, -0.2];
    let a = convolve(&g, &|y: &[f64]| f.eval(y), 0.5, &[x[0] - z[0], x[1] - z[1], x[2] - z[2]]).unwrap();
    let b = convolve(&g, &shifted, 1.0, &x).unwrap();
    assert!((a - b).abs() < 1e-3 * a, "{a} {b}");
}

#[test]
fn heisenberg_convolution_is_nonnegative() {
    let g = gamma_heisenberg().unwrap();
    let f = Bump::unit_mass(3, 0.5);
    for x in [[0.0, 0.0, 0.0], [0.2, 0.1, -0.3], [1.0, -2.0, 0.5]] {
        assert!(convolve(&g, &|y: &[f64]| f.eval(y), 0.5, &x).unwrap() > 0.0);
    }
}

#[test]
fn cutoffs_are_monotone_and_the_limit_stabilizes() {
    for k in 0..200 {
        let x = [0.05 * k as f64, 0.0];
        assert!(cutoff(1.0, &x) <= cutoff(2.0, &x));
        assert!((0.0..=1.0).contains(&cutoff(1.0, &x)));
    }
    let g = gamma_euclidean(3).unwrap();
    let f = Bump::unit_mass(3, 1.5);
    let x = [0.5, 0.2, 0.0];
    let values: Vec<f64> = (0..4)
        .map(|m| convolve(&g, &|y: &[f64]| f.eval(y) * cutoff(m as f64, y), 1.5, &x).unwrap())
        .collect();
    assert!(values.windows(2).all(|w| w[1] >= w[0] - 1e-12), "{values:?}");
    assert!((values[3] - values[2]).abs() < 1e-6 * values[3]);
}

#[test]
fn gadgets_match_their_invariants() {
    for g in [Gadget::Thm1 { p: 2.0 }, Gadget::Thm1 { p: 1.0 }, Gadget::Thm2 { p: 0.5 }, Gadget::Thm3 { p: 1.0 }, Gadget::Thm3 { p: 2.0 }] {
        let r = gadget_invariants(&g, 10_000).unwrap();
        assert!(r.passed, "{r:?}");
    }
    let thm5 = Gadget::Thm5 { f: parse("x1^3 + x1", 1).unwrap() };
    assert!(gadget_invariants(&thm5, 2_001).unwrap().passed);
    assert_eq!(gadget_eval(&Gadget::Thm1 { p: 2.0 }, 0.0).unwrap(), (0.0, 0.0, 0.0));
    let (f, f1, _) = gadget_eval(&Gadget::Thm2 { p: 0.5 }, 0.0).unwrap();
    assert_eq!((f, f1), (0.0, 0.5));
    assert_eq!(gadget_eval(&Gadget::Thm3 { p: 1.0 }, -2.0).unwrap(), (0.0, 0.0, 0.0));
    assert!(gadget_eval(&Gadget::Thm2 { p: 0.5 }, -1.0).is_err());
    assert!(gadget_eval(&Gadget::Thm1 { p: 0.5 }, 1.0).is_err());
}

#[test]
fn thm1_second_derivative_matches_taylor_expansion() {
    // (√(1+t²) − 1)² = t⁴/4 − t⁶/8 + O(t⁸), so F'' = 3t² − 15t⁴/4 + O(t⁶)
    for t in [1e-2, 3e-2, 1e-1] {
        let (f, _, f2) = gadget_eval(&Gadget::Thm1 { p: 2.0 }, t).unwrap();
        assert!((f - (t.powi(4) / 4.0 - t.powi(6) / 8.0)).abs() < t.powi(8));
        assert!((f2 - (3.0 * t * t - 3.75 * t.powi(4))).abs() < 50.0 * t.powi(6));
    }
}

#[test]
fn semilinear_identity_on_manufactured_solutions() {
    let lap2 = Operator::laplacian(2);
    let heis = heisenberg_sublaplacian();
    let cases = [
        // L u = u
        (&lap2, "x1^2/2", "exp(x1)", 2),
        (&heis, "x1^2/2", "exp(x1)", 3),
        // L u = −u
        (&lap2, "-x1^2/2", "sin(x1) + cos(x2)", 2),
        // L u = u³
        (&lap2, "x1^4/4", "sqrt(2)/x1", 2),
    ];
    for (l, f, u, n) in cases {
        let r = semilinear_residual(l, &parse(f, 1).unwrap(), &parse(u, n).unwrap()).unwrap();
        for x in [[0.7, 0.3, 0.1], [1.3, -0.4, 2.0]] {
            assert!(r.eval(&x[..n]).abs() < 1e-10, "{f} {u}");
        }
    }
    // not a solution: the residual is F'(u)(Lu − F'(u)) ≠ 0
    let r = semilinear_residual(&lap2, &parse("x1^2/2", 1).unwrap(), &parse("x1^2", 2).unwrap()).unwrap();
    assert!(r.eval(&[1.0, 0.0]).abs() > 1e-3);
}

#[test]
fn mollifier_normalization_and_limits() {
    let g = GroupLaw::heisenberg();
    let e3 = GroupLaw::euclidean(3);
    let mut prev = f64::INFINITY;
    for eps in [0.2, 0.1, 0.05] {
        let m = Mollifier::new(3, eps).unwrap();
        // independent tensor-product oracle for ∫ J_ε
        let total = crate::quad::tensor(&mut |y: &[f64]| m.density(y), &[-eps; 3], &[eps; 3], 60);
        assert!((total - 1.0).abs() < 1e-6, "{total}");
        assert!((m.mollify(&|_: &[f64]| 1.0, &g, &[0.3, 0.2, 0.1]).unwrap() - 1.0).abs() < 1e-12);
        let lin = |x: &[f64]| 2.0 * x[0] - x[1] + 0.5 * x[2];
        let x = [0.3, -0.2, 0.7];
        assert!((m.mollify(&lin, &e3, &x).unwrap() - lin(&x)).abs() < 1e-6);
        let abs = |x: &[f64]| x.iter().map(|v| v * v).sum::<f64>().sqrt();
        let v = m.mollify(&abs, &g, &[0.0; 3]).unwrap();
        assert!(v > 0.0 && v < prev);
        prev = v;
    }
}

#[test]
fn counterexample_rejects_bad_input() {
    let g = FundamentalSolution::with_constant(Kernel::Heisenberg, 1.0).unwrap();
    let f = Bump::unit_mass(3, 0.5);
    let cfg = AnnulusConfig { samples: 10, ..Default::default() };
    assert!(counterexample(&g, &f, 0.5, &cfg).is_err());
    assert!(counterexample(&g, &f, 2.0, &AnnulusConfig { annuli: 3, ..cfg }).is_err());
    assert!(counterexample(&g, &f, 2.0, &AnnulusConfig { ratio: 1.0, ..cfg }).is_err());
    assert!(counterexample(&g, &Bump::unit_mass(2, 0.5), 2.0, &cfg).is_err());
}

#[test]
fn counterexample_verdicts_flip_at_the_critical_exponent() {
    let cfg = AnnulusConfig { samples: 20_000, ..Default::default() };
    for g in [gamma_heisenberg().unwrap(), gamma_euclidean(3).unwrap()] {
        let ps = crate::expr::to_f64(&g.p_star());
        let reports = counterexample_scan(&g, &Bump::unit_mass(3, 0.5), &[ps - 0.5, ps, ps + 0.5], &cfg).unwrap();
        for r in &reports {
            println!("{:?} p={} measured={} theory={} lu={}", r.kernel, r.p, r.measured_ratio, r.theoretical_ratio, r.signs.lu_defect);
            assert!((r.measured_ratio - r.theoretical_ratio).abs() < 0.05);
            assert!(r.signs.u_nonpositive && r.signs.lu_passed);
        }
        assert_eq!(reports[0].verdict, Verdict::Divergent);
        assert_eq!(reports[1].verdict, Verdict::Divergent);
        assert_eq!(reports[2].verdict, Verdict::Convergent);
    }
}

#[test]
fn heisenberg_p3_ratio() {
    let g = gamma_heisenberg().unwrap();
    let cfg = AnnulusConfig { samples: 20_000, seed: 9, ..Default::default() };
    let r = counterexample(&g, &Bump::unit_mass(3, 0.5), 3.0, &cfg).unwrap();
    assert!((0.2..=0.3).contains(&r.measured_ratio), "{}", r.measured_ratio);
    assert_eq!(r.verdict, Verdict::Convergent);
    let json = serde_json::to_value(&r).unwrap();
    for key in ["Q", "p", "p_star", "annuli", "measured_ratio", "theoretical_ratio", "verdict", "seed"] {
        assert!(json.get(key).is_some(), "{key}");
    }
}

mod props {
    use proptest::prelude::*;

    use super::super::*;
    use crate::group::GroupLaw;

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn heisenberg_kernel_is_homogeneous(x in prop::array::uniform3(-3.0f64..3.0), lambda in 0.1f64..10.0) {
            prop_assume!(x.iter().any(|v| v.abs() > 1e-3));
            let g = FundamentalSolution::with_constant(Kernel::Heisenberg, 1.0).unwrap();
            let dx = g.dilation().apply(lambda, &x).unwrap();
            let lhs = g.eval(&dx);
            let rhs = lambda.powi(-2) * g.eval(&x);
            prop_assert!((lhs - rhs).abs() <= 1e-12 * rhs);
            prop_assert!(g.eval(&x) > 0.0);
        }

        #[test]
        fn theoretical_ratio_crosses_one_at_the_critical_exponent(q in 3.0f64..12.0, dp in 0.05f64..2.0, m in 1.5f64..4.0) {
            let ps = 1.0 + 2.0 / (q - 2.0);
            prop_assert!(theoretical_ratio(q, ps - dp.min(ps - 1.0) * 0.99, m) > 1.0);
            prop_assert!((theoretical_ratio(q, ps, m) - 1.0).abs() < 1e-12);
            prop_assert!(theoretical_ratio(q, ps + dp, m) < 1.0);
        }

        #[test]
        fn thm1_bound_holds(t in -1e3f64..1e3, p in 1.0f64..6.0) {
            let (f, _, f2) = gadget_eval(&Gadget::Thm1 { p }, t).unwrap();
            prop_assert!(f >= 0.0 && f <= t.abs().powf(p) * (1.0 + 1e-12));
            prop_assert!(t == 0.0 || f2 > 0.0);
        }

        #[test]
        fn mollifier_reproduces_constants(x in prop::array::uniform3(-5.0f64..5.0), c in -10.0f64..10.0) {
            let m = Mollifier::new(3, 0.1).unwrap();
            let v = m.mollify(&|_: &[f64]| c, &GroupLaw::heisenberg(), &x).unwrap();
            prop_assert!((v - c).abs() <= 1e-12 * (1.0 + c.abs()));
        }
    }
}
