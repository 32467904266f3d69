//! Gauss–Legendre rules and a small adaptive integrator.

use std::f64::consts::PI;

/// Nodes and weights of the `n`-point Gauss–Legendre rule on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    assert!(n >= 1, "rule needs at least one node");
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre(n, x);
        if d != 0.0 {
            dp = d;
        }
        out.push((x, 2.0 / ((1.0 - x * x) * dp * dp)));
    }
    out.reverse();
    out
}

fn legendre(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    if n == 0 {
        (1.0, 0.0)
    } else {
        (p1, d)
    }
}

/// Fixed rule on `[a, b]`.
pub fn integrate_fixed(f: &mut impl FnMut(f64) -> f64, a: f64, b: f64, rule: &[(f64, f64)]) -> f64 {
    let (m, r) = (0.5 * (a + b), 0.5 * (b - a));
    rule.iter().map(|(x, w)| w * f(m + r * x)).sum::<f64>() * r
}

/// Adaptive bisection with a 10/20-point Gauss–Legendre error estimate.
///
/// Returns `(value, error estimate)`. Subdivision stops at `max_depth`.
pub fn adaptive(f: &mut impl FnMut(f64) -> f64, a: f64, b: f64, tol: f64, max_depth: usize) -> (f64, f64) {
    let lo = gauss_legendre(10);
    let hi = gauss_legendre(20);
    fn rec(
        f: &mut impl FnMut(f64) -> f64,
        a: f64,
        b: f64,
        tol: f64,
        depth: usize,
        lo: &[(f64, f64)],
        hi: &[(f64, f64)],
    ) -> (f64, f64) {
        let coarse = integrate_fixed(f, a, b, lo);
        let fine = integrate_fixed(f, a, b, hi);
        let err = (fine - coarse).abs();
        if err <= tol || depth == 0 {
            return (fine, err);
        }
        let m = 0.5 * (a + b);
        let (v1, e1) = rec(f, a, m, 0.5 * tol, depth - 1, lo, hi);
        let (v2, e2) = rec(f, m, b, 0.5 * tol, depth - 1, lo, hi);
        (v1 + v2, e1 + e2)
    }
    rec(f, a, b, tol, max_depth, &lo, &hi)
}

/// Tensor-product Gauss–Legendre over the box `Π [lo_i, hi_i]`.
pub fn tensor(f: &mut impl FnMut(&[f64]) -> f64, lo: &[f64], hi: &[f64], nodes: usize) -> f64 {
    let rule = gauss_legendre(nodes);
    let d = lo.len();
    let mut idx = vec![0usize; d];
    let mut x = vec![0.0; d];
    let mut total = 0.0;
    let jac: f64 = lo.iter().zip(hi).map(|(a, b)| 0.5 * (b - a)).product();
    loop {
        let mut w = 1.0;
        for k in 0..d {
            let (t, wt) = rule[idx[k]];
            x[k] = 0.5 * (lo[k] + hi[k]) + 0.5 * (hi[k] - lo[k]) * t;
            w *= wt;
        }
        total += w * f(&x);
        let mut k = 0;
        while k < d {
            idx[k] += 1;
            if idx[k] < nodes {
                break;
            }
            idx[k] = 0;
            k += 1;
        }
        if k == d {
            break;
        }
    }
    total * jac
}

/// Product rule on the Euclidean unit sphere `S^{n-1}` with `m` polar nodes
/// per angle (`2m` on the circle). Weights sum to the sphere area.
pub fn sphere_rule(n: usize, m: usize) -> Vec<(Vec<f64>, f64)> {
    assert!(n >= 1 && m >= 1, "sphere rule needs n >= 1 and m >= 1");
    match n {
        1 => vec![(vec![1.0], 1.0), (vec![-1.0], 1.0)],
        2 => (0..2 * m)
            .map(|k| {
                let a = PI * (k as f64 + 0.5) / m as f64;
                (vec![a.cos(), a.sin()], PI / m as f64)
            })
            .collect(),
        _ => {
            let inner = sphere_rule(n - 1, m);
            let mut out = Vec::with_capacity(m * inner.len());
            for (t, w) in gauss_legendre(m) {
                let a = 0.5 * PI * (1.0 + t);
                let wa = 0.5 * PI * w * a.sin().powi(n as i32 - 2);
                for (omega, wo) in &inner {
                    let mut p = Vec::with_capacity(n);
                    p.push(a.cos());
                    p.extend(omega.iter().map(|v| a.sin() * v));
                    out.push((p, wa * wo));
                }
            }
            out
        }
    }
}

/// Area of `S^{n-1}`.
pub fn sphere_area(n: usize) -> f64 {
    let h = n as f64 / 2.0;
    2.0 * PI.powf(h) / gamma_fn(h)
}

fn gamma_fn(x: f64) -> f64 {
    // x is a positive half-integer here
    if (x - 0.5).abs() < 1e-12 {
        PI.sqrt()
    } else if (x - 1.0).abs() < 1e-12 {
        1.0
    } else {
        (x - 1.0) * gamma_fn(x - 1.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sphere_rule_integrates_moments() {
        for n in 2..=5 {
            let rule = sphere_rule(n, 20);
            let area: f64 = rule.iter().map(|r| r.1).sum();
            assert!((area - sphere_area(n)).abs() < 1e-12 * area, "n={n}");
            // ∫ x_1^2 dS = area / n
            let m2: f64 = rule.iter().map(|(p, w)| w * p[n - 1] * p[n - 1]).sum();
            assert!((m2 - area / n as f64).abs() < 1e-12 * area, "n={n} err={:e}", (m2 - area / n as f64) / area);
        }
        assert!((sphere_area(3) - 4.0 * PI).abs() < 1e-13);
    }

    #[test]
    fn weights_sum_to_two_and_polynomials_are_exact() {
        for n in [1, 2, 5, 16, 40] {
            let rule = gauss_legendre(n);
            let s: f64 = rule.iter().map(|r| r.1).sum();
            assert!((s - 2.0).abs() < 1e-13);
            for k in 0..(2 * n) {
                let got: f64 = rule.iter().map(|(x, w)| w * x.powi(k as i32)).sum();
                let exact = if k % 2 == 1 { 0.0 } else { 2.0 / (k as f64 + 1.0) };
                assert!((got - exact).abs() < 1e-13, "n={n} k={k}");
            }
        }
    }

    #[test]
    fn adaptive_handles_peaks() {
        let (v, _) = adaptive(&mut |x: f64| 1.0 / (1e-4 + x * x), -1.0, 1.0, 1e-10, 40);
        let exact = 2.0 * (1.0f64 / 1e-2).atan() / 1e-2;
        assert!((v - exact).abs() < 1e-8 * exact);
    }

    #[test]
    fn tensor_box() {
        let v = tensor(&mut |x: &[f64]| x[0] * x[0] * x[1] + x[2], &[0.0, 0.0, 0.0], &[1.0, 2.0, 3.0], 4);
        // ∫ x^2 y = (1/3)(2)(3) ; ∫ z = 1*2*4.5
        assert!((v - (2.0 + 9.0)).abs() < 1e-12);
    }
}
