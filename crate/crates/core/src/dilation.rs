//! Anisotropic dilations `δ_λ(x) = (λ^{σ_1} x_1, …, λ^{σ_n} x_n)`, the
//! homogeneous dimension, the critical exponent and the homogeneous norm.

use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::expr::{to_f64, Expr, Method, Rational};
use crate::fields::Operator;
use crate::group::{compare_sampled, monomial_basis, Check, GroupLaw, GROUP_SAMPLES};

/// Values of `λ` used by sampled dilation checks.
pub const SAMPLE_LAMBDAS: [f64; 4] = [0.5, 1.0, 2.0, 5.0];
const CHECK_TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq)]
pub struct Dilation {
    sigma: Vec<Rational>,
    q: Rational,
}

impl Dilation {
    /// Exponents in nondecreasing order with `σ_1 ≥ 1`.
    pub fn new(sigma: Vec<Rational>) -> Result<Self> {
        if sigma.windows(2).any(|w| w[0] > w[1]) {
            return Err(Error::invalid("dilation exponents must be nondecreasing"));
        }
        Dilation::from_coordinates(sigma)
    }

    /// Exponents listed in coordinate order, each at least 1. The sorted
    /// condition is a labelling convention and is not imposed here.
    pub fn from_coordinates(sigma: Vec<Rational>) -> Result<Self> {
        if sigma.is_empty() {
            return Err(Error::invalid("dilation needs at least one exponent"));
        }
        if let Some(s) = sigma.iter().find(|s| **s < Rational::one()) {
            return Err(Error::invalid(format!("dilation exponent {s} is below 1")));
        }
        let q = sigma.iter().fold(Rational::zero(), |a, b| a + b);
        Ok(Dilation { sigma, q })
    }

    pub fn from_integers(sigma: &[i64]) -> Result<Self> {
        Dilation::from_coordinates(sigma.iter().map(|s| Rational::from_integer((*s).into())).collect())
    }

    /// `σ = (1, …, 1)`.
    pub fn isotropic(n: usize) -> Self {
        Dilation::from_integers(&vec![1; n]).expect("valid")
    }

    pub fn sigma(&self) -> &[Rational] {
        &self.sigma
    }

    pub fn sigma_f64(&self) -> Vec<f64> {
        self.sigma.iter().map(to_f64).collect()
    }

    pub fn dim(&self) -> usize {
        self.sigma.len()
    }

    /// Homogeneous dimension `Q = σ_1 + … + σ_n`.
    pub fn q(&self) -> &Rational {
        &self.q
    }

    /// `(σ, 2)`, the dilation of the heat-type lift.
    pub fn heat_lift(&self) -> Dilation {
        let mut s = self.sigma.clone();
        s.push(Rational::from_integer(2.into()));
        Dilation::from_coordinates(s).expect("valid")
    }

    pub fn apply(&self, lambda: f64, x: &[f64]) -> Result<Vec<f64>> {
        if lambda <= 0.0 || !lambda.is_finite() {
            return Err(Error::invalid(format!("dilation parameter must be positive, got {lambda}")));
        }
        if x.len() != self.dim() {
            return Err(Error::dim(format!("point in R^{} for a dilation on R^{}", x.len(), self.dim())));
        }
        Ok(self.apply_unchecked(lambda, x))
    }

    pub(crate) fn apply_unchecked(&self, lambda: f64, x: &[f64]) -> Vec<f64> {
        x.iter().zip(&self.sigma).map(|(v, s)| lambda.powf(to_f64(s)) * v).collect()
    }

    /// `δ_λ` applied to symbolic coordinates, with `λ` the variable `lambda_var`.
    pub fn apply_symbolic(&self, lambda_var: usize, x: &[Expr]) -> Vec<Expr> {
        x.iter()
            .zip(&self.sigma)
            .map(|(e, s)| (Expr::var(lambda_var).powq(s.clone()) * e.clone()).simplify())
            .collect()
    }

    /// `Σ |x_j|^{1/σ_j}`.
    pub fn homogeneous_norm(&self, x: &[f64]) -> f64 {
        x.iter().zip(&self.sigma).map(|(v, s)| v.abs().powf(1.0 / to_f64(s))).sum()
    }

    /// Jacobian factor of `(r, θ) ↦ δ_r(θ)` with `θ` on the Euclidean unit
    /// sphere: `dx = r^{Q-1} w(θ) dr dS(θ)`.
    pub fn polar_weight(&self, theta: &[f64]) -> f64 {
        theta.iter().zip(&self.sigma).map(|(t, s)| to_f64(s) * t * t).sum()
    }
}

/// `1 + 2/(Q − 2)` for `Q ≥ 3`.
pub fn sharp_exponent(q: &Rational) -> Result<Rational> {
    let three = Rational::from_integer(3.into());
    if *q < three {
        return Err(Error::invalid(format!("the critical exponent needs Q >= 3, got {q}")));
    }
    let two = Rational::from_integer(2.into());
    Ok(Rational::one() + &two / (q - &two))
}

/// `δ_λ(x∘y) = δ_λ(x)∘δ_λ(y)`.
pub fn automorphism_check(d: &Dilation, g: &GroupLaw) -> Result<Check> {
    let n = g.dim();
    if d.dim() != n {
        return Err(Error::dim(format!("dilation on R^{} with group on R^{n}", d.dim())));
    }
    let name = "dilation automorphism";
    if g.compose_exprs().is_some() {
        let x: Vec<Expr> = (0..n).map(Expr::var).collect();
        let y: Vec<Expr> = (0..n).map(|i| Expr::var(n + i)).collect();
        let lam = 2 * n;
        let lhs = d.apply_symbolic(lam, &g.compose_symbolic(&x, &y).unwrap());
        let rhs = g.compose_symbolic(&d.apply_symbolic(lam, &x), &d.apply_symbolic(lam, &y)).unwrap();
        let diffs: Vec<Expr> = lhs.iter().zip(&rhs).map(|(a, b)| (a - b).simplify()).collect();
        if diffs.iter().all(Expr::is_zero) {
            return Ok(Check { name: name.into(), method: Method::Exact, residual: 0.0, passed: true });
        }
        if diffs.iter().all(|e| e.is_exact() && e.is_polynomial().is_some()) {
            let residual = sampled_residual(n, |x, y, l| {
                let mut p = x.to_vec();
                p.extend_from_slice(y);
                p.push(l);
                (diffs.iter().map(|e| e.eval(&p)).collect(), vec![0.0; n])
            })?
            .0;
            return Ok(Check { name: name.into(), method: Method::Exact, residual, passed: false });
        }
    }
    let (residual, passed) = sampled_residual(n, |x, y, l| {
        let lhs = d.apply_unchecked(l, &g.compose(x, y));
        let rhs = g.compose(&d.apply_unchecked(l, x), &d.apply_unchecked(l, y));
        (lhs, rhs)
    })?;
    Ok(Check { name: name.into(), method: Method::Sampled, residual, passed })
}

fn sampled_residual(n: usize, f: impl Fn(&[f64], &[f64], f64) -> (Vec<f64>, Vec<f64>)) -> Result<(f64, bool)> {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let pts: Vec<Vec<f64>> = (0..GROUP_SAMPLES)
        .map(|k| {
            let mut p: Vec<f64> = (0..2 * n).map(|_| rng.random_range(-1.0..1.0)).collect();
            p.push(SAMPLE_LAMBDAS[k % SAMPLE_LAMBDAS.len()]);
            p
        })
        .collect();
    compare_sampled(pts, CHECK_TOL, |p| Ok(f(&p[..n], &p[n..2 * n], p[2 * n])))
}

#[derive(Clone, Debug, Serialize)]
pub struct HomogeneityReport {
    /// Degree `m` with `L[u∘δ_λ] = λ^m (Lu)∘δ_λ`, if one fits the whole basis.
    #[serde(serialize_with = "crate::report::opt_rational")]
    pub degree: Option<Rational>,
    pub method: Method,
    pub basis_size: usize,
    pub residual: f64,
}

/// Finds the homogeneity degree of `L` with respect to `d` on the monomial
/// basis of degree at most 3.
pub fn homogeneity_degree(l: &Operator, d: &Dilation) -> Result<HomogeneityReport> {
    let n = l.dim();
    if d.dim() != n {
        return Err(Error::dim(format!("dilation on R^{} with operator on R^{n}", d.dim())));
    }
    let basis = monomial_basis(n, 3);
    let lam = n;
    let x: Vec<Expr> = (0..n).map(Expr::var).collect();
    let dx = d.apply_symbolic(lam, &x);
    let pairs: Vec<(Expr, Expr)> = basis
        .iter()
        .map(|u| -> Result<(Expr, Expr)> {
            let lv = l.apply_with_params(&u.subst(&dx));
            let lu_d = l.apply(u)?.subst(&dx);
            Ok((lv, lu_d))
        })
        .collect::<Result<_>>()?;

    let none = |method| HomogeneityReport { degree: None, method, basis_size: basis.len(), residual: f64::NAN };
    let Some(m) = estimate_degree(&pairs, n) else {
        return Ok(none(Method::Sampled));
    };
    let lam_m = Expr::var(lam).powq(m.clone());
    let diffs: Vec<Expr> = pairs.iter().map(|(lv, lu)| (lv - &(lam_m.clone() * lu.clone())).simplify()).collect();
    if diffs.iter().all(Expr::is_zero) {
        return Ok(HomogeneityReport { degree: Some(m), method: Method::Exact, basis_size: basis.len(), residual: 0.0 });
    }
    let exact = diffs.iter().all(|e| e.is_exact() && e.is_polynomial().is_some())
        || l.a().iter().flatten().chain(l.b()).all(|e| e.is_exact() && e.is_polynomial().is_some());
    if exact {
        return Ok(none(Method::Exact));
    }
    let compiled: Vec<_> = pairs.iter().map(|(a, b)| (a.compile(), b.compile())).collect();
    let mf = to_f64(&m);
    let mut rng = ChaCha8Rng::seed_from_u64(41);
    let pts: Vec<Vec<f64>> = (0..GROUP_SAMPLES)
        .map(|k| {
            let mut p: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
            p.push(SAMPLE_LAMBDAS[k % SAMPLE_LAMBDAS.len()]);
            p
        })
        .collect();
    let (residual, passed) = compare_sampled(pts, CHECK_TOL, |p| {
        let lm = p[n].powf(mf);
        Ok((compiled.iter().map(|(a, _)| a.eval(p)).collect(), compiled.iter().map(|(_, b)| lm * b.eval(p)).collect()))
    })?;
    Ok(HomogeneityReport {
        degree: passed.then_some(m),
        method: Method::Sampled,
        basis_size: basis.len(),
        residual,
    })
}

/// Reads off `m` from `λ = 2` at a few points and snaps it to a small-denominator rational.
fn estimate_degree(pairs: &[(Expr, Expr)], n: usize) -> Option<Rational> {
    let mut rng = ChaCha8Rng::seed_from_u64(43);
    for (lv, lu) in pairs {
        if lu.is_zero() {
            continue;
        }
        for _ in 0..10 {
            let mut p: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
            p.push(2.0);
            let (a, b) = (lv.eval(&p), lu.eval(&p));
            if !(a.is_finite() && b.is_finite()) || b.abs() < 1e-6 || a / b <= 0.0 {
                continue;
            }
            let m = (a / b).log2();
            return snap_rational(m, 12);
        }
    }
    None
}

fn snap_rational(x: f64, max_den: i64) -> Option<Rational> {
    (1..=max_den).find_map(|d| {
        let k = (x * d as f64).round();
        ((x - k / d as f64).abs() < 1e-8).then(|| Rational::new((k as i64).into(), d.into()))
    })
}
