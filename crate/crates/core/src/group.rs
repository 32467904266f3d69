//! Group laws on `R^n` with identity at the origin: axioms, left
//! translations, invariance of operators and unimodularity.
//!
//! A symbolic law stores `x∘y` as `n` expressions over `2n` variables, the
//! first `n` holding `x` and the last `n` holding `y`.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::expr::{zero_check, Expr, Method, SAMPLE_TOL};
use crate::fields::Operator;

/// Numerical composition `(x, y) ↦ x∘y`.
pub type ComposeFn = Arc<dyn Fn(&[f64], &[f64]) -> Vec<f64> + Send + Sync>;
/// Numerical inverse `x ↦ x⁻¹`.
pub type InverseFn = Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;

#[derive(Clone)]
enum Compose {
    Symbolic(Vec<Expr>),
    Numeric(ComposeFn),
}

#[derive(Clone)]
enum Inverse {
    Symbolic(Vec<Expr>),
    Numeric(InverseFn),
    Solve,
}

#[derive(Clone)]
pub struct GroupLaw {
    dim: usize,
    compose: Compose,
    inverse: Inverse,
    compiled: Option<Vec<crate::expr::Compiled>>,
    compiled_inv: Option<Vec<crate::expr::Compiled>>,
}

impl fmt::Debug for GroupLaw {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut d = f.debug_struct("GroupLaw");
        d.field("dim", &self.dim);
        match &self.compose {
            Compose::Symbolic(v) => d.field("compose", &v.iter().map(|e| e.to_string()).collect::<Vec<_>>()),
            Compose::Numeric(_) => d.field("compose", &"<closure>"),
        };
        d.finish()
    }
}

/// Sampled checks draw this many points.
pub const GROUP_SAMPLES: usize = 200;
/// Tolerance for invariance residuals.
pub const INVARIANCE_TOL: f64 = 1e-8;
/// Relative tolerance for checks that rely on finite differences.
pub const FD_TOL: f64 = 1e-5;
const NEWTON_TOL: f64 = 1e-12;
const NEWTON_MAX_ITER: usize = 50;

pub(crate) const SMOOTHNESS_NOTE: &str =
    "smoothness (C-infinity) of the law is assumed, not verified; finitely many samples cannot certify it";

impl GroupLaw {
    /// A law given by expressions in `2n` variables, with an optional inverse in `n` variables.
    pub fn symbolic(dim: usize, compose: Vec<Expr>, inverse: Option<Vec<Expr>>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid("group dimension must be positive"));
        }
        if compose.len() != dim {
            return Err(Error::dim(format!("composition has {} components, expected {dim}", compose.len())));
        }
        if let Some(m) = compose.iter().filter_map(Expr::max_var).max() {
            if m >= 2 * dim {
                return Err(Error::dim(format!("composition uses variable {} of {}", m + 1, 2 * dim)));
            }
        }
        let compose: Vec<Expr> = compose.iter().map(Expr::simplify).collect();
        let compiled = Some(compose.iter().map(Expr::compile).collect());
        let (inverse, compiled_inv) = match inverse {
            Some(inv) => {
                if inv.len() != dim {
                    return Err(Error::dim(format!("inverse has {} components, expected {dim}", inv.len())));
                }
                if inv.iter().filter_map(Expr::max_var).any(|m| m >= dim) {
                    return Err(Error::dim("inverse uses variables beyond the x-slot"));
                }
                let inv: Vec<Expr> = inv.iter().map(Expr::simplify).collect();
                let c = inv.iter().map(Expr::compile).collect();
                (Inverse::Symbolic(inv), Some(c))
            }
            None => (Inverse::Solve, None),
        };
        Ok(GroupLaw { dim, compose: Compose::Symbolic(compose), inverse, compiled, compiled_inv })
    }

    /// A law known only through evaluation.
    pub fn numeric(dim: usize, compose: ComposeFn, inverse: Option<InverseFn>) -> Self {
        GroupLaw {
            dim,
            compose: Compose::Numeric(compose),
            inverse: inverse.map_or(Inverse::Solve, Inverse::Numeric),
            compiled: None,
            compiled_inv: None,
        }
    }

    /// `x + y` on `R^n`.
    pub fn euclidean(n: usize) -> Self {
        let compose = (0..n).map(|i| Expr::var(i) + Expr::var(n + i)).collect();
        let inverse = (0..n).map(|i| -Expr::var(i)).collect();
        GroupLaw::symbolic(n, compose, Some(inverse)).expect("valid law")
    }

    /// The Heisenberg law `(x1+y1, x2+y2, x3+y3+(x1y2−x2y1)/2)`.
    pub fn heisenberg() -> Self {
        let v = Expr::var;
        let compose = vec![
            v(0) + v(3),
            v(1) + v(4),
            v(2) + v(5) + Expr::rational(1, 2) * (v(0) * v(4) - v(1) * v(3)),
        ];
        GroupLaw::symbolic(3, compose, Some((0..3).map(|i| -v(i)).collect())).expect("valid law")
    }

    /// `G × R` with the additive law on the new last coordinate.
    pub fn with_time(&self) -> Result<Self> {
        let n = self.dim;
        let Compose::Symbolic(c) = &self.compose else {
            return Err(Error::invalid("time lift needs a symbolic law"));
        };
        let remap = |i: usize| if i < n { Expr::var(i) } else { Expr::var(i + 1) };
        let mut compose: Vec<Expr> = c.iter().map(|e| e.map_vars(&remap)).collect();
        compose.push(Expr::var(n) + Expr::var(2 * n + 1));
        let inverse = match &self.inverse {
            Inverse::Symbolic(v) => {
                let mut v = v.clone();
                v.push(-Expr::var(n));
                Some(v)
            }
            _ => None,
        };
        GroupLaw::symbolic(n + 1, compose, inverse)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Composition expressions, if the law is symbolic.
    pub fn compose_exprs(&self) -> Option<&[Expr]> {
        match &self.compose {
            Compose::Symbolic(v) => Some(v),
            Compose::Numeric(_) => None,
        }
    }

    pub fn inverse_exprs(&self) -> Option<&[Expr]> {
        match &self.inverse {
            Inverse::Symbolic(v) => Some(v),
            _ => None,
        }
    }

    /// True when composition (and the inverse, if given) are exact polynomials.
    pub fn is_polynomial(&self) -> bool {
        let poly = |v: &[Expr]| v.iter().all(|e| e.is_exact() && e.is_polynomial().is_some());
        match (&self.compose, &self.inverse) {
            (Compose::Symbolic(c), Inverse::Symbolic(i)) => poly(c) && poly(i),
            (Compose::Symbolic(c), Inverse::Solve) => poly(c),
            _ => false,
        }
    }

    /// `x∘y` with symbolic arguments.
    pub fn compose_symbolic(&self, x: &[Expr], y: &[Expr]) -> Option<Vec<Expr>> {
        let c = self.compose_exprs()?;
        let args: Vec<Expr> = x.iter().chain(y).cloned().collect();
        Some(c.iter().map(|e| e.subst(&args)).collect())
    }

    pub fn compose(&self, x: &[f64], y: &[f64]) -> Vec<f64> {
        match (&self.compose, &self.compiled) {
            (_, Some(c)) => {
                let mut xy = Vec::with_capacity(2 * self.dim);
                xy.extend_from_slice(x);
                xy.extend_from_slice(y);
                c.iter().map(|e| e.eval(&xy)).collect()
            }
            (Compose::Numeric(f), _) => f(x, y),
            (Compose::Symbolic(_), None) => unreachable!("symbolic laws are compiled on construction"),
        }
    }

    /// `x⁻¹`, solving `x∘z = 0` by damped Newton when no inverse is known.
    pub fn inverse(&self, x: &[f64]) -> Result<Vec<f64>> {
        match (&self.inverse, &self.compiled_inv) {
            (_, Some(c)) => Ok(c.iter().map(|e| e.eval(x)).collect()),
            (Inverse::Numeric(f), _) => Ok(f(x)),
            _ => self.newton_inverse(x),
        }
    }

    fn newton_inverse(&self, x: &[f64]) -> Result<Vec<f64>> {
        let n = self.dim;
        let mut z: Vec<f64> = x.iter().map(|v| -v).collect();
        let scale = 1.0 + x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let norm = |v: &[f64]| v.iter().map(|a| a * a).sum::<f64>().sqrt();
        let mut r = self.compose(x, &z);
        for _ in 0..NEWTON_MAX_ITER {
            let rn = norm(&r);
            if rn <= NEWTON_TOL * scale {
                return Ok(z);
            }
            let mut jac = DMatrix::zeros(n, n);
            for j in 0..n {
                let h = 1e-7 * (1.0 + z[j].abs());
                let mut zp = z.clone();
                let mut zm = z.clone();
                zp[j] += h;
                zm[j] -= h;
                let (fp, fm) = (self.compose(x, &zp), self.compose(x, &zm));
                for i in 0..n {
                    jac[(i, j)] = (fp[i] - fm[i]) / (2.0 * h);
                }
            }
            let step = jac
                .lu()
                .solve(&DVector::from_column_slice(&r))
                .ok_or_else(|| Error::NonConvergence("singular Jacobian in group inversion".into()))?;
            let mut t = 1.0;
            loop {
                let trial: Vec<f64> = z.iter().zip(step.iter()).map(|(a, s)| a - t * s).collect();
                let rt = self.compose(x, &trial);
                if norm(&rt) < rn || t < 1e-6 {
                    z = trial;
                    r = rt;
                    break;
                }
                t *= 0.5;
            }
        }
        if norm(&r) <= NEWTON_TOL * scale {
            Ok(z)
        } else {
            Err(Error::NonConvergence(format!(
                "group inversion did not converge in {NEWTON_MAX_ITER} iterations (residual {:.3e})",
                norm(&r)
            )))
        }
    }

    /// `y⁻¹∘x`, the argument of the convolution kernel.
    pub fn conv_point(&self, y: &[f64], x: &[f64]) -> Result<Vec<f64>> {
        Ok(self.compose(&self.inverse(y)?, x))
    }
}

/// One verified identity.
#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub name: String,
    pub method: Method,
    pub residual: f64,
    pub passed: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct AxiomReport {
    pub checks: Vec<Check>,
    pub passed: bool,
    pub assumption: String,
}

fn sample_box(rng: &mut ChaCha8Rng, k: usize) -> Vec<f64> {
    (0..k).map(|_| rng.random_range(-1.0..1.0)).collect()
}

/// Compares two vector-valued maps at sampled points with mixed tolerance
/// `tol · (1 + max(|lhs|, |rhs|))`.
pub(crate) fn compare_sampled(
    points: impl IntoIterator<Item = Vec<f64>>,
    tol: f64,
    mut f: impl FnMut(&[f64]) -> Result<(Vec<f64>, Vec<f64>)>,
) -> Result<(f64, bool)> {
    let mut worst = 0.0f64;
    let mut passed = true;
    let mut seen = 0;
    for p in points {
        let (l, r) = f(&p)?;
        if l.iter().chain(&r).any(|v| !v.is_finite()) {
            continue;
        }
        seen += 1;
        for (a, b) in l.iter().zip(&r) {
            let d = (a - b).abs();
            worst = worst.max(d);
            if d > tol * (1.0 + a.abs().max(b.abs())) {
                passed = false;
            }
        }
    }
    Ok((if seen == 0 { f64::NAN } else { worst }, passed && seen > 0))
}

/// Exact comparison when every difference is an exact polynomial, sampled otherwise.
pub(crate) fn compare_exprs(name: &str, lhs: &[Expr], rhs: &[Expr], nvars: usize, tol: f64, seed: u64) -> Check {
    let diffs: Vec<Expr> = lhs.iter().zip(rhs).map(|(a, b)| (a - b).simplify()).collect();
    if diffs.iter().all(|d| d.is_exact() && d.is_polynomial().is_some()) {
        let checks: Vec<_> = diffs.iter().map(|d| zero_check(d, nvars, tol, seed)).collect();
        return Check {
            name: name.into(),
            method: Method::Exact,
            residual: checks.iter().map(|c| c.residual).fold(0.0, f64::max),
            passed: checks.iter().all(|c| c.passed),
        };
    }
    let lc: Vec<_> = lhs.iter().map(Expr::compile).collect();
    let rc: Vec<_> = rhs.iter().map(Expr::compile).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pts: Vec<Vec<f64>> = (0..GROUP_SAMPLES).map(|_| sample_box(&mut rng, nvars)).collect();
    let (residual, passed) = compare_sampled(pts, tol, |p| {
        Ok((lc.iter().map(|e| e.eval(p)).collect(), rc.iter().map(|e| e.eval(p)).collect()))
    })
    .expect("infallible");
    Check { name: name.into(), method: Method::Sampled, residual, passed }
}

/// Identity, inverse and associativity checks.
pub fn verify_axioms(g: &GroupLaw) -> Result<AxiomReport> {
    let n = g.dim;
    let vars = |offset: usize| (0..n).map(|i| Expr::var(offset + i)).collect::<Vec<_>>();
    let zero = vec![Expr::zero(); n];
    let mut checks = Vec::new();

    if g.compose_exprs().is_some() {
        let x = vars(0);
        checks.push(compare_exprs("left identity", &g.compose_symbolic(&zero, &x).unwrap(), &x, n, SAMPLE_TOL, 1));
        checks.push(compare_exprs("right identity", &g.compose_symbolic(&x, &zero).unwrap(), &x, n, SAMPLE_TOL, 2));
        if let Some(inv) = g.inverse_exprs() {
            checks.push(compare_exprs("right inverse", &g.compose_symbolic(&x, inv).unwrap(), &zero, n, SAMPLE_TOL, 3));
            checks.push(compare_exprs("left inverse", &g.compose_symbolic(inv, &x).unwrap(), &zero, n, SAMPLE_TOL, 4));
        } else {
            checks.push(sampled_inverse_check(g, 3)?);
        }
        let (x, y, z) = (vars(0), vars(n), vars(2 * n));
        let xy = g.compose_symbolic(&x, &y).unwrap();
        let yz = g.compose_symbolic(&y, &z).unwrap();
        let lhs = g.compose_symbolic(&xy, &z).unwrap();
        let rhs = g.compose_symbolic(&x, &yz).unwrap();
        checks.push(compare_exprs("associativity", &lhs, &rhs, 3 * n, SAMPLE_TOL, 5));
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let pts: Vec<Vec<f64>> = (0..GROUP_SAMPLES).map(|_| sample_box(&mut rng, 3 * n)).collect();
        let zero = vec![0.0; n];
        let (r, ok) = compare_sampled(pts.clone(), SAMPLE_TOL, |p| Ok((g.compose(&zero, &p[..n]), p[..n].to_vec())))?;
        checks.push(Check { name: "left identity".into(), method: Method::Sampled, residual: r, passed: ok });
        let (r, ok) = compare_sampled(pts.clone(), SAMPLE_TOL, |p| Ok((g.compose(&p[..n], &zero), p[..n].to_vec())))?;
        checks.push(Check { name: "right identity".into(), method: Method::Sampled, residual: r, passed: ok });
        checks.push(sampled_inverse_check(g, 3)?);
        let (r, ok) = compare_sampled(pts, SAMPLE_TOL, |p| {
            let (x, y, z) = (&p[..n], &p[n..2 * n], &p[2 * n..]);
            Ok((g.compose(&g.compose(x, y), z), g.compose(x, &g.compose(y, z))))
        })?;
        checks.push(Check { name: "associativity".into(), method: Method::Sampled, residual: r, passed: ok });
    }
    Ok(AxiomReport { passed: checks.iter().all(|c| c.passed), checks, assumption: SMOOTHNESS_NOTE.into() })
}

fn sampled_inverse_check(g: &GroupLaw, seed: u64) -> Result<Check> {
    let n = g.dim;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pts: Vec<Vec<f64>> = (0..GROUP_SAMPLES).map(|_| sample_box(&mut rng, n)).collect();
    let zero = vec![0.0; n];
    let (r, ok) = compare_sampled(pts, SAMPLE_TOL, |x| {
        let inv = g.inverse(x)?;
        let mut both = g.compose(x, &inv);
        both.extend(g.compose(&inv, x));
        Ok((both, [zero.clone(), zero.clone()].concat()))
    })?;
    Ok(Check { name: "inverse".into(), method: Method::Sampled, residual: r, passed: ok })
}

/// All monomials of total degree at most `max_degree` in `n` variables.
pub fn monomial_basis(n: usize, max_degree: u32) -> Vec<Expr> {
    fn rec(n: usize, i: usize, left: u32, cur: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if i == n {
            out.push(cur.clone());
            return;
        }
        for k in 0..=left {
            cur.push(k);
            rec(n, i + 1, left - k, cur, out);
            cur.pop();
        }
    }
    let mut exps = Vec::new();
    rec(n, 0, max_degree, &mut Vec::new(), &mut exps);
    exps.sort_by_key(|e| (e.iter().sum::<u32>(), std::cmp::Reverse(e.clone())));
    exps.into_iter()
        .map(|e| Expr::product(e.iter().enumerate().map(|(i, k)| Expr::var(i).powi(*k as i64))).simplify())
        .collect()
}

#[derive(Clone, Debug, Serialize)]
pub struct InvarianceReport {
    pub method: Method,
    pub residual: f64,
    pub passed: bool,
    pub basis: Vec<String>,
    pub worst_function: Option<String>,
}

/// Left-invariance of `L` under `G`: `L_y[u(x∘y)] = (Lu)(x∘y)` on a test basis.
pub fn invariance_residual(l: &Operator, g: &GroupLaw, basis: &[Expr]) -> Result<InvarianceReport> {
    let n = g.dim;
    if l.dim() != n {
        return Err(Error::dim(format!("operator on R^{} with group on R^{n}", l.dim())));
    }
    if basis.is_empty() {
        return Err(Error::invalid("empty test basis"));
    }
    if let Some(m) = basis.iter().filter_map(Expr::max_var).max() {
        if m >= n {
            return Err(Error::dim(format!("test function uses x{} in R^{n}", m + 1)));
        }
    }
    let names: Vec<String> = basis.iter().map(|u| u.to_string()).collect();
    let mut worst = 0.0f64;
    let mut worst_fn = None;
    let mut method = Method::Exact;
    let mut passed = true;

    match g.compose_exprs() {
        Some(_) => {
            // operator variables are y (0..n), x is a parameter (n..2n)
            let x: Vec<Expr> = (0..n).map(|i| Expr::var(n + i)).collect();
            let y: Vec<Expr> = (0..n).map(Expr::var).collect();
            let xy = g.compose_symbolic(&x, &y).unwrap();
            for (u, name) in basis.iter().zip(&names) {
                let lhs = l.apply_with_params(&u.subst(&xy));
                let rhs = l.apply(u)?.subst(&xy);
                let c = compare_exprs("invariance", &[lhs], &[rhs], 2 * n, INVARIANCE_TOL, 7);
                if c.method == Method::Sampled {
                    method = Method::Sampled;
                }
                if !c.passed {
                    passed = false;
                }
                if c.residual > worst || (!c.passed && worst_fn.is_none()) {
                    worst = worst.max(c.residual);
                    worst_fn = Some(name.clone());
                }
            }
        }
        None => {
            method = Method::Sampled;
            let mut rng = ChaCha8Rng::seed_from_u64(7);
            let pts: Vec<Vec<f64>> = (0..GROUP_SAMPLES).map(|_| sample_box(&mut rng, 2 * n)).collect();
            for (u, name) in basis.iter().zip(&names) {
                let uc = u.compile();
                let luc = l.apply(u)?.compile();
                let (r, ok) = compare_sampled(pts.iter().cloned(), FD_TOL, |p| {
                    let (x, y) = (&p[..n], &p[n..]);
                    let f = |z: &[f64]| uc.eval(&g.compose(x, z));
                    Ok((vec![l.apply_numeric(&f, y, 1e-3)], vec![luc.eval(&g.compose(x, y))]))
                })?;
                if !ok {
                    passed = false;
                }
                if r > worst {
                    worst = r;
                    worst_fn = Some(name.clone());
                }
            }
        }
    }
    Ok(InvarianceReport { method, residual: worst, passed, basis: names, worst_function: worst_fn })
}

/// Determinant of a square matrix of expressions by cofactor expansion.
pub fn symbolic_det(m: &[Vec<Expr>]) -> Expr {
    let n = m.len();
    match n {
        0 => Expr::one(),
        1 => m[0][0].clone(),
        2 => (m[0][0].clone() * m[1][1].clone() - m[0][1].clone() * m[1][0].clone()).simplify(),
        _ => {
            let mut terms = Vec::new();
            for j in 0..n {
                if m[0][j].is_zero() {
                    continue;
                }
                let minor: Vec<Vec<Expr>> =
                    m[1..].iter().map(|row| row.iter().enumerate().filter(|(k, _)| *k != j).map(|(_, e)| e.clone()).collect()).collect();
                let t = m[0][j].clone() * symbolic_det(&minor);
                terms.push(if j % 2 == 0 { t } else { -t });
            }
            Expr::sum(terms).simplify()
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct UnimodularReport {
    pub left: Check,
    pub right: Check,
    pub passed: bool,
}

/// Jacobian determinants of `y ↦ x∘y` and `y ↦ y∘x` compared with 1.
pub fn unimodularity_check(g: &GroupLaw) -> Result<UnimodularReport> {
    let n = g.dim;
    let (left, right) = match g.compose_exprs() {
        Some(_) => {
            let x: Vec<Expr> = (0..n).map(|i| Expr::var(n + i)).collect();
            let y: Vec<Expr> = (0..n).map(Expr::var).collect();
            let jac_det = |map: Vec<Expr>| {
                let jac: Vec<Vec<Expr>> = map.iter().map(|c| (0..n).map(|j| c.diff(j)).collect()).collect();
                symbolic_det(&jac)
            };
            let dl = jac_det(g.compose_symbolic(&x, &y).unwrap());
            let dr = jac_det(g.compose_symbolic(&y, &x).unwrap());
            (
                compare_exprs("left translation determinant", &[dl], &[Expr::one()], 2 * n, SAMPLE_TOL, 21),
                compare_exprs("right translation determinant", &[dr], &[Expr::one()], 2 * n, SAMPLE_TOL, 22),
            )
        }
        None => {
            let mut rng = ChaCha8Rng::seed_from_u64(23);
            let pts: Vec<Vec<f64>> = (0..GROUP_SAMPLES).map(|_| sample_box(&mut rng, 2 * n)).collect();
            let det = |f: &dyn Fn(&[f64]) -> Vec<f64>, y: &[f64]| {
                let mut jac = DMatrix::zeros(n, n);
                for j in 0..n {
                    let h = 1e-5;
                    let (mut yp, mut ym) = (y.to_vec(), y.to_vec());
                    yp[j] += h;
                    ym[j] -= h;
                    let (fp, fm) = (f(&yp), f(&ym));
                    for i in 0..n {
                        jac[(i, j)] = (fp[i] - fm[i]) / (2.0 * h);
                    }
                }
                jac.determinant()
            };
            let (rl, okl) = compare_sampled(pts.iter().cloned(), FD_TOL, |p| {
                let x = &p[n..];
                Ok((vec![det(&|y| g.compose(x, y), &p[..n])], vec![1.0]))
            })?;
            let (rr, okr) = compare_sampled(pts, FD_TOL, |p| {
                let x = &p[n..];
                Ok((vec![det(&|y| g.compose(y, x), &p[..n])], vec![1.0]))
            })?;
            (
                Check { name: "left translation determinant".into(), method: Method::Sampled, residual: rl, passed: okl },
                Check { name: "right translation determinant".into(), method: Method::Sampled, residual: rr, passed: okr },
            )
        }
    };
    Ok(UnimodularReport { passed: left.passed && right.passed, left, right })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::{parse_with, VarNames};
    use crate::fields::heisenberg_sublaplacian;

    fn law(src: &[&str], n: usize, inv: Option<&[&str]>) -> GroupLaw {
        let names = VarNames::pair(n, false);
        let c = src.iter().map(|s| parse_with(s, &names).unwrap()).collect();
        let i = inv.map(|v| v.iter().map(|s| crate::expr::parse(s, n).unwrap()).collect());
        GroupLaw::symbolic(n, c, i).unwrap()
    }

    #[test]
    fn euclidean_and_heisenberg_axioms_are_exact() {
        for g in [GroupLaw::euclidean(3), GroupLaw::heisenberg()] {
            let r = verify_axioms(&g).unwrap();
            assert!(r.passed, "{r:?}");
            assert!(r.checks.iter().all(|c| c.method == Method::Exact && c.residual == 0.0));
            assert!(r.assumption.contains("not verified"));
        }
    }

    #[test]
    fn broken_law_fails_identity() {
        let g = law(&["x1 + y1", "x2 + y2 + x1^2"], 2, None);
        let r = verify_axioms(&g).unwrap();
        let right = r.checks.iter().find(|c| c.name == "right identity").unwrap();
        assert!(!right.passed);
        assert!(!r.passed);
    }

    #[test]
    fn numeric_inverse_matches_symbolic() {
        let g = law(&["x1 + y1", "x2 + y2", "x3 + y3 + (x1*y2 - x2*y1)/2"], 3, None);
        let h = GroupLaw::heisenberg();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..20 {
            let x = sample_box(&mut rng, 3);
            let a = g.inverse(&x).unwrap();
            let b = h.inverse(&x).unwrap();
            assert!(a.iter().zip(&b).all(|(p, q)| (p - q).abs() < 1e-10));
        }
        assert!(verify_axioms(&g).unwrap().passed);
    }

    #[test]
    fn nonlinear_numeric_inverse() {
        // x∘y = (x1 + y1, x2 + y2 exp(x1)), inverse (-x1, -x2 exp(-x1))
        let g = law(&["x1 + y1", "x2 + y2*exp(x1)"], 2, None);
        let x = [0.7, -1.3];
        let z = g.inverse(&x).unwrap();
        assert!((z[0] + 0.7).abs() < 1e-11);
        assert!((z[1] - 1.3 * (-0.7f64).exp()).abs() < 1e-11);
        let r = verify_axioms(&g).unwrap();
        assert!(r.passed);
        assert!(r.checks.iter().any(|c| c.method == Method::Sampled));
    }

    #[test]
    fn conv_point_vanishes_on_diagonal() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for g in [GroupLaw::euclidean(3), GroupLaw::heisenberg()] {
            for _ in 0..100 {
                let y = sample_box(&mut rng, 3);
                let z = g.conv_point(&y, &y).unwrap();
                assert!(z.iter().all(|v| v.abs() < 1e-10));
            }
        }
        let e = GroupLaw::euclidean(2);
        assert_eq!(e.conv_point(&[1.0, 2.0], &[4.0, 3.0]).unwrap(), vec![3.0, 1.0]);
    }

    #[test]
    fn invariance_examples() {
        let lap = Operator::laplacian(3);
        let basis = monomial_basis(3, 3);
        assert_eq!(basis.len(), 20);
        let r = invariance_residual(&lap, &GroupLaw::euclidean(3), &basis).unwrap();
        assert!(r.passed && r.residual == 0.0 && r.method == Method::Exact);

        let h = heisenberg_sublaplacian();
        let r = invariance_residual(&h, &GroupLaw::heisenberg(), &basis).unwrap();
        assert!(r.passed && r.residual == 0.0 && r.method == Method::Exact, "{r:?}");

        let r = invariance_residual(&lap, &GroupLaw::heisenberg(), &basis).unwrap();
        assert!(!r.passed);
        assert!(r.worst_function.is_some());
    }

    #[test]
    fn constant_coefficient_operators_are_translation_invariant() {
        let names = VarNames::default_for(2);
        let p = |s: &str| parse_with(s, &names).unwrap();
        let op = Operator::new(
            vec![vec![p("2"), p("1/3")], vec![p("1/3"), p("1")]],
            vec![p("-1"), p("5/2")],
            None,
        )
        .unwrap();
        let r = invariance_residual(&op, &GroupLaw::euclidean(2), &monomial_basis(2, 3)).unwrap();
        assert!(r.passed && r.residual == 0.0);
    }

    #[test]
    fn invariance_under_numeric_law() {
        let g = GroupLaw::numeric(3, Arc::new(|x: &[f64], y: &[f64]| GroupLaw::heisenberg().compose(x, y)), None);
        let r = invariance_residual(&heisenberg_sublaplacian(), &g, &monomial_basis(3, 2)).unwrap();
        assert!(r.passed, "{r:?}");
        assert_eq!(r.method, Method::Sampled);
    }

    #[test]
    fn unimodularity_examples() {
        let r = unimodularity_check(&GroupLaw::heisenberg()).unwrap();
        assert!(r.passed && r.left.method == Method::Exact);
        // (x1 + y1, x2 + exp(y1) ... ) style: ax+b group is not unimodular
        let affine = law(&["x1 + y1", "x2 + y2*exp(x1)"], 2, None);
        let r = unimodularity_check(&affine).unwrap();
        assert!(!r.left.passed);
        assert!(r.right.passed);
    }

    #[test]
    fn left_determinant_is_constant_in_y() {
        let affine = law(&["x1 + y1", "x2 + y2*exp(x1)"], 2, None);
        let x: Vec<Expr> = (0..2).map(|i| Expr::var(2 + i)).collect();
        let y: Vec<Expr> = (0..2).map(Expr::var).collect();
        let map = affine.compose_symbolic(&x, &y).unwrap();
        let jac: Vec<Vec<Expr>> = map.iter().map(|c| (0..2).map(|j| c.diff(j)).collect()).collect();
        let det = symbolic_det(&jac);
        assert!(det.diff(0).is_zero() && det.diff(1).is_zero());
    }

    #[test]
    fn symbolic_det_matches_numeric() {
        let m: Vec<Vec<Expr>> = vec![
            vec![Expr::int(2), Expr::var(0), Expr::int(1)],
            vec![Expr::int(0), Expr::int(3), Expr::var(1)],
            vec![Expr::var(0), Expr::int(1), Expr::int(4)],
        ];
        let d = symbolic_det(&m);
        let x = [0.3, -1.2];
        let num = DMatrix::from_fn(3, 3, |i, j| m[i][j].eval(&x)).determinant();
        assert!((d.eval(&x) - num).abs() < 1e-12);
    }

    #[test]
    fn time_lift_keeps_axioms() {
        let g = GroupLaw::heisenberg().with_time().unwrap();
        assert_eq!(g.dim(), 4);
        assert!(verify_axioms(&g).unwrap().passed);
        assert!(unimodularity_check(&g).unwrap().passed);
    }

    #[test]
    fn dimension_errors() {
        assert!(GroupLaw::symbolic(2, vec![Expr::var(0)], None).is_err());
        assert!(GroupLaw::symbolic(1, vec![Expr::var(2)], None).is_err());
        assert!(invariance_residual(&Operator::laplacian(2), &GroupLaw::heisenberg(), &monomial_basis(2, 1)).is_err());
    }
}
