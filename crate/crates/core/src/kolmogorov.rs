//! Constant-coefficient Kolmogorov operators `div(A∇) + <Bx, ∇> − ∂_t`
//! on `R^{n+1}`: the flow `E(s) = exp(−sB)`, the Gram matrix `C(t)`,
//! classification, and the associated operator and group law.

use std::sync::Arc;

use nalgebra::{Complex, DMatrix, SymmetricEigen};
use num_traits::{Signed, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::expr::{to_f64, Expr, Rational};
use crate::fields::{Operator, RANK_RTOL};
use crate::group::GroupLaw;
use crate::quad::gauss_legendre;

/// Times at which `C(t)` is tested for positive definiteness.
pub const GRAM_TIMES: [f64; 3] = [0.1, 1.0, 10.0];
/// Minimal eigenvalue of `C(t)` accepted as positive.
pub const GRAM_EIG_TOL: f64 = 1e-10;
/// Absolute quadrature tolerance per entry of `C(t)`.
pub const GRAM_TOL: f64 = 1e-10;
/// `|trace B|` below this counts as zero.
pub const TRACE_TOL: f64 = 1e-12;
/// Real parts up to this count as nonpositive.
pub const EIG_RE_TOL: f64 = 1e-10;

#[derive(Clone, Debug)]
pub struct KolmogorovSpec {
    a: Vec<Vec<Rational>>,
    b: Vec<Vec<Rational>>,
    af: DMatrix<f64>,
    bf: DMatrix<f64>,
}

fn to_dmatrix(m: &[Vec<Rational>]) -> DMatrix<f64> {
    let n = m.len();
    DMatrix::from_fn(n, n, |i, j| to_f64(&m[i][j]))
}

impl KolmogorovSpec {
    /// `A` symmetric positive semidefinite, `B` arbitrary, both `n × n`.
    pub fn new(a: Vec<Vec<Rational>>, b: Vec<Vec<Rational>>) -> Result<Self> {
        let n = a.len();
        if n == 0 {
            return Err(Error::invalid("empty matrices"));
        }
        if a.iter().chain(&b).any(|r| r.len() != n) || b.len() != n {
            return Err(Error::dim(format!("A and B must both be {n}x{n}")));
        }
        for i in 0..n {
            for j in 0..i {
                if a[i][j] != a[j][i] {
                    return Err(Error::invalid(format!("A is not symmetric at ({}, {})", i + 1, j + 1)));
                }
            }
        }
        let af = to_dmatrix(&a);
        let min = SymmetricEigen::new(af.clone()).eigenvalues.min();
        if min < -1e-12 {
            return Err(Error::invalid(format!("A is not positive semidefinite (eigenvalue {min:.3e})")));
        }
        let bf = to_dmatrix(&b);
        Ok(KolmogorovSpec { a, b, af, bf })
    }

    /// Builds a spec from floating-point matrices, converted exactly.
    pub fn from_f64(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<Self> {
        let conv = |m: &DMatrix<f64>| -> Result<Vec<Vec<Rational>>> {
            (0..m.nrows())
                .map(|i| {
                    (0..m.ncols())
                        .map(|j| Rational::from_float(m[(i, j)]).ok_or_else(|| Error::invalid("non-finite entry")))
                        .collect()
                })
                .collect()
        };
        if a.nrows() != a.ncols() || b.nrows() != b.ncols() {
            return Err(Error::dim("matrices must be square"));
        }
        KolmogorovSpec::new(conv(a)?, conv(b)?)
    }

    pub fn n(&self) -> usize {
        self.a.len()
    }

    pub fn a(&self) -> &DMatrix<f64> {
        &self.af
    }

    pub fn b(&self) -> &DMatrix<f64> {
        &self.bf
    }

    pub fn b_exact(&self) -> &[Vec<Rational>] {
        &self.b
    }

    pub fn trace_b(&self) -> Rational {
        (0..self.n()).fold(Rational::zero(), |acc, i| acc + &self.b[i][i])
    }

    /// True when `B^n = 0` in exact arithmetic.
    pub fn is_nilpotent(&self) -> bool {
        let n = self.n();
        let mut p = self.b.clone();
        for _ in 1..n {
            p = rat_mul(&p, &self.b);
        }
        p.iter().flatten().all(Zero::is_zero)
    }
}

fn rat_mul(x: &[Vec<Rational>], y: &[Vec<Rational>]) -> Vec<Vec<Rational>> {
    let n = x.len();
    (0..n)
        .map(|i| (0..n).map(|j| (0..n).fold(Rational::zero(), |acc, k| acc + &x[i][k] * &y[k][j])).collect())
        .collect()
}

fn is_nilpotent_f64(b: &DMatrix<f64>) -> bool {
    let n = b.nrows();
    let mut p = b.clone();
    for _ in 1..n {
        p = &p * b;
    }
    p.iter().all(|v| *v == 0.0)
}

/// `E(s) = exp(−sB)`: a finite series when `B` is nilpotent, otherwise
/// scaling and squaring with a Taylor kernel.
pub fn matrix_exp(b: &DMatrix<f64>, s: f64) -> DMatrix<f64> {
    let n = b.nrows();
    let m = b * (-s);
    if is_nilpotent_f64(b) {
        let mut out = DMatrix::identity(n, n);
        let mut term = DMatrix::identity(n, n);
        for k in 1..n {
            term = &term * &m / k as f64;
            out += &term;
        }
        return out;
    }
    let norm = m.iter().map(|v| v.abs()).fold(0.0, f64::max) * n as f64;
    let squarings = if norm > 0.5 { (norm / 0.5).log2().ceil() as i32 } else { 0 };
    let scaled = &m / 2f64.powi(squarings);
    let mut out = DMatrix::identity(n, n);
    let mut term = DMatrix::identity(n, n);
    for k in 1..=30 {
        term = &term * &scaled / k as f64;
        out += &term;
        if term.iter().all(|v| v.abs() <= 1e-18 * out.iter().map(|x| x.abs()).fold(1.0, f64::max)) {
            break;
        }
    }
    for _ in 0..squarings {
        out = &out * &out;
    }
    out
}

/// Accepted quadrature nodes `(s, weight)` for `C(t)`.
fn gram_nodes(spec: &KolmogorovSpec, t: f64) -> Result<Vec<(f64, f64)>> {
    if t <= 0.0 || !t.is_finite() {
        return Err(Error::invalid(format!("gram needs t > 0, got {t}")));
    }
    let lo = gauss_legendre(10);
    let hi = gauss_legendre(20);
    let a_norm = spec.af.norm();
    // returns the panel sum and a round-off scale Σ w ‖E‖² ‖A‖
    let panel = |a: f64, b: f64, rule: &[(f64, f64)]| {
        let n = spec.n();
        let mut acc = DMatrix::zeros(n, n);
        let mut bound = 0.0;
        let (mid, half) = (0.5 * (a + b), 0.5 * (b - a));
        for (x, w) in rule {
            let e = matrix_exp(&spec.bf, mid + half * x);
            acc += &e * &spec.af * e.transpose() * (*w * half);
            bound += w * half * e.norm_squared() * a_norm;
        }
        (acc, bound)
    };
    let mut stack = vec![(0.0, t, 0usize)];
    let mut nodes = Vec::new();
    while let Some((a, b, depth)) = stack.pop() {
        let (fine, bound) = panel(a, b, &hi);
        let (coarse, _) = panel(a, b, &lo);
        let err = (&fine - &coarse).iter().map(|v| v.abs()).fold(0.0, f64::max);
        let share = (GRAM_TOL * (b - a) / t).max(1e-13 * bound);
        if err <= share {
            let (mid, half) = (0.5 * (a + b), 0.5 * (b - a));
            nodes.extend(hi.iter().map(|(x, w)| (mid + half * x, w * half)));
        } else if depth >= 40 {
            return Err(Error::NonConvergence(format!("gram quadrature stalled on [{a}, {b}] (error {err:.3e})")));
        } else {
            let m = 0.5 * (a + b);
            stack.push((a, m, depth + 1));
            stack.push((m, b, depth + 1));
        }
    }
    Ok(nodes)
}

/// `C(t) = ∫_0^t E(s) A E(s)^T ds` by adaptive Gauss–Legendre quadrature
/// with absolute tolerance `GRAM_TOL` per entry. Where `E` is so large that
/// this is below round-off, the target becomes `1e-13 · Σ w ‖E‖² ‖A‖`.
pub fn gram(spec: &KolmogorovSpec, t: f64) -> Result<DMatrix<f64>> {
    let n = spec.n();
    let mut total = DMatrix::zeros(n, n);
    for (s, w) in gram_nodes(spec, t)? {
        let e = matrix_exp(&spec.bf, s);
        total += &e * &spec.af * e.transpose() * w;
    }
    Ok(0.5 * (&total + total.transpose()))
}

/// Smallest eigenvalue of `C(t)`, computed as `σ_min(F)^2` for the
/// quadrature factor `F = [√w E(s) A^{1/2}]` with `C ≈ F Fᵀ`.
pub fn gram_min_eigenvalue(spec: &KolmogorovSpec, t: f64) -> Result<f64> {
    let n = spec.n();
    let eig = SymmetricEigen::new(spec.af.clone());
    let sqrt_a = &eig.eigenvectors
        * DMatrix::from_diagonal(&eig.eigenvalues.map(|v| v.max(0.0).sqrt()))
        * eig.eigenvectors.transpose();
    let nodes = gram_nodes(spec, t)?;
    let mut f = DMatrix::zeros(n, n * nodes.len());
    for (k, (s, w)) in nodes.iter().enumerate() {
        let block = matrix_exp(&spec.bf, *s) * &sqrt_a * w.sqrt();
        f.view_mut((0, k * n), (n, n)).copy_from(&block);
    }
    let smin = f.svd(false, false).singular_values.min();
    Ok(smin * smin)
}

/// Rank of `[A, BA, …, B^{n-1}A]`.
pub fn kalman_rank(spec: &KolmogorovSpec) -> usize {
    let n = spec.n();
    let mut blocks = DMatrix::zeros(n, n * n);
    let mut p = spec.af.clone();
    for k in 0..n {
        blocks.view_mut((0, k * n), (n, n)).copy_from(&p);
        p = &spec.bf * p;
    }
    let sv = blocks.svd(false, false).singular_values;
    let smax = sv.max();
    if smax == 0.0 {
        return 0;
    }
    sv.iter().filter(|s| **s > RANK_RTOL * smax).count()
}

/// Eigenvalues of `B` as `(re, im)` pairs, sorted by real part.
pub fn eigenvalues(b: &DMatrix<f64>) -> Vec<(f64, f64)> {
    let mut v: Vec<(f64, f64)> = b.complex_eigenvalues().iter().map(|c: &Complex<f64>| (c.re, c.im)).collect();
    v.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.total_cmp(&y.1)));
    v
}

#[derive(Clone, Debug, Serialize)]
pub struct GramSample {
    pub t: f64,
    pub min_eigenvalue: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct Classification {
    pub hypoelliptic: bool,
    pub unimodular: bool,
    pub linf_liouville: bool,
    pub eigenvalues: Vec<(f64, f64)>,
    #[serde(serialize_with = "crate::report::rational")]
    pub trace_b: Rational,
    pub gram_samples: Vec<GramSample>,
    pub kalman_rank: usize,
    pub notes: Vec<String>,
}

pub fn classify(spec: &KolmogorovSpec) -> Result<Classification> {
    let n = spec.n();
    let mut notes = Vec::new();
    let gram_samples = GRAM_TIMES
        .iter()
        .map(|&t| -> Result<GramSample> {
            Ok(GramSample { t, min_eigenvalue: gram_min_eigenvalue(spec, t)? })
        })
        .collect::<Result<Vec<_>>>()?;
    let gram_ok = gram_samples.iter().all(|g| g.min_eigenvalue > GRAM_EIG_TOL);
    let kalman_rank = kalman_rank(spec);
    let kalman_ok = kalman_rank == n;
    if gram_ok != kalman_ok {
        notes.push(format!(
            "diagnostic: C(t) test says {} but Kalman rank is {kalman_rank} of {n}; no hypoellipticity verdict",
            if gram_ok { "positive definite" } else { "singular" }
        ));
    }
    let trace_b = spec.trace_b();
    let unimodular = to_f64(&trace_b.abs()) <= TRACE_TOL;
    let eigenvalues = eigenvalues(&spec.bf);
    let max_re = eigenvalues.iter().map(|e| e.0).fold(f64::NEG_INFINITY, f64::max);
    let linf_liouville = max_re <= EIG_RE_TOL;
    if max_re.abs() <= EIG_RE_TOL {
        notes.push("boundary: the largest real part of B's spectrum is within 1e-10 of 0; inconclusive near the threshold".into());
    }
    Ok(Classification {
        hypoelliptic: gram_ok && kalman_ok,
        unimodular,
        linf_liouville,
        eigenvalues,
        trace_b,
        gram_samples,
        kalman_rank,
        notes,
    })
}

/// `div(A∇) + <Bx, ∇> − ∂_t` on `R^{n+1}`, time last.
pub fn build_operator(spec: &KolmogorovSpec) -> Operator {
    let n = spec.n();
    let a = (0..=n)
        .map(|i| {
            (0..=n)
                .map(|j| if i < n && j < n { Expr::Const(spec.a[i][j].clone()) } else { Expr::zero() })
                .collect()
        })
        .collect();
    let mut b: Vec<Expr> = (0..n)
        .map(|i| Expr::sum((0..n).map(|j| Expr::Const(spec.b[i][j].clone()) * Expr::var(j))).simplify())
        .collect();
    b.push(Expr::zero());
    Operator::new(a, b, Some(n)).expect("constant symmetric coefficients")
}

/// How the entries of `E(s)` are represented in the group law.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum LawKind {
    /// Exact polynomial (nilpotent `B`).
    Polynomial,
    /// `exp`/`cos`/`sin` combinations from the spectral projectors of `B`.
    Spectral,
    /// Evaluation through [`matrix_exp`] only.
    Numeric,
}

#[derive(Clone, Debug)]
pub struct KolmogorovGroup {
    pub law: GroupLaw,
    pub kind: LawKind,
}

/// The law `(x, t)∘(y, s) = (y + E(s) x, t + s)` with inverse `(−E(−t) x, −t)`.
pub fn build_group(spec: &KolmogorovSpec) -> KolmogorovGroup {
    let n = spec.n();
    let sym = if spec.is_nilpotent() {
        Some((nilpotent_flow(spec), LawKind::Polynomial))
    } else {
        spectral_flow(spec).map(|e| (e, LawKind::Spectral))
    };
    match sym {
        Some((e, kind)) => {
            // x-slot: x 0..n, t = n; y-slot: y n+1..2n+1, s = 2n+1
            let flow_at = |time: Expr| -> Vec<Vec<Expr>> {
                e.iter().map(|row| row.iter().map(|c| c.subst(std::slice::from_ref(&time)).simplify()).collect()).collect()
            };
            let es = flow_at(Expr::var(2 * n + 1));
            let mut compose: Vec<Expr> = (0..n)
                .map(|i| Expr::var(n + 1 + i) + Expr::sum((0..n).map(|j| es[i][j].clone() * Expr::var(j))))
                .collect();
            compose.push(Expr::var(n) + Expr::var(2 * n + 1));
            let em = flow_at(-Expr::var(n));
            let mut inverse: Vec<Expr> =
                (0..n).map(|i| -Expr::sum((0..n).map(|j| em[i][j].clone() * Expr::var(j)))).collect();
            inverse.push(-Expr::var(n));
            let law = GroupLaw::symbolic(n + 1, compose, Some(inverse)).expect("consistent dimensions");
            KolmogorovGroup { law, kind }
        }
        None => {
            let b1 = spec.bf.clone();
            let b2 = spec.bf.clone();
            let compose = Arc::new(move |x: &[f64], y: &[f64]| {
                let e = matrix_exp(&b1, y[n]);
                let mut out: Vec<f64> = (0..n).map(|i| y[i] + (0..n).map(|j| e[(i, j)] * x[j]).sum::<f64>()).collect();
                out.push(x[n] + y[n]);
                out
            });
            let inverse = Arc::new(move |x: &[f64]| {
                let e = matrix_exp(&b2, -x[n]);
                let mut out: Vec<f64> = (0..n).map(|i| -(0..n).map(|j| e[(i, j)] * x[j]).sum::<f64>()).collect();
                out.push(-x[n]);
                out
            });
            KolmogorovGroup { law: GroupLaw::numeric(n + 1, compose, Some(inverse)), kind: LawKind::Numeric }
        }
    }
}

/// `Σ_{k<n} (−s)^k B^k / k!` as exact polynomials in the variable 0.
fn nilpotent_flow(spec: &KolmogorovSpec) -> Vec<Vec<Expr>> {
    let n = spec.n();
    let s = Expr::var(0);
    let mut out: Vec<Vec<Expr>> =
        (0..n).map(|i| (0..n).map(|j| if i == j { Expr::one() } else { Expr::zero() }).collect()).collect();
    let mut power = spec.b.clone();
    let mut fact = Rational::from_integer(1.into());
    for k in 1..n {
        fact *= Rational::from_integer((k as i64).into());
        let coeff = (-s.clone()).powi(k as i64);
        for i in 0..n {
            for j in 0..n {
                if !power[i][j].is_zero() {
                    let c = Expr::Const(&power[i][j] / &fact);
                    out[i][j] = (out[i][j].clone() + c * coeff.clone()).simplify();
                }
            }
        }
        power = rat_mul(&power, &spec.b);
    }
    out
}

/// `Σ_k e^{−sλ_k} P_k` over the distinct eigenvalues when `B` is
/// diagonalizable; conjugate pairs become `exp·(cos, sin)` terms.
fn spectral_flow(spec: &KolmogorovSpec) -> Option<Vec<Vec<Expr>>> {
    let n = spec.n();
    let eig = spec.bf.complex_eigenvalues();
    let scale = 1.0 + eig.iter().map(|c| c.norm()).fold(0.0, f64::max);
    let mut distinct: Vec<Complex<f64>> = Vec::new();
    for c in eig.iter() {
        if !distinct.iter().any(|d| (d - c).norm() <= 1e-8 * scale) {
            distinct.push(*c);
        }
    }
    let bc: DMatrix<Complex<f64>> = spec.bf.map(|v| Complex::new(v, 0.0));
    let id = DMatrix::<Complex<f64>>::identity(n, n);
    let projector = |k: usize| {
        let mut p = id.clone();
        for (j, lj) in distinct.iter().enumerate() {
            if j != k {
                p = p * (&bc - &id * *lj) / (distinct[k] - lj);
            }
        }
        p
    };
    let s = Expr::var(0);
    let mut out: Vec<Vec<Expr>> = vec![vec![Expr::zero(); n]; n];
    for (k, lk) in distinct.iter().enumerate() {
        if lk.im < -1e-8 * scale {
            continue;
        }
        let p = projector(k);
        if lk.im.abs() <= 1e-8 * scale {
            let decay = (Expr::Float(-lk.re) * s.clone()).exp();
            for i in 0..n {
                for j in 0..n {
                    let c = p[(i, j)].re;
                    if c.abs() > 1e-15 {
                        out[i][j] = out[i][j].clone() + Expr::Float(c) * decay.clone();
                    }
                }
            }
        } else {
            let decay = (Expr::Float(-lk.re) * s.clone()).exp();
            let cos = (Expr::Float(lk.im) * s.clone()).cos();
            let sin = (Expr::Float(lk.im) * s.clone()).sin();
            for i in 0..n {
                for j in 0..n {
                    let (pr, pi) = (2.0 * p[(i, j)].re, 2.0 * p[(i, j)].im);
                    let mut terms = Vec::new();
                    if pr.abs() > 1e-15 {
                        terms.push(Expr::Float(pr) * cos.clone());
                    }
                    if pi.abs() > 1e-15 {
                        terms.push(Expr::Float(pi) * sin.clone());
                    }
                    if !terms.is_empty() {
                        out[i][j] = out[i][j].clone() + decay.clone() * Expr::sum(terms);
                    }
                }
            }
        }
    }
    let out: Vec<Vec<Expr>> = out.into_iter().map(|r| r.into_iter().map(|e| e.simplify()).collect()).collect();
    let compiled: Vec<Vec<_>> = out.iter().map(|r| r.iter().map(Expr::compile).collect()).collect();
    for s in [-1.5, -0.3, 0.0, 0.7, 2.0] {
        let e = matrix_exp(&spec.bf, s);
        let scale = 1.0 + e.iter().map(|v| v.abs()).fold(0.0, f64::max);
        for i in 0..n {
            for j in 0..n {
                if (compiled[i][j].eval(&[s]) - e[(i, j)]).abs() > 1e-10 * scale {
                    return None;
                }
            }
        }
    }
    Some(out)
}
