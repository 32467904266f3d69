//! Vector fields, Lie brackets, the Hörmander rank condition, and the
//! action of `L = div(A∇) + <b, ∇> [- ∂_t]`, its formal adjoint and the
//! carré du champ `<A∇u, ∇u>` on symbolic test functions.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::expr::{zero_check, Expr, SAMPLE_TOL};

/// `Σ_k coeffs[k] ∂_{x_k}`.
#[derive(Clone, Debug, PartialEq)]
pub struct VectorField {
    coeffs: Vec<Expr>,
}

impl VectorField {
    pub fn new(coeffs: Vec<Expr>) -> Self {
        VectorField { coeffs: coeffs.iter().map(Expr::simplify).collect() }
    }

    /// The coordinate field `∂_{x_k}` in `R^n`.
    pub fn coordinate(n: usize, k: usize) -> Self {
        VectorField::new((0..n).map(|i| if i == k { Expr::one() } else { Expr::zero() }).collect())
    }

    pub fn zero(n: usize) -> Self {
        VectorField::new(vec![Expr::zero(); n])
    }

    pub fn dim(&self) -> usize {
        self.coeffs.len()
    }

    pub fn coeffs(&self) -> &[Expr] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(Expr::is_zero)
    }

    /// `X u = Σ_k c_k ∂_k u`, simplified.
    pub fn apply(&self, u: &Expr) -> Expr {
        Expr::sum(self.coeffs.iter().enumerate().map(|(k, c)| c.clone() * u.diff(k))).simplify()
    }

    pub fn eval(&self, x: &[f64]) -> Vec<f64> {
        self.coeffs.iter().map(|c| c.eval(x)).collect()
    }

    pub fn scale(&self, s: &Expr) -> VectorField {
        VectorField::new(self.coeffs.iter().map(|c| s.clone() * c.clone()).collect())
    }

    pub fn neg(&self) -> VectorField {
        VectorField::new(self.coeffs.iter().map(|c| -c.clone()).collect())
    }
}

/// `[X, Y]` with coefficients `Σ_j (X_j ∂_j Y_k − Y_j ∂_j X_k)`.
pub fn lie_bracket(x: &VectorField, y: &VectorField) -> Result<VectorField> {
    if x.dim() != y.dim() {
        return Err(Error::dim(format!("bracket of fields in R^{} and R^{}", x.dim(), y.dim())));
    }
    let n = x.dim();
    let coeffs = (0..n)
        .map(|k| {
            Expr::sum((0..n).map(|j| {
                x.coeffs[j].clone() * y.coeffs[k].diff(j) - y.coeffs[j].clone() * x.coeffs[k].diff(j)
            }))
        })
        .collect();
    Ok(VectorField::new(coeffs))
}

/// Numerical rank threshold relative to the largest singular value.
pub const RANK_RTOL: f64 = 1e-8;
/// Default bracket nesting depth.
pub const DEFAULT_DEPTH: usize = 4;

/// Outcome of [`hormander_check`].
#[derive(Clone, Debug, Serialize)]
pub struct HormanderReport {
    pub dim: usize,
    pub max_depth: usize,
    pub depth_used: usize,
    pub fields_generated: usize,
    /// Rank at each sampled point, after `depth_used` levels.
    pub ranks: Vec<usize>,
    /// Minimal rank over the sample after each bracket level.
    pub min_rank_by_depth: Vec<usize>,
    pub full_rank: bool,
    pub deficient_points: Vec<Vec<f64>>,
    pub note: String,
}

pub(crate) const DENSITY_NOTE: &str = "ranks are numerical and evaluated only at the sampled points; \
full rank on an open dense set cannot be certified from finitely many samples";

fn numerical_rank(m: &DMatrix<f64>) -> usize {
    if m.ncols() == 0 || m.nrows() == 0 {
        return 0;
    }
    let sv = m.clone().svd(false, false).singular_values;
    let smax = sv.iter().cloned().fold(0.0, f64::max);
    if smax == 0.0 || !smax.is_finite() {
        return 0;
    }
    sv.iter().filter(|s| **s > RANK_RTOL * smax).count()
}

fn rank_at(fields: &[VectorField], x: &[f64], n: usize) -> usize {
    let mut m = DMatrix::zeros(n, fields.len());
    for (j, f) in fields.iter().enumerate() {
        for (i, v) in f.eval(x).into_iter().enumerate() {
            m[(i, j)] = v;
        }
    }
    numerical_rank(&m)
}

/// Generates iterated brackets of `fields` up to nesting depth `max_depth`
/// and reports the numerical rank of the generated family at each point.
pub fn hormander_check(fields: &[VectorField], points: &[Vec<f64>], max_depth: usize) -> Result<HormanderReport> {
    if max_depth == 0 {
        return Err(Error::invalid("max_depth must be at least 1"));
    }
    if points.is_empty() {
        return Err(Error::invalid("no sample points"));
    }
    let n = fields.first().map(VectorField::dim).ok_or_else(|| Error::invalid("no vector fields"))?;
    if let Some(bad) = fields.iter().find(|f| f.dim() != n) {
        return Err(Error::dim(format!("field in R^{} among fields in R^{n}", bad.dim())));
    }
    if let Some(p) = points.iter().find(|p| p.len() != n) {
        return Err(Error::dim(format!("sample point of length {} in R^{n}", p.len())));
    }

    let mut all: Vec<VectorField> = Vec::new();
    let push_new = |f: VectorField, all: &mut Vec<VectorField>| -> Option<VectorField> {
        if f.is_zero() {
            return None;
        }
        let neg = f.neg();
        if all.iter().any(|g| *g == f || *g == neg) {
            return None;
        }
        all.push(f.clone());
        Some(f)
    };

    let generators: Vec<VectorField> = fields.iter().filter_map(|f| push_new(f.clone(), &mut all)).collect();
    let mut level = generators.clone();
    let mut min_rank_by_depth = Vec::new();
    let mut depth = 1;
    let mut ranks;
    loop {
        ranks = points.iter().map(|p| rank_at(&all, p, n)).collect::<Vec<_>>();
        min_rank_by_depth.push(ranks.iter().copied().min().unwrap_or(0));
        if ranks.iter().all(|r| *r == n) || depth == max_depth || level.is_empty() {
            break;
        }
        let mut next = Vec::new();
        for g in &generators {
            for f in &level {
                if let Some(b) = push_new(lie_bracket(g, f)?, &mut all) {
                    next.push(b);
                }
            }
        }
        level = next;
        depth += 1;
    }
    let deficient_points = points
        .iter()
        .zip(&ranks)
        .filter(|(_, r)| **r < n)
        .map(|(p, _)| p.clone())
        .collect::<Vec<_>>();
    Ok(HormanderReport {
        dim: n,
        max_depth,
        depth_used: depth,
        fields_generated: all.len(),
        full_rank: deficient_points.is_empty(),
        ranks,
        min_rank_by_depth,
        deficient_points,
        note: DENSITY_NOTE.to_string(),
    })
}

/// `count` points drawn uniformly from `[-range, range]^n`.
pub fn sample_points(n: usize, count: usize, range: f64, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count).map(|_| (0..n).map(|_| rng.random_range(-range..range)).collect()).collect()
}

/// Second-order operator `div(A∇) + <b, ∇>`, optionally minus `∂_t` along a
/// distinguished time coordinate.
#[derive(Clone, Debug)]
pub struct Operator {
    dim: usize,
    a: Vec<Vec<Expr>>,
    b: Vec<Expr>,
    time: Option<usize>,
}

/// Result of the sampled positive-semidefiniteness test of `A(x)`.
#[derive(Clone, Debug, Serialize)]
pub struct PsdReport {
    pub points: usize,
    pub min_eigenvalue: f64,
    pub passed: bool,
    pub trace_at_origin: f64,
    pub trace_positive: bool,
}

/// Eigenvalue tolerance for the PSD test.
pub const PSD_TOL: f64 = -1e-10;

impl Operator {
    /// Builds an operator, checking that `A` is square and symmetric.
    pub fn new(a: Vec<Vec<Expr>>, b: Vec<Expr>, time: Option<usize>) -> Result<Self> {
        let dim = a.len();
        if dim == 0 {
            return Err(Error::invalid("empty coefficient matrix"));
        }
        if a.iter().any(|row| row.len() != dim) {
            return Err(Error::dim("coefficient matrix is not square"));
        }
        if b.len() != dim {
            return Err(Error::dim(format!("drift has {} entries, expected {dim}", b.len())));
        }
        if let Some(t) = time {
            if t >= dim {
                return Err(Error::dim(format!("time index {t} outside R^{dim}")));
            }
        }
        let a: Vec<Vec<Expr>> = a.iter().map(|r| r.iter().map(Expr::simplify).collect()).collect();
        for i in 0..dim {
            for j in (i + 1)..dim {
                let check = zero_check(&(&a[i][j] - &a[j][i]), dim, SAMPLE_TOL, 17);
                if !check.passed {
                    return Err(Error::invalid(format!("A is not symmetric at ({}, {})", i + 1, j + 1)));
                }
            }
        }
        let op = Operator { dim, a, b: b.iter().map(Expr::simplify).collect(), time };
        let max_var = op.a.iter().flatten().chain(op.b.iter()).filter_map(Expr::max_var).max();
        if let Some(m) = max_var {
            if m >= dim {
                return Err(Error::dim(format!("coefficient uses variable x{} in R^{dim}", m + 1)));
            }
        }
        Ok(op)
    }

    /// The Laplacian on `R^n`.
    pub fn laplacian(n: usize) -> Self {
        let a = (0..n)
            .map(|i| (0..n).map(|j| if i == j { Expr::one() } else { Expr::zero() }).collect())
            .collect();
        Operator::new(a, vec![Expr::zero(); n], None).expect("identity matrix is valid")
    }

    /// `Σ_j X_j^2 + X_0` written in divergence form.
    pub fn sum_of_squares(fields: &[VectorField], drift: Option<&VectorField>, time: Option<usize>) -> Result<Self> {
        let n = fields
            .first()
            .map(VectorField::dim)
            .or(drift.map(VectorField::dim))
            .ok_or_else(|| Error::invalid("no fields"))?;
        if fields.iter().chain(drift).any(|f| f.dim() != n) {
            return Err(Error::dim("fields of different dimensions"));
        }
        let a: Vec<Vec<Expr>> = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| Expr::sum(fields.iter().map(|f| f.coeffs[i].clone() * f.coeffs[j].clone())).simplify())
                    .collect()
            })
            .collect();
        // Σ X_j X_j u = Σ a_ik ∂_ik u + Σ_j (X_j c_j^k) ∂_k u, while
        // div(A∇u) = Σ a_ik ∂_ik u + Σ_i (∂_i a_ik) ∂_k u.
        let b = (0..n)
            .map(|k| {
                let from_fields = Expr::sum(fields.iter().map(|f| f.apply(&f.coeffs[k])));
                let from_div = Expr::sum((0..n).map(|i| a[i][k].diff(i)));
                let d = drift.map_or(Expr::zero(), |d| d.coeffs[k].clone());
                (from_fields - from_div + d).simplify()
            })
            .collect();
        Operator::new(a, b, time)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn a(&self) -> &[Vec<Expr>] {
        &self.a
    }

    pub fn b(&self) -> &[Expr] {
        &self.b
    }

    pub fn time(&self) -> Option<usize> {
        self.time
    }

    /// Adds `eps` to every diagonal entry of `A` (elliptic regularization).
    pub fn regularized(&self, eps: f64) -> Operator {
        if eps == 0.0 {
            return self.clone();
        }
        let mut out = self.clone();
        for i in 0..self.dim {
            out.a[i][i] = (out.a[i][i].clone() + Expr::Float(eps)).simplify();
        }
        out
    }

    /// Multiplies every coefficient by a constant.
    pub fn scaled(&self, c: &Expr) -> Operator {
        let mut out = self.clone();
        for row in &mut out.a {
            for e in row.iter_mut() {
                *e = (c.clone() * e.clone()).simplify();
            }
        }
        for e in &mut out.b {
            *e = (c.clone() * e.clone()).simplify();
        }
        out
    }

    fn check_vars(&self, u: &Expr, what: &str) -> Result<()> {
        match u.max_var() {
            Some(m) if m >= self.dim => {
                Err(Error::dim(format!("{what} uses x{} but the operator acts on R^{}", m + 1, self.dim)))
            }
            _ => Ok(()),
        }
    }

    /// Drift including the `-∂_t` term.
    pub fn full_drift(&self) -> Vec<Expr> {
        let mut b = self.b.clone();
        if let Some(t) = self.time {
            b[t] = (b[t].clone() - Expr::one()).simplify();
        }
        b
    }

    /// First-order coefficients of the non-divergence form
    /// `Σ a_ij ∂_ij + Σ_j (b_j + Σ_i ∂_i a_ij) ∂_j [- ∂_t]`.
    pub fn effective_drift(&self) -> Vec<Expr> {
        let b = self.full_drift();
        (0..self.dim)
            .map(|j| (b[j].clone() + Expr::sum((0..self.dim).map(|i| self.a[i][j].diff(i)))).simplify())
            .collect()
    }

    /// `X_j = Σ_k a_kj ∂_k`.
    pub fn column_fields(&self) -> Vec<VectorField> {
        (0..self.dim)
            .map(|j| VectorField::new((0..self.dim).map(|k| self.a[k][j].clone()).collect()))
            .collect()
    }

    /// `X_0 = Σ b_k ∂_k [- ∂_t]`.
    pub fn drift_field(&self) -> VectorField {
        VectorField::new(self.full_drift())
    }

    /// The drift together with the nonzero columns of `A`.
    pub fn hormander_fields(&self) -> Vec<VectorField> {
        let mut v = vec![self.drift_field()];
        v.extend(self.column_fields().into_iter().filter(|f| !f.is_zero()));
        v.retain(|f| !f.is_zero());
        v
    }

    fn gradient(&self, u: &Expr) -> Vec<Expr> {
        (0..self.dim).map(|j| u.diff(j)).collect()
    }

    /// `L u`, simplified.
    pub fn apply(&self, u: &Expr) -> Result<Expr> {
        self.check_vars(u, "test function")?;
        Ok(self.apply_with_params(u))
    }

    /// `L u` where variables beyond `dim` are treated as constant parameters.
    pub fn apply_with_params(&self, u: &Expr) -> Expr {
        let grad = self.gradient(u);
        let b = self.full_drift();
        let second = Expr::sum((0..self.dim).map(|i| {
            let flux = Expr::sum((0..self.dim).map(|j| self.a[i][j].clone() * grad[j].clone()));
            flux.diff(i)
        }));
        let first = Expr::sum(b.iter().zip(&grad).map(|(bj, gj)| bj.clone() * gj.clone()));
        (second + first).simplify()
    }

    /// Formal adjoint `L* φ = div(A∇φ) − <b, ∇φ> − (div b) φ [+ ∂_t φ]`.
    pub fn apply_adjoint(&self, phi: &Expr) -> Result<Expr> {
        self.check_vars(phi, "test function")?;
        let grad = self.gradient(phi);
        let b = self.full_drift();
        let second = Expr::sum((0..self.dim).map(|i| {
            Expr::sum((0..self.dim).map(|j| self.a[i][j].clone() * grad[j].clone())).diff(i)
        }));
        let transport = Expr::sum(b.iter().zip(&grad).map(|(bj, gj)| bj.clone() * gj.clone()));
        let div_b = Expr::sum(b.iter().enumerate().map(|(j, bj)| bj.diff(j)));
        Ok((second - transport - div_b * phi.clone()).simplify())
    }

    /// `<A∇u, ∇u>`.
    pub fn a_gradient_sq(&self, u: &Expr) -> Result<Expr> {
        self.check_vars(u, "test function")?;
        let grad = self.gradient(u);
        let mut terms = Vec::new();
        for i in 0..self.dim {
            for j in 0..self.dim {
                terms.push(self.a[i][j].clone() * grad[i].clone() * grad[j].clone());
            }
        }
        Ok(Expr::sum(terms).simplify())
    }

    /// `L(F∘u) − [F'(u) Lu + F''(u) <A∇u, ∇u>]` for a univariate `F` written in `x1`.
    pub fn chain_rule_residual(&self, f: &Expr, u: &Expr) -> Result<Expr> {
        if f.max_var().is_some_and(|m| m > 0) {
            return Err(Error::invalid("F must be univariate in x1"));
        }
        let compose = |g: &Expr| g.subst(std::slice::from_ref(u));
        let f1 = f.diff(0);
        let f2 = f1.diff(0);
        let lhs = self.apply(&compose(f))?;
        let rhs = compose(&f1) * self.apply(u)? + compose(&f2) * self.a_gradient_sq(u)?;
        Ok((lhs - rhs).simplify())
    }

    /// Evaluates `A(x)` numerically.
    pub fn a_at(&self, x: &[f64]) -> DMatrix<f64> {
        DMatrix::from_fn(self.dim, self.dim, |i, j| self.a[i][j].eval(x))
    }

    /// Sampled PSD test of `A(x)` and the `trace A(0) > 0` condition.
    pub fn check_psd(&self, points: &[Vec<f64>]) -> PsdReport {
        let mut min_eig = f64::INFINITY;
        for p in points {
            let eig = SymmetricEigen::new(self.a_at(p)).eigenvalues;
            min_eig = min_eig.min(eig.iter().cloned().fold(f64::INFINITY, f64::min));
        }
        let trace = self.a_at(&vec![0.0; self.dim]).trace();
        PsdReport {
            points: points.len(),
            min_eigenvalue: min_eig,
            passed: min_eig >= PSD_TOL,
            trace_at_origin: trace,
            trace_positive: trace > 0.0,
        }
    }

    /// Applies `L` to a numerical function by central finite differences
    /// with step `h` (second order accurate).
    pub fn apply_numeric(&self, u: &dyn Fn(&[f64]) -> f64, x: &[f64], h: f64) -> f64 {
        let n = self.dim;
        let drift = self.effective_drift();
        let mut y = x.to_vec();
        let u0 = u(x);
        let mut total = 0.0;
        for i in 0..n {
            y[i] = x[i] + h;
            let up = u(&y);
            y[i] = x[i] - h;
            let um = u(&y);
            y[i] = x[i];
            let aii = self.a[i][i].eval(x);
            total += aii * (up - 2.0 * u0 + um) / (h * h);
            total += drift[i].eval(x) * (up - um) / (2.0 * h);
            for j in (i + 1)..n {
                let aij = self.a[i][j].eval(x);
                if aij == 0.0 {
                    continue;
                }
                let mut mixed = 0.0;
                for (si, sj, sign) in [(1.0, 1.0, 1.0), (-1.0, -1.0, 1.0), (1.0, -1.0, -1.0), (-1.0, 1.0, -1.0)] {
                    y[i] = x[i] + si * h;
                    y[j] = x[j] + sj * h;
                    mixed += sign * u(&y);
                }
                y[i] = x[i];
                y[j] = x[j];
                total += 2.0 * aij * mixed / (4.0 * h * h);
            }
        }
        total
    }
}

/// The Heisenberg fields `X = ∂1 − (x2/2) ∂3`, `Y = ∂2 + (x1/2) ∂3`.
pub fn heisenberg_fields() -> [VectorField; 2] {
    let half = Expr::rational(1, 2);
    [
        VectorField::new(vec![Expr::one(), Expr::zero(), -(half.clone() * Expr::var(1))]),
        VectorField::new(vec![Expr::zero(), Expr::one(), half * Expr::var(0)]),
    ]
}

/// The Heisenberg sub-Laplacian `X^2 + Y^2` on `R^3`.
pub fn heisenberg_sublaplacian() -> Operator {
    Operator::sum_of_squares(&heisenberg_fields(), None, None).expect("Heisenberg fields are consistent")
}
