//! A small computer-algebra kernel: expression trees over `x1..xn` (and an
//! optional time variable) with exact rational constants.
//!
//! Every coefficient, drift, group law and test function in the crate is an
//! [`Expr`]. The kernel supports parsing, evaluation, symbolic
//! differentiation, substitution and a normal-form based [`Expr::simplify`].
//! Polynomial identities are decided exactly; identities involving
//! transcendental functions fall back to sampling (see [`zero_check`]).

mod compile;
mod normal;
mod parse;

use std::fmt;
use std::ops;

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

pub use compile::Compiled;
pub use parse::{parse, parse_with, VarNames};

pub(crate) use normal::rational_to_f64;
use normal::Nf;

/// Exact rational number used for constants and exponents.
pub type Rational = num_rational::BigRational;

/// Builds the rational `n/d`.
pub fn rat(n: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}

/// Symbolic expression. Variables are zero-based indices; `Var(0)` prints as `x1`.
#[derive(Clone, Debug, PartialEq)]
pub enum Expr {
    Const(Rational),
    Float(f64),
    Var(usize),
    Add(Vec<Expr>),
    Mul(Vec<Expr>),
    Neg(Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    IntPow(Box<Expr>, i64),
    RealPow(Box<Expr>, Rational),
    Sin(Box<Expr>),
    Cos(Box<Expr>),
    Exp(Box<Expr>),
    Sqrt(Box<Expr>),
}

impl Expr {
    pub fn int(n: i64) -> Expr {
        Expr::Const(Rational::from_integer(BigInt::from(n)))
    }

    pub fn rational(n: i64, d: i64) -> Expr {
        Expr::Const(rat(n, d))
    }

    pub fn zero() -> Expr {
        Expr::int(0)
    }

    pub fn one() -> Expr {
        Expr::int(1)
    }

    pub fn var(i: usize) -> Expr {
        Expr::Var(i)
    }

    pub fn float(f: f64) -> Expr {
        Expr::Float(f)
    }

    pub fn powi(self, k: i64) -> Expr {
        Expr::IntPow(Box::new(self), k)
    }

    pub fn powq(self, q: Rational) -> Expr {
        Expr::RealPow(Box::new(self), q)
    }

    pub fn sin(self) -> Expr {
        Expr::Sin(Box::new(self))
    }

    pub fn cos(self) -> Expr {
        Expr::Cos(Box::new(self))
    }

    pub fn exp(self) -> Expr {
        Expr::Exp(Box::new(self))
    }

    pub fn sqrt(self) -> Expr {
        Expr::Sqrt(Box::new(self))
    }

    /// Sum of a list of expressions (not simplified).
    pub fn sum(items: impl IntoIterator<Item = Expr>) -> Expr {
        let v: Vec<Expr> = items.into_iter().collect();
        match v.len() {
            0 => Expr::zero(),
            1 => v.into_iter().next().unwrap(),
            _ => Expr::Add(v),
        }
    }

    /// Product of a list of expressions (not simplified).
    pub fn product(items: impl IntoIterator<Item = Expr>) -> Expr {
        let v: Vec<Expr> = items.into_iter().collect();
        match v.len() {
            0 => Expr::one(),
            1 => v.into_iter().next().unwrap(),
            _ => Expr::Mul(v),
        }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        match self {
            Expr::Const(r) => rational_to_f64(r),
            Expr::Float(f) => *f,
            Expr::Var(i) => x[*i],
            Expr::Add(v) => v.iter().map(|e| e.eval(x)).sum(),
            Expr::Mul(v) => v.iter().map(|e| e.eval(x)).product(),
            Expr::Neg(a) => -a.eval(x),
            Expr::Div(a, b) => a.eval(x) / b.eval(x),
            Expr::IntPow(a, k) => a.eval(x).powi(*k as i32),
            Expr::RealPow(a, q) => a.eval(x).powf(rational_to_f64(q)),
            Expr::Sin(a) => a.eval(x).sin(),
            Expr::Cos(a) => a.eval(x).cos(),
            Expr::Exp(a) => a.eval(x).exp(),
            Expr::Sqrt(a) => a.eval(x).sqrt(),
        }
    }

    /// Symbolic partial derivative with respect to variable `var`, simplified.
    pub fn diff(&self, var: usize) -> Expr {
        self.diff_raw(var).simplify()
    }

    fn diff_raw(&self, v: usize) -> Expr {
        use Expr::*;
        match self {
            Const(_) | Float(_) => Expr::zero(),
            Var(i) => {
                if *i == v {
                    Expr::one()
                } else {
                    Expr::zero()
                }
            }
            Add(items) => Expr::sum(items.iter().map(|e| e.diff_raw(v))),
            Mul(items) => Expr::sum((0..items.len()).map(|k| {
                Expr::product(
                    items
                        .iter()
                        .enumerate()
                        .map(|(j, e)| if j == k { e.diff_raw(v) } else { e.clone() }),
                )
            })),
            Neg(a) => Neg(Box::new(a.diff_raw(v))),
            Div(a, b) => {
                let num = Expr::sum([
                    Expr::product([a.diff_raw(v), (**b).clone()]),
                    Neg(Box::new(Expr::product([(**a).clone(), b.diff_raw(v)]))),
                ]);
                Div(Box::new(num), Box::new(IntPow(b.clone(), 2)))
            }
            IntPow(a, k) => Expr::product([Expr::int(*k), IntPow(a.clone(), k - 1), a.diff_raw(v)]),
            RealPow(a, q) => Expr::product([
                Const(q.clone()),
                RealPow(a.clone(), q - Rational::one()),
                a.diff_raw(v),
            ]),
            Sin(a) => Expr::product([Cos(a.clone()), a.diff_raw(v)]),
            Cos(a) => Neg(Box::new(Expr::product([Sin(a.clone()), a.diff_raw(v)]))),
            Exp(a) => Expr::product([Exp(a.clone()), a.diff_raw(v)]),
            Sqrt(a) => Div(
                Box::new(a.diff_raw(v)),
                Box::new(Expr::product([Expr::int(2), Sqrt(a.clone())])),
            ),
        }
    }

    /// Flattening, constant folding, like-term collection and the
    /// `sin^2 + cos^2 = 1` rewrite. Idempotent.
    pub fn simplify(&self) -> Expr {
        Nf::from_expr(self).to_expr()
    }

    /// True iff the expression simplifies to the exact constant zero.
    pub fn is_zero(&self) -> bool {
        Nf::from_expr(self).is_zero()
    }

    /// Total degree if the expression normalizes to a polynomial with
    /// rational coefficients.
    pub fn is_polynomial(&self) -> Option<u32> {
        Nf::from_expr(self).polynomial_degree()
    }

    /// True when the normal form contains no floating-point constants, so
    /// that a zero test on it is exact.
    pub fn is_exact(&self) -> bool {
        Nf::from_expr(self).is_exact()
    }

    /// Exact constant value, if the expression simplifies to a rational.
    pub fn as_rational(&self) -> Option<Rational> {
        match Nf::from_expr(self).as_constant()? {
            normal::Coef::Exact(r) => Some(r),
            normal::Coef::Approx(_) => None,
        }
    }

    /// Replaces every `Var(i)` by `map(i)`.
    pub fn map_vars(&self, map: &impl Fn(usize) -> Expr) -> Expr {
        use Expr::*;
        let b = |e: &Expr| Box::new(e.map_vars(map));
        match self {
            Const(_) | Float(_) => self.clone(),
            Var(i) => map(*i),
            Add(v) => Add(v.iter().map(|e| e.map_vars(map)).collect()),
            Mul(v) => Mul(v.iter().map(|e| e.map_vars(map)).collect()),
            Neg(a) => Neg(b(a)),
            Div(x, y) => Div(b(x), b(y)),
            IntPow(a, k) => IntPow(b(a), *k),
            RealPow(a, q) => RealPow(b(a), q.clone()),
            Sin(a) => Sin(b(a)),
            Cos(a) => Cos(b(a)),
            Exp(a) => Exp(b(a)),
            Sqrt(a) => Sqrt(b(a)),
        }
    }

    /// Substitutes `values[i]` for variable `i`. Variables beyond the slice are kept.
    pub fn subst(&self, values: &[Expr]) -> Expr {
        self.map_vars(&|i| values.get(i).cloned().unwrap_or(Expr::Var(i)))
    }

    /// Shifts every variable index by `offset`.
    pub fn shift_vars(&self, offset: usize) -> Expr {
        self.map_vars(&|i| Expr::Var(i + offset))
    }

    /// Largest variable index occurring in the expression.
    pub fn max_var(&self) -> Option<usize> {
        use Expr::*;
        match self {
            Const(_) | Float(_) => None,
            Var(i) => Some(*i),
            Add(v) | Mul(v) => v.iter().filter_map(Expr::max_var).max(),
            Div(a, b) => a.max_var().max(b.max_var()),
            Neg(a) | IntPow(a, _) | RealPow(a, _) | Sin(a) | Cos(a) | Exp(a) | Sqrt(a) => a.max_var(),
        }
    }

    /// Number of variables needed to evaluate the expression.
    pub fn arity(&self) -> usize {
        self.max_var().map_or(0, |m| m + 1)
    }

    pub fn compile(&self) -> Compiled {
        Compiled::new(self)
    }
}

macro_rules! binop {
    ($tr:ident, $method:ident, $build:expr) => {
        impl ops::$tr for Expr {
            type Output = Expr;
            fn $method(self, rhs: Expr) -> Expr {
                $build(self, rhs)
            }
        }
        impl ops::$tr<&Expr> for &Expr {
            type Output = Expr;
            fn $method(self, rhs: &Expr) -> Expr {
                $build(self.clone(), rhs.clone())
            }
        }
    };
}

binop!(Add, add, |a, b| Expr::Add(vec![a, b]));
binop!(Sub, sub, |a, b: Expr| Expr::Add(vec![a, Expr::Neg(Box::new(b))]));
binop!(Mul, mul, |a, b| Expr::Mul(vec![a, b]));
binop!(Div, div, |a, b| Expr::Div(Box::new(a), Box::new(b)));

impl ops::Neg for Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        Expr::Neg(Box::new(self))
    }
}

impl From<i64> for Expr {
    fn from(n: i64) -> Self {
        Expr::int(n)
    }
}

impl From<Rational> for Expr {
    fn from(r: Rational) -> Self {
        Expr::Const(r)
    }
}

// Rendering produces text accepted by `parse` with the default variable names.
impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        render(self, &VarNames::default_for(self.arity()), f)
    }
}

impl Expr {
    /// Renders with explicit variable names.
    pub fn render(&self, names: &VarNames) -> String {
        struct R<'a>(&'a Expr, &'a VarNames);
        impl fmt::Display for R<'_> {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                render(self.0, self.1, f)
            }
        }
        R(self, names).to_string()
    }
}

fn fmt_rational(r: &Rational, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    if r.is_integer() && !r.is_negative() {
        write!(f, "{}", r.numer())
    } else if r.is_integer() {
        write!(f, "({})", r.numer())
    } else {
        write!(f, "({}/{})", r.numer(), r.denom())
    }
}

fn render(e: &Expr, names: &VarNames, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    let wrap = |e: &Expr, f: &mut fmt::Formatter<'_>| -> fmt::Result {
        match e {
            Expr::Const(_) | Expr::Float(_) | Expr::Var(_) | Expr::Sin(_) | Expr::Cos(_) | Expr::Exp(_) | Expr::Sqrt(_) => {
                render(e, names, f)
            }
            _ => {
                write!(f, "(")?;
                render(e, names, f)?;
                write!(f, ")")
            }
        }
    };
    match e {
        Expr::Const(r) => fmt_rational(r, f),
        Expr::Float(x) => {
            if *x < 0.0 {
                write!(f, "({x})")
            } else {
                write!(f, "{x}")
            }
        }
        Expr::Var(i) => write!(f, "{}", names.name(*i)),
        Expr::Add(v) => {
            for (k, t) in v.iter().enumerate() {
                if k > 0 {
                    write!(f, " + ")?;
                }
                wrap(t, f)?;
            }
            if v.is_empty() {
                write!(f, "0")?;
            }
            Ok(())
        }
        Expr::Mul(v) => {
            for (k, t) in v.iter().enumerate() {
                if k > 0 {
                    write!(f, "*")?;
                }
                wrap(t, f)?;
            }
            if v.is_empty() {
                write!(f, "1")?;
            }
            Ok(())
        }
        Expr::Neg(a) => {
            write!(f, "-")?;
            wrap(a, f)
        }
        Expr::Div(a, b) => {
            wrap(a, f)?;
            write!(f, "/")?;
            wrap(b, f)
        }
        Expr::IntPow(a, k) => {
            wrap(a, f)?;
            if *k < 0 {
                write!(f, "^({k})")
            } else {
                write!(f, "^{k}")
            }
        }
        Expr::RealPow(a, q) => {
            wrap(a, f)?;
            write!(f, "^")?;
            fmt_rational(q, f)
        }
        Expr::Sin(a) => fn_call("sin", a, names, f),
        Expr::Cos(a) => fn_call("cos", a, names, f),
        Expr::Exp(a) => fn_call("exp", a, names, f),
        Expr::Sqrt(a) => fn_call("sqrt", a, names, f),
    }
}

fn fn_call(name: &str, a: &Expr, names: &VarNames, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    write!(f, "{name}(")?;
    render(a, names, f)?;
    write!(f, ")")
}

/// How an identity was decided.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Exact,
    Sampled,
}

/// Outcome of testing whether an expression vanishes identically.
#[derive(Clone, Debug, Serialize)]
pub struct ZeroCheck {
    pub method: Method,
    pub residual: f64,
    pub passed: bool,
}

/// Number of random points used to decide non-polynomial identities.
pub const SAMPLE_POINTS: usize = 50;
/// Mixed tolerance for sampled identities.
pub const SAMPLE_TOL: f64 = 1e-9;

/// Decides `e ≡ 0`. Exact when the normal form carries no floating-point
/// data and is a generalized polynomial in its atoms; otherwise `e` is
/// sampled at [`SAMPLE_POINTS`] points of `[-1, 1]^nvars` and compared
/// against `tol` scaled by `1 + |scale|`, where `scale` is the magnitude of
/// the largest term of the normal form at that point.
pub fn zero_check(e: &Expr, nvars: usize, tol: f64, seed: u64) -> ZeroCheck {
    let nf = Nf::from_expr(e);
    if nf.is_zero() {
        return ZeroCheck { method: Method::Exact, residual: 0.0, passed: true };
    }
    if nf.is_exact() && nf.polynomial_degree().is_some() {
        let residual = nf.terms.values().map(|c| c.to_f64().abs()).fold(0.0, f64::max);
        return ZeroCheck { method: Method::Exact, residual, passed: false };
    }
    sampled_zero_check(&nf, nvars, tol, seed)
}

fn sampled_zero_check(nf: &Nf, nvars: usize, tol: f64, seed: u64) -> ZeroCheck {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let terms: Vec<Compiled> = {
        let mut single = Nf::zero();
        nf.terms
            .iter()
            .map(|(m, c)| {
                single.terms.clear();
                single.terms.insert(m.clone(), c.clone());
                single.to_expr().compile()
            })
            .collect()
    };
    let n = nvars.max(nf.to_expr().arity());
    let mut worst: f64 = 0.0;
    let mut passed = true;
    let mut evaluated = 0;
    let mut x = vec![0.0; n];
    for _ in 0..SAMPLE_POINTS * 4 {
        if evaluated == SAMPLE_POINTS {
            break;
        }
        x.iter_mut().for_each(|v| *v = rng.random_range(-1.0..1.0));
        let vals: Vec<f64> = terms.iter().map(|t| t.eval(&x)).collect();
        if vals.iter().any(|v| !v.is_finite()) {
            continue;
        }
        evaluated += 1;
        let total: f64 = vals.iter().sum();
        let scale = vals.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let rel = total.abs() / (1.0 + scale);
        worst = worst.max(total.abs());
        if rel > tol {
            passed = false;
        }
    }
    if evaluated == 0 {
        passed = false;
        worst = f64::NAN;
    }
    ZeroCheck { method: Method::Sampled, residual: worst, passed }
}

/// Decides `a ≡ b` (see [`zero_check`]).
pub fn equivalent(a: &Expr, b: &Expr, nvars: usize) -> bool {
    zero_check(&(a - b), nvars, SAMPLE_TOL, 0x5eed).passed
}

/// Converts a decimal or integer literal exactly into a rational.
pub fn parse_rational(text: &str) -> Option<Rational> {
    let text = text.trim();
    if let Some((n, d)) = text.split_once('/') {
        let n = parse_rational(n)?;
        let d = parse_rational(d)?;
        if d.is_zero() {
            return None;
        }
        return Some(n / d);
    }
    let (neg, body) = match text.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, text),
    };
    let (int, frac) = body.split_once('.').unwrap_or((body, ""));
    if int.is_empty() && frac.is_empty() {
        return None;
    }
    if !int.chars().chain(frac.chars()).all(|c| c.is_ascii_digit()) {
        return None;
    }
    let digits = format!("{int}{frac}");
    let numer: BigInt = if digits.is_empty() { BigInt::zero() } else { digits.parse().ok()? };
    let denom = num_traits::pow(BigInt::from(10), frac.len());
    let r = Rational::new(numer, denom);
    Some(if neg { -r } else { r })
}

/// f64 value of a rational.
pub fn to_f64(r: &Rational) -> f64 {
    rational_to_f64(r)
}
