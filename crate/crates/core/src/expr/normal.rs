//! Normal form used by `simplify`.
//!
//! An expression is represented as a finite sum of `coef * Π base^exponent`
//! where bases are variables, `sin`/`cos`/`exp` of a normal form, or a
//! non-trivial normal form raised to a negative or fractional power.
//! Polynomials land in a canonical representation; transcendental terms are
//! collected but only partially canonicalized (`sin^2 -> 1 - cos^2`,
//! exponentials merged into a single `exp` per monomial).

use std::cmp::Ordering;
use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};

use super::{Expr, Rational};

#[derive(Clone, Debug)]
pub(crate) enum Coef {
    Exact(Rational),
    Approx(f64),
}

impl Coef {
    pub(crate) fn one() -> Self {
        Coef::Exact(Rational::one())
    }

    pub(crate) fn is_zero(&self) -> bool {
        match self {
            Coef::Exact(r) => r.is_zero(),
            Coef::Approx(f) => *f == 0.0,
        }
    }

    fn is_one(&self) -> bool {
        matches!(self, Coef::Exact(r) if r.is_one())
    }

    pub(crate) fn is_exact(&self) -> bool {
        matches!(self, Coef::Exact(_))
    }

    pub(crate) fn to_f64(&self) -> f64 {
        match self {
            Coef::Exact(r) => rational_to_f64(r),
            Coef::Approx(f) => *f,
        }
    }

    fn is_negative(&self) -> bool {
        match self {
            Coef::Exact(r) => r.is_negative(),
            Coef::Approx(f) => *f < 0.0,
        }
    }

    fn add(&self, other: &Coef) -> Coef {
        match (self, other) {
            (Coef::Exact(a), Coef::Exact(b)) => Coef::Exact(a + b),
            _ => Coef::Approx(self.to_f64() + other.to_f64()),
        }
    }

    fn mul(&self, other: &Coef) -> Coef {
        match (self, other) {
            (Coef::Exact(a), Coef::Exact(b)) => Coef::Exact(a * b),
            _ => Coef::Approx(self.to_f64() * other.to_f64()),
        }
    }

    fn recip(&self) -> Coef {
        match self {
            Coef::Exact(a) if !a.is_zero() => Coef::Exact(a.recip()),
            _ => Coef::Approx(1.0 / self.to_f64()),
        }
    }

    fn powi(&self, k: i64) -> Coef {
        match self {
            Coef::Exact(a) if !(a.is_zero() && k < 0) => Coef::Exact(rational_powi(a, k)),
            _ => Coef::Approx(self.to_f64().powi(k as i32)),
        }
    }
}

impl PartialEq for Coef {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Coef {}

impl PartialOrd for Coef {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Coef {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (Coef::Exact(a), Coef::Exact(b)) => a.cmp(b),
            (Coef::Exact(_), Coef::Approx(_)) => Ordering::Less,
            (Coef::Approx(_), Coef::Exact(_)) => Ordering::Greater,
            (Coef::Approx(a), Coef::Approx(b)) => a.total_cmp(b),
        }
    }
}

pub(crate) fn rational_to_f64(r: &Rational) -> f64 {
    match (r.numer().to_f64(), r.denom().to_f64()) {
        (Some(n), Some(d)) if n.is_finite() && d.is_finite() => n / d,
        _ => r.to_f64().unwrap_or(f64::NAN),
    }
}

pub(crate) fn rational_powi(r: &Rational, k: i64) -> Rational {
    let base = if k < 0 { r.recip() } else { r.clone() };
    let mut acc = Rational::one();
    let mut b = base;
    let mut e = k.unsigned_abs();
    while e > 0 {
        if e & 1 == 1 {
            acc *= &b;
        }
        b = &b * &b;
        e >>= 1;
    }
    acc
}

/// Exact `r^q` when the result is rational.
fn rational_root(r: &Rational, q: &Rational) -> Option<Rational> {
    if !r.is_positive() {
        return None;
    }
    let den = q.denom().to_u32()?;
    let num = q.numer().to_i64()?;
    let n = exact_nth_root(r.numer(), den)?;
    let d = exact_nth_root(r.denom(), den)?;
    Some(rational_powi(&Rational::new(n, d), num))
}

fn exact_nth_root(x: &BigInt, n: u32) -> Option<BigInt> {
    let root = x.nth_root(n);
    if num_traits::pow(root.clone(), n as usize) == *x {
        Some(root)
    } else {
        None
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub(crate) enum Base {
    Var(usize),
    Sin(Box<Nf>),
    Cos(Box<Nf>),
    Exp(Box<Nf>),
    Pow(Box<Nf>),
}

pub(crate) type Monomial = BTreeMap<Base, Rational>;

#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord)]
pub(crate) struct Nf {
    pub(crate) terms: BTreeMap<Monomial, Coef>,
}

impl Nf {
    pub(crate) fn zero() -> Self {
        Nf::default()
    }

    pub(crate) fn constant(c: Coef) -> Self {
        let mut nf = Nf::zero();
        nf.add_term(Monomial::new(), c);
        nf
    }

    pub(crate) fn exact(r: Rational) -> Self {
        Nf::constant(Coef::Exact(r))
    }

    fn single(base: Base, e: Rational) -> Self {
        let mut m = Monomial::new();
        m.insert(base, e);
        normalize_monomial(m)
    }

    pub(crate) fn var(i: usize) -> Self {
        Nf::single(Base::Var(i), Rational::one())
    }

    pub(crate) fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// The constant value if this normal form has no variable part.
    pub(crate) fn as_constant(&self) -> Option<Coef> {
        match self.terms.len() {
            0 => Some(Coef::Exact(Rational::zero())),
            1 => {
                let (m, c) = self.terms.iter().next().unwrap();
                m.is_empty().then(|| c.clone())
            }
            _ => None,
        }
    }

    fn add_term(&mut self, m: Monomial, c: Coef) {
        if c.is_zero() {
            return;
        }
        match self.terms.get_mut(&m) {
            Some(existing) => {
                let sum = existing.add(&c);
                if sum.is_zero() {
                    self.terms.remove(&m);
                } else {
                    *existing = sum;
                }
            }
            None => {
                self.terms.insert(m, c);
            }
        }
    }

    fn add_scaled(&mut self, other: &Nf, scale: &Coef) {
        for (m, c) in &other.terms {
            self.add_term(m.clone(), c.mul(scale));
        }
    }

    pub(crate) fn add(&self, other: &Nf) -> Nf {
        let mut out = self.clone();
        out.add_scaled(other, &Coef::one());
        out
    }

    pub(crate) fn neg(&self) -> Nf {
        self.scale(&Coef::Exact(-Rational::one()))
    }

    pub(crate) fn scale(&self, c: &Coef) -> Nf {
        let mut out = Nf::zero();
        out.add_scaled(self, c);
        out
    }

    pub(crate) fn mul(&self, other: &Nf) -> Nf {
        let mut out = Nf::zero();
        for (m1, c1) in &self.terms {
            for (m2, c2) in &other.terms {
                let prod = mul_monomials(m1, m2);
                out.add_scaled(&prod, &c1.mul(c2));
            }
        }
        out
    }

    fn leading_coef(&self) -> Option<&Coef> {
        self.terms.values().next()
    }

    pub(crate) fn pow_int(&self, k: i64) -> Nf {
        if k == 0 {
            return Nf::exact(Rational::one());
        }
        if k > 0 {
            let mut acc = Nf::exact(Rational::one());
            let mut base = self.clone();
            let mut e = k as u64;
            while e > 0 {
                if e & 1 == 1 {
                    acc = acc.mul(&base);
                }
                e >>= 1;
                if e > 0 {
                    base = base.mul(&base);
                }
            }
            return acc;
        }
        if self.is_zero() {
            return Nf::constant(Coef::Approx(f64::INFINITY));
        }
        if self.terms.len() == 1 {
            let (m, c) = self.terms.iter().next().unwrap();
            let kr = Rational::from_integer(BigInt::from(k));
            let scaled: Monomial = m.iter().map(|(b, e)| (b.clone(), e * &kr)).collect();
            return normalize_monomial(scaled).scale(&c.powi(k));
        }
        // content-normalize so that the leading coefficient of the base is 1
        let lead = self.leading_coef().unwrap().clone();
        let unit = self.scale(&lead.recip());
        Nf::single(Base::Pow(Box::new(unit)), Rational::from_integer(BigInt::from(k)))
            .scale(&lead.powi(k))
    }

    pub(crate) fn pow_rat(&self, q: &Rational) -> Nf {
        if q.is_integer() {
            if let Some(k) = q.to_integer().to_i64() {
                return self.pow_int(k);
            }
        }
        if self.is_zero() {
            return if q.is_positive() {
                Nf::zero()
            } else {
                Nf::constant(Coef::Approx(f64::INFINITY))
            };
        }
        if let Some(c) = self.as_constant() {
            match &c {
                Coef::Approx(f) => return Nf::constant(Coef::Approx(f.powf(rational_to_f64(q)))),
                Coef::Exact(r) => {
                    if let Some(root) = rational_root(r, q) {
                        return Nf::exact(root);
                    }
                }
            }
        }
        if self.terms.len() == 1 {
            let (m, c) = self.terms.iter().next().unwrap();
            if c.is_one() && m.len() == 1 {
                let (b, e) = m.iter().next().unwrap();
                if e.is_one() || !e.is_integer() || matches!(b, Base::Exp(_)) {
                    return Nf::single(b.clone(), e * q);
                }
            }
        }
        Nf::single(Base::Pow(Box::new(self.clone())), q.clone())
    }

    pub(crate) fn sin(arg: Nf) -> Nf {
        if arg.is_zero() {
            return Nf::zero();
        }
        if let Some(Coef::Approx(f)) = arg.as_constant() {
            return Nf::constant(Coef::Approx(f.sin()));
        }
        if arg.leading_coef().is_some_and(Coef::is_negative) {
            return Nf::sin(arg.neg()).neg();
        }
        Nf::single(Base::Sin(Box::new(arg)), Rational::one())
    }

    pub(crate) fn cos(arg: Nf) -> Nf {
        if arg.is_zero() {
            return Nf::exact(Rational::one());
        }
        if let Some(Coef::Approx(f)) = arg.as_constant() {
            return Nf::constant(Coef::Approx(f.cos()));
        }
        if arg.leading_coef().is_some_and(Coef::is_negative) {
            return Nf::cos(arg.neg());
        }
        Nf::single(Base::Cos(Box::new(arg)), Rational::one())
    }

    pub(crate) fn exp(arg: Nf) -> Nf {
        if arg.is_zero() {
            return Nf::exact(Rational::one());
        }
        if let Some(Coef::Approx(f)) = arg.as_constant() {
            return Nf::constant(Coef::Approx(f.exp()));
        }
        Nf::single(Base::Exp(Box::new(arg)), Rational::one())
    }

    /// Polynomial total degree when every base is a variable with a
    /// nonnegative integer exponent and every coefficient is exact.
    pub(crate) fn polynomial_degree(&self) -> Option<u32> {
        let mut deg = 0u32;
        for (m, c) in &self.terms {
            if !c.is_exact() {
                return None;
            }
            let mut d = 0u32;
            for (b, e) in m {
                if !matches!(b, Base::Var(_)) || !e.is_integer() || e.is_negative() {
                    return None;
                }
                d += e.to_integer().to_u32()?;
            }
            deg = deg.max(d);
        }
        Some(deg)
    }

    pub(crate) fn is_exact(&self) -> bool {
        self.terms.iter().all(|(m, c)| c.is_exact() && m.keys().all(Base::is_exact))
    }
}

impl Base {
    fn is_exact(&self) -> bool {
        match self {
            Base::Var(_) => true,
            Base::Sin(a) | Base::Cos(a) | Base::Exp(a) | Base::Pow(a) => a.is_exact(),
        }
    }
}

fn mul_monomials(a: &Monomial, b: &Monomial) -> Nf {
    let mut m = a.clone();
    for (base, e) in b {
        let entry = m.entry(base.clone()).or_insert_with(Rational::zero);
        *entry += e;
    }
    normalize_monomial(m)
}

/// Brings a product of powers into normal form, applying the rewrite rules.
fn normalize_monomial(mut m: Monomial) -> Nf {
    m.retain(|_, e| !e.is_zero());

    // merge all exponentials into one
    let exp_keys: Vec<Base> = m.keys().filter(|b| matches!(b, Base::Exp(_))).cloned().collect();
    let needs_merge = exp_keys.len() > 1 || exp_keys.first().is_some_and(|k| !m[k].is_one());
    if needs_merge {
        let mut arg = Nf::zero();
        for k in &exp_keys {
            let e = m.remove(k).unwrap();
            if let Base::Exp(a) = k {
                arg.add_scaled(a, &Coef::Exact(e));
            }
        }
        let rest = normalize_monomial(m);
        return rest.mul(&Nf::exp(arg));
    }

    // sin^k with k >= 2 becomes sin^(k-2) (1 - cos^2)
    let reducible = m.iter().find_map(|(b, e)| match b {
        Base::Sin(arg) if e.is_integer() && *e >= Rational::from_integer(BigInt::from(2)) => {
            Some((b.clone(), (**arg).clone()))
        }
        _ => None,
    });
    if let Some((key, arg)) = reducible {
        *m.get_mut(&key).unwrap() -= Rational::from_integer(BigInt::from(2));
        let reduced = normalize_monomial(m);
        let cos_sq = Nf::cos(arg).pow_int(2);
        return reduced.add(&reduced.mul(&cos_sq).neg());
    }

    // a positive integer power of a compound base is expanded
    let expandable = m.iter().find_map(|(b, e)| match b {
        Base::Pow(inner) if e.is_integer() && e.is_positive() => {
            Some((b.clone(), (**inner).clone(), e.to_integer().to_i64()))
        }
        _ => None,
    });
    if let Some((key, inner, Some(k))) = expandable {
        m.remove(&key);
        return normalize_monomial(m).mul(&inner.pow_int(k));
    }

    let mut nf = Nf::zero();
    nf.terms.insert(m, Coef::one());
    nf
}

impl Nf {
    pub(crate) fn from_expr(e: &Expr) -> Nf {
        match e {
            Expr::Const(r) => Nf::exact(r.clone()),
            Expr::Float(f) => Nf::constant(Coef::Approx(*f)),
            Expr::Var(i) => Nf::var(*i),
            Expr::Add(items) => {
                let mut acc = Nf::zero();
                for it in items {
                    acc.add_scaled(&Nf::from_expr(it), &Coef::one());
                }
                acc
            }
            Expr::Mul(items) => {
                let mut acc = Nf::exact(Rational::one());
                for it in items {
                    acc = acc.mul(&Nf::from_expr(it));
                    if acc.is_zero() {
                        break;
                    }
                }
                acc
            }
            Expr::Neg(a) => Nf::from_expr(a).neg(),
            Expr::Div(a, b) => Nf::from_expr(a).mul(&Nf::from_expr(b).pow_int(-1)),
            Expr::IntPow(a, k) => Nf::from_expr(a).pow_int(*k),
            Expr::RealPow(a, q) => Nf::from_expr(a).pow_rat(q),
            Expr::Sqrt(a) => Nf::from_expr(a).pow_rat(&Rational::new(1.into(), 2.into())),
            Expr::Sin(a) => Nf::sin(Nf::from_expr(a)),
            Expr::Cos(a) => Nf::cos(Nf::from_expr(a)),
            Expr::Exp(a) => Nf::exp(Nf::from_expr(a)),
        }
    }

    pub(crate) fn to_expr(&self) -> Expr {
        let mut terms: Vec<Expr> = self
            .terms
            .iter()
            .map(|(m, c)| {
                let mut factors: Vec<Expr> = m.iter().map(|(b, e)| power_expr(base_expr(b), e)).collect();
                let coef = match c {
                    Coef::Exact(r) => Expr::Const(r.clone()),
                    Coef::Approx(f) => Expr::Float(*f),
                };
                if factors.is_empty() {
                    coef
                } else if c.is_one() {
                    if factors.len() == 1 {
                        factors.pop().unwrap()
                    } else {
                        Expr::Mul(factors)
                    }
                } else {
                    factors.insert(0, coef);
                    Expr::Mul(factors)
                }
            })
            .collect();
        match terms.len() {
            0 => Expr::Const(Rational::zero()),
            1 => terms.pop().unwrap(),
            _ => Expr::Add(terms),
        }
    }
}

fn base_expr(b: &Base) -> Expr {
    match b {
        Base::Var(i) => Expr::Var(*i),
        Base::Sin(a) => Expr::Sin(Box::new(a.to_expr())),
        Base::Cos(a) => Expr::Cos(Box::new(a.to_expr())),
        Base::Exp(a) => Expr::Exp(Box::new(a.to_expr())),
        Base::Pow(a) => a.to_expr(),
    }
}

fn power_expr(base: Expr, e: &Rational) -> Expr {
    if e.is_one() {
        base
    } else if e.is_integer() {
        Expr::IntPow(Box::new(base), e.to_integer().to_i64().unwrap_or(i64::MAX))
    } else {
        Expr::RealPow(Box::new(base), e.clone())
    }
}
