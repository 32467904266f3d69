//! Convex and concave compositions `F` used to turn solutions into
//! subsolutions, and the semilinear chain-rule identity.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::expr::{Compiled, Expr};
use crate::fields::Operator;
use crate::quad::{adaptive, gauss_legendre, integrate_fixed};

#[derive(Clone, Debug)]
pub enum Gadget {
    /// `(√(1+t²) − 1)^p`, `p ≥ 1`.
    Thm1 { p: f64 },
    /// `(1+t)^p − 1` on `t ≥ 0`, `0 < p < 1`.
    Thm2 { p: f64 },
    /// `0` for `t ≤ 0`, `((1+t⁴)^{1/4} − 1)^p` for `t > 0`, `p ≥ 1`.
    Thm3 { p: f64 },
    /// `∫₀ᵗ f(s) ds` for `f` written in `x1`.
    Thm5 { f: Expr },
}

impl Gadget {
    pub fn name(&self) -> &'static str {
        match self {
            Gadget::Thm1 { .. } => "thm1",
            Gadget::Thm2 { .. } => "thm2",
            Gadget::Thm3 { .. } => "thm3",
            Gadget::Thm5 { .. } => "thm5",
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Gadget::Thm1 { p } | Gadget::Thm3 { p } if !(*p >= 1.0) => {
                Err(Error::invalid(format!("{} needs p >= 1, got {p}", self.name())))
            }
            Gadget::Thm2 { p } if !(*p > 0.0 && *p < 1.0) => {
                Err(Error::invalid(format!("thm2 needs 0 < p < 1, got {p}")))
            }
            Gadget::Thm5 { f } if f.max_var().is_some_and(|m| m > 0) => {
                Err(Error::invalid("thm5 needs f univariate in x1"))
            }
            _ => Ok(()),
        }
    }
}

/// `g^p` with derivatives, from `g, g', g''` and `g > 0`.
fn power_of(g: f64, g1: f64, g2: f64, p: f64) -> (f64, f64, f64) {
    let f = g.powf(p);
    let f1 = p * g.powf(p - 1.0) * g1;
    let f2 = p * (p - 1.0) * g.powf(p - 2.0) * g1 * g1 + p * g.powf(p - 1.0) * g2;
    (f, f1, f2)
}

/// A gadget with its expressions compiled once.
struct Prepared<'a> {
    g: &'a Gadget,
    thm5: Option<(Compiled, Compiled)>,
}

impl<'a> Prepared<'a> {
    fn new(g: &'a Gadget) -> Result<Self> {
        g.validate()?;
        let thm5 = match g {
            Gadget::Thm5 { f } => Some((f.compile(), f.diff(0).simplify().compile())),
            _ => None,
        };
        Ok(Prepared { g, thm5 })
    }

    fn eval(&self, t: f64) -> Result<(f64, f64, f64)> {
        match self.g {
            Gadget::Thm1 { p } => {
                if t == 0.0 {
                    return Ok((0.0, 0.0, if *p == 1.0 { 1.0 } else { 0.0 }));
                }
                let q = (1.0 + t * t).sqrt();
                let base = t * t / (q + 1.0);
                Ok(power_of(base, t / q, 1.0 / (q * q * q), *p))
            }
            Gadget::Thm2 { p } => {
                if t < 0.0 {
                    return Err(Error::invalid(format!("thm2 is defined for t >= 0, got {t}")));
                }
                let b = 1.0 + t;
                Ok((b.powf(*p) - 1.0, p * b.powf(p - 1.0), p * (p - 1.0) * b.powf(p - 2.0)))
            }
            Gadget::Thm3 { p } => {
                if t <= 0.0 {
                    return Ok((0.0, 0.0, 0.0));
                }
                let a = 1.0 + t.powi(4);
                let r = a.powf(0.25);
                let base = t.powi(4) / ((r * r + 1.0) * (r + 1.0));
                let g1 = t.powi(3) * a.powf(-0.75);
                let g2 = 3.0 * t * t * a.powf(-1.75);
                Ok(power_of(base, g1, g2, *p))
            }
            Gadget::Thm5 { .. } => {
                let (c, d) = self.thm5.as_ref().expect("compiled on construction");
                let mut f = |s: f64| c.eval(&[s]);
                let rough = integrate_fixed(&mut f, 0.0, t, &gauss_legendre(20));
                let (big, _) = adaptive(&mut f, 0.0, t, 1e-12 * (1.0 + rough.abs()), 30);
                Ok((big, c.eval(&[t]), d.eval(&[t])))
            }
        }
    }
}

/// `(F(t), F'(t), F''(t))` in closed form (quadrature for `F` in `thm5`).
pub fn gadget_eval(g: &Gadget, t: f64) -> Result<(f64, f64, f64)> {
    Prepared::new(g)?.eval(t)
}

#[derive(Clone, Debug, Serialize)]
pub struct GadgetReport {
    pub variant: &'static str,
    pub points: usize,
    pub lo: f64,
    pub hi: f64,
    /// Description and outcome of each invariant.
    pub checks: Vec<(String, bool)>,
    pub passed: bool,
}

/// Jump of the centered second difference across `t = 0`.
fn fd_second_jump(g: &Prepared) -> Result<f64> {
    let h = 1e-3;
    let f = |t: f64| g.eval(t).map(|v| v.0);
    let at = |t: f64| -> Result<f64> { Ok((f(t + h)? - 2.0 * f(t)? + f(t - h)?) / (h * h)) };
    Ok((at(2.0 * h)? - at(-2.0 * h)?).abs())
}

/// Checks the inequality and convexity invariants of `g` on `points`
/// equally spaced nodes of `[−50, 50]` (`[0, 50]` for `thm2`).
pub fn gadget_invariants(g: &Gadget, points: usize) -> Result<GadgetReport> {
    let prepared = Prepared::new(g)?;
    let (lo, hi) = if matches!(g, Gadget::Thm2 { .. }) { (0.0, 50.0) } else { (-50.0, 50.0) };
    let grid: Vec<f64> = (0..points).map(|k| lo + (hi - lo) * k as f64 / (points - 1) as f64).collect();
    let vals: Vec<(f64, f64, f64, f64)> = grid
        .iter()
        .map(|&t| prepared.eval(t).map(|(a, b, c)| (t, a, b, c)))
        .collect::<Result<_>>()?;
    let rel = |x: f64| 1e-12 * (1.0 + x.abs());
    let mut checks = Vec::new();
    match g {
        Gadget::Thm1 { p } => {
            checks.push((
                "0 <= F(t) <= |t|^p".into(),
                vals.iter().all(|&(t, f, _, _)| f >= 0.0 && f <= t.abs().powf(*p) + rel(f)),
            ));
            checks.push(("F''(t) > 0 for t != 0".into(), vals.iter().all(|&(t, _, _, f2)| t == 0.0 || f2 > 0.0)));
        }
        Gadget::Thm2 { p } => {
            checks.push((
                "0 <= F(t) <= t^p".into(),
                vals.iter().all(|&(t, f, _, _)| f >= 0.0 && f <= t.powf(*p) + rel(f)),
            ));
            checks.push(("F''(t) < 0 for t >= 0".into(), vals.iter().all(|&(_, _, _, f2)| f2 < 0.0)));
        }
        Gadget::Thm3 { .. } => {
            let jump = fd_second_jump(&prepared)?;
            checks.push((format!("C2 at 0: second-difference jump {jump:.2e} < 1e-4"), jump < 1e-4));
            checks.push((
                "nondecreasing".into(),
                vals.windows(2).all(|w| w[1].1 >= w[0].1) && vals.iter().all(|v| v.2 >= 0.0),
            ));
            checks.push((
                "convex, F''(t) > 0 for t > 0".into(),
                vals.iter().all(|&(t, _, _, f2)| f2 >= 0.0 && (t <= 0.0 || f2 > 0.0)),
            ));
        }
        Gadget::Thm5 { f } => {
            let c: Compiled = f.compile();
            let increasing = grid.windows(2).all(|w| c.eval(&[w[1]]) >= c.eval(&[w[0]]));
            checks.push(("F(0) = 0".into(), prepared.eval(0.0)?.0 == 0.0));
            if increasing {
                checks.push(("f increasing => F convex".into(), vals.iter().all(|v| v.3 >= -rel(v.3))));
            }
        }
    }
    let passed = checks.iter().all(|c| c.1);
    Ok(GadgetReport { variant: g.name(), points, lo, hi, checks, passed })
}

/// `L(F(u)) − [F'(u)² + F''(u) <A∇u, ∇u>]` for `F` written in `x1`. Zero
/// when `u` solves `L u = F'(u)`.
pub fn semilinear_residual(l: &Operator, big_f: &Expr, u: &Expr) -> Result<Expr> {
    if big_f.max_var().is_some_and(|m| m > 0) {
        return Err(Error::invalid("F must be univariate in x1"));
    }
    let compose = |g: &Expr| g.subst(std::slice::from_ref(u));
    let f1 = big_f.diff(0);
    let f2 = f1.diff(0);
    let lhs = l.apply(&compose(big_f))?;
    let rhs = compose(&f1).powi(2) + compose(&f2) * l.a_gradient_sq(u)?;
    Ok((lhs - rhs).simplify())
}
