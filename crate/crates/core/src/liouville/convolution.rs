//! `Γ∗f(x) = ∫ Γ(y⁻¹∘x) f(y) dy`, computed as `∫ Γ(z) f(x∘z⁻¹) dz` in
//! dilation-adapted polar coordinates `z = δ_r(θ)`, where the kernel factor
//! is exactly `r^{2−Q} Γ(θ)`. Points well outside the support use plain
//! polar coordinates in `y`, where the integrand is smooth.

use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::quad::{gauss_legendre, sphere_area, sphere_rule};

use super::{refine, FundamentalSolution, Kernel, EXCISION};

/// The source `f(y) = scale·(1 − |y|²/R²)^4` on `|y| < R`, zero outside.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Bump {
    pub dim: usize,
    pub radius: f64,
    pub scale: f64,
}

impl Bump {
    /// Scaled to total mass one.
    pub fn unit_mass(dim: usize, radius: f64) -> Self {
        let radial: f64 = gauss_legendre(12)
            .iter()
            .map(|(t, w)| {
                let s = 0.5 * (1.0 + t);
                0.5 * w * (1.0 - s * s).powi(4) * s.powi(dim as i32 - 1)
            })
            .sum();
        let mass = sphere_area(dim) * radius.powi(dim as i32) * radial;
        Bump { dim, radius, scale: 1.0 / mass }
    }

    pub fn eval(&self, y: &[f64]) -> f64 {
        let s = y.iter().map(|v| v * v).sum::<f64>() / (self.radius * self.radius);
        if s >= 1.0 {
            0.0
        } else {
            self.scale * (1.0 - s).powi(4)
        }
    }

    /// The formula valid inside the support.
    pub fn expr(&self) -> Expr {
        let s = Expr::float(1.0 / (self.radius * self.radius)) * Expr::sum((0..self.dim).map(|i| Expr::var(i).powi(2)));
        (Expr::float(self.scale) * (Expr::one() - s).powi(4)).simplify()
    }
}

/// Smooth cutoff `φ_m`: 1 on `|x| ≤ m`, 0 on `|x| ≥ m + 1`.
pub fn cutoff(m: f64, x: &[f64]) -> f64 {
    let s = x.iter().map(|v| v * v).sum::<f64>().sqrt() - m;
    let g = |t: f64| if t > 0.0 { (-1.0 / t).exp() } else { 0.0 };
    if s <= 0.0 {
        1.0
    } else if s >= 1.0 {
        0.0
    } else {
        g(1.0 - s) / (g(1.0 - s) + g(s))
    }
}

/// Resolution of the polar product rule: `m` polar nodes per sphere angle
/// and `nr` Gauss–Legendre nodes per radial interval.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ConvolutionRule {
    pub m: usize,
    pub nr: usize,
}

const SCAN: usize = 128;
const LEVELS: [(usize, usize); 5] = [(12, 8), (16, 12), (24, 16), (32, 20), (48, 24)];

/// Componentwise bound on `|y⁻¹∘x|` for `|y| ≤ radius`.
fn z_bound(gamma: &FundamentalSolution, x: &[f64], radius: f64) -> Vec<f64> {
    let mut b: Vec<f64> = x.iter().map(|v| v.abs() + radius).collect();
    if gamma.kernel() == Kernel::Heisenberg {
        b[2] += 0.5 * radius * (x[0].abs() + x[1].abs());
    }
    b
}

/// `Γ∗f(x)` at a fixed resolution. `f` must vanish outside the ball of
/// radius `support`.
pub fn convolve_with(
    gamma: &FundamentalSolution,
    f: &dyn Fn(&[f64]) -> f64,
    support: f64,
    x: &[f64],
    rule: ConvolutionRule,
) -> f64 {
    let dist = x.iter().map(|v| v * v).sum::<f64>().sqrt() - support;
    if dist >= support {
        far_field(gamma, f, support, x, rule)
    } else {
        near_field(gamma, f, support, x, rule)
    }
}

fn far_field(
    gamma: &FundamentalSolution,
    f: &dyn Fn(&[f64]) -> f64,
    support: f64,
    x: &[f64],
    rule: ConvolutionRule,
) -> f64 {
    let n = gamma.dim();
    let sphere = sphere_rule(n, rule.m);
    let mut arg = vec![0.0; n];
    let mut y = vec![0.0; n];
    let mut total = 0.0;
    for (t, w) in gauss_legendre(2 * rule.nr) {
        let rho = 0.5 * support * (1.0 + t);
        let wr = 0.5 * support * w * rho.powi(n as i32 - 1);
        for (omega, wo) in &sphere {
            y.iter_mut().zip(omega).for_each(|(yi, o)| *yi = rho * o);
            let fy = f(&y);
            if fy != 0.0 {
                gamma.kernel().conv_arg(&y, x, &mut arg);
                total += wr * wo * fy * gamma.unit(&arg);
            }
        }
    }
    gamma.constant() * total
}

fn near_field(
    gamma: &FundamentalSolution,
    f: &dyn Fn(&[f64]) -> f64,
    support: f64,
    x: &[f64],
    rule: ConvolutionRule,
) -> f64 {
    let n = gamma.dim();
    let d = gamma.dilation();
    let sigma = d.sigma_f64();
    let gl = gauss_legendre(rule.nr);
    let bound = z_bound(gamma, x, support);
    let mut y = vec![0.0; n];
    let inside = |r: f64, theta: &[f64], y: &mut [f64]| -> f64 {
        let z = d.apply_unchecked(r, theta);
        gamma.right_shift(x, &z, y);
        support * support - y.iter().map(|v| v * v).sum::<f64>()
    };
    let mut total = 0.0;
    for (theta, w) in sphere_rule(n, rule.m) {
        let r_max = theta
            .iter()
            .zip(&bound)
            .zip(&sigma)
            .filter(|((t, _), _)| t.abs() > 1e-300)
            .map(|((t, b), s)| (b / t.abs()).powf(1.0 / s))
            .fold(f64::INFINITY, f64::min);
        let r0 = EXCISION / d.homogeneous_norm(&theta);
        if !(r_max > r0) {
            continue;
        }
        let step = (r_max - r0) / SCAN as f64;
        let mut radial = 0.0;
        let mut start: Option<f64> = None;
        let mut prev_r = r0;
        let mut prev_in = inside(r0, &theta, &mut y) > 0.0;
        if prev_in {
            start = Some(r0);
        }
        for k in 1..=SCAN {
            let r = r0 + step * k as f64;
            let now_in = inside(r, &theta, &mut y) > 0.0;
            if now_in != prev_in {
                let (mut lo, mut hi) = (prev_r, r);
                for _ in 0..60 {
                    let mid = 0.5 * (lo + hi);
                    if (inside(mid, &theta, &mut y) > 0.0) == prev_in {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                let edge = 0.5 * (lo + hi);
                if now_in {
                    start = Some(edge);
                } else if let Some(a) = start.take() {
                    radial += segment(a, edge, &gl, &theta, &mut |r, th| {
                        let z = d.apply_unchecked(r, th);
                        gamma.right_shift(x, &z, &mut y);
                        r * f(&y)
                    });
                }
            }
            prev_r = r;
            prev_in = now_in;
        }
        if let Some(a) = start {
            radial += segment(a, r_max, &gl, &theta, &mut |r, th| {
                let z = d.apply_unchecked(r, th);
                gamma.right_shift(x, &z, &mut y);
                r * f(&y)
            });
        }
        total += w * gamma.unit(&theta) * d.polar_weight(&theta) * radial;
    }
    gamma.constant() * total
}

fn segment(a: f64, b: f64, gl: &[(f64, f64)], theta: &[f64], g: &mut dyn FnMut(f64, &[f64]) -> f64) -> f64 {
    let (mid, half) = (0.5 * (a + b), 0.5 * (b - a));
    gl.iter().map(|(t, w)| w * g(mid + half * t, theta)).sum::<f64>() * half
}

/// `Γ∗f(x)`, refined until two resolutions agree to relative `1e-4`.
pub fn convolve(gamma: &FundamentalSolution, f: &dyn Fn(&[f64]) -> f64, support: f64, x: &[f64]) -> Result<f64> {
    if x.len() != gamma.dim() {
        return Err(Error::dim("point and kernel dimensions differ"));
    }
    if !(support > 0.0) {
        return Err(Error::invalid("support radius must be positive"));
    }
    refine(&LEVELS, |m, nr| convolve_with(gamma, f, support, x, ConvolutionRule { m, nr }), "convolution")
}

/// [`convolve`] for a source given as an expression valid on the support ball.
pub fn convolve_expr(gamma: &FundamentalSolution, f: &Expr, support: f64, x: &[f64]) -> Result<f64> {
    let c = f.compile();
    let r2 = support * support;
    convolve(
        gamma,
        &|y: &[f64]| if y.iter().map(|v| v * v).sum::<f64>() < r2 { c.eval(y) } else { 0.0 },
        support,
        x,
    )
}
