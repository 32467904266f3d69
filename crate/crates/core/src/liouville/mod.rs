//! Fundamental solutions, group convolution, the sharp-exponent
//! counterexample, the group mollifier and the composition gadgets.

mod convolution;
mod counterexample;
mod gadgets;
mod mollifier;

pub use convolution::{convolve, convolve_expr, convolve_with, cutoff, Bump, ConvolutionRule};
pub use counterexample::{
    counterexample, counterexample_scan, theoretical_ratio, AnnulusConfig, CounterexampleReport, SignCheck, Verdict,
};
pub use gadgets::{gadget_eval, gadget_invariants, semilinear_residual, Gadget, GadgetReport};
pub use mollifier::Mollifier;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use crate::dilation::{sharp_exponent, Dilation};
use crate::error::{Error, Result};
use crate::expr::{Expr, Rational};
use crate::fields::{heisenberg_sublaplacian, Operator};
use crate::group::GroupLaw;
use crate::quad::{gauss_legendre, sphere_rule};

/// Radius of the excised ball around the singularity.
pub const EXCISION: f64 = 1e-3;
/// Relative tolerance of the calibration and convolution quadratures.
pub const QUAD_RTOL: f64 = 1e-4;

/// The built-in kernels.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Kernel {
    /// `|x|^{2−n}` for the Laplacian on `R^n`, `n ≥ 3`.
    Euclidean { n: usize },
    /// `ρ^{−2}` with `ρ^4 = (x1² + x2²)² + 16 x3²` for the Heisenberg sub-Laplacian.
    Heisenberg,
}

/// `Γ = c·Γ_unit` together with the structure it is attached to.
#[derive(Clone, Debug)]
pub struct FundamentalSolution {
    kernel: Kernel,
    c: f64,
    operator: Operator,
    group: GroupLaw,
    dilation: Dilation,
}

impl FundamentalSolution {
    /// Builds the kernel with an explicit constant (no calibration).
    pub fn with_constant(kernel: Kernel, c: f64) -> Result<Self> {
        let (operator, group, dilation) = match kernel {
            Kernel::Euclidean { n } => {
                if n < 3 {
                    return Err(Error::invalid(format!("Euclidean kernel needs n >= 3, got {n}")));
                }
                (Operator::laplacian(n), GroupLaw::euclidean(n), Dilation::isotropic(n))
            }
            Kernel::Heisenberg => {
                (heisenberg_sublaplacian(), GroupLaw::heisenberg(), Dilation::from_integers(&[1, 1, 2])?)
            }
        };
        Ok(FundamentalSolution { kernel, c, operator, group, dilation })
    }

    pub fn kernel(&self) -> Kernel {
        self.kernel
    }

    pub fn constant(&self) -> f64 {
        self.c
    }

    pub fn operator(&self) -> &Operator {
        &self.operator
    }

    pub fn group(&self) -> &GroupLaw {
        &self.group
    }

    pub fn dilation(&self) -> &Dilation {
        &self.dilation
    }

    pub fn dim(&self) -> usize {
        self.dilation.dim()
    }

    pub fn q(&self) -> &Rational {
        self.dilation.q()
    }

    pub fn p_star(&self) -> Rational {
        sharp_exponent(self.q()).expect("built-in kernels have Q >= 3")
    }

    /// The uncalibrated kernel; `+∞` at the origin.
    pub fn unit(&self, x: &[f64]) -> f64 {
        self.kernel.unit(x)
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.c * self.unit(x)
    }

    /// `Γ_unit` as an expression.
    pub fn unit_expr(&self) -> Expr {
        let sq = |i: usize| Expr::var(i).powi(2);
        match self.kernel {
            Kernel::Euclidean { n } => {
                Expr::sum((0..n).map(sq)).powq(Rational::new((2 - n as i64).into(), 2.into()))
            }
            Kernel::Heisenberg => (((sq(0) + sq(1)).powi(2)) + Expr::int(16) * sq(2)).powq(Rational::new((-1).into(), 2.into())),
        }
    }

    pub(crate) fn right_shift(&self, x: &[f64], z: &[f64], out: &mut [f64]) {
        self.kernel.right_shift(x, z, out)
    }
}

impl Kernel {
    /// The uncalibrated kernel; `+∞` at the origin.
    pub fn unit(&self, x: &[f64]) -> f64 {
        match *self {
            Kernel::Euclidean { n } => {
                let r2: f64 = x.iter().map(|v| v * v).sum();
                r2.powf((2.0 - n as f64) / 2.0)
            }
            Kernel::Heisenberg => {
                let a = x[0] * x[0] + x[1] * x[1];
                1.0 / (a * a + 16.0 * x[2] * x[2]).sqrt()
            }
        }
    }

    /// `y⁻¹∘x`, written without allocation.
    pub(crate) fn conv_arg(&self, y: &[f64], x: &[f64], out: &mut [f64]) {
        for i in 0..out.len() {
            out[i] = x[i] - y[i];
        }
        if *self == Kernel::Heisenberg {
            out[2] += 0.5 * (y[1] * x[0] - y[0] * x[1]);
        }
    }

    /// `x∘z⁻¹`.
    pub(crate) fn right_shift(&self, x: &[f64], z: &[f64], out: &mut [f64]) {
        for i in 0..out.len() {
            out[i] = x[i] - z[i];
        }
        if *self == Kernel::Heisenberg {
            out[2] += 0.5 * (x[1] * z[0] - x[0] * z[1]);
        }
    }
}

/// `Γ` for the Laplacian on `R^n`, calibrated.
pub fn gamma_euclidean(n: usize) -> Result<FundamentalSolution> {
    let mut g = FundamentalSolution::with_constant(Kernel::Euclidean { n }, 1.0)?;
    g.c = calibrate(&|x: &[f64]| g.unit(x), &g.operator, &g.dilation)?;
    Ok(g)
}

/// `Γ` for the Heisenberg sub-Laplacian `X² + Y²`, calibrated.
pub fn gamma_heisenberg() -> Result<FundamentalSolution> {
    let mut g = FundamentalSolution::with_constant(Kernel::Heisenberg, 1.0)?;
    g.c = calibrate(&|x: &[f64]| g.unit(x), &g.operator, &g.dilation)?;
    Ok(g)
}

/// The smooth test function `φ(x) = exp(1 − 1/(1 − |x|²/R²))`, `φ(0) = 1`.
#[derive(Clone, Copy, Debug)]
pub struct TestBump {
    pub radius: f64,
}

impl TestBump {
    fn profile(s: f64) -> (f64, f64, f64) {
        if s >= 1.0 {
            return (0.0, 0.0, 0.0);
        }
        let q = 1.0 - s;
        let b = (1.0 - 1.0 / q).exp();
        (b, -b / (q * q), b * (1.0 / q.powi(4) - 2.0 / q.powi(3)))
    }
}

/// Evaluates `L* φ` for `φ = β(s)`, `s = |x|²/R²`, through
/// `β'(s) (L*s − s L*1) + β''(s) <A∇s, ∇s> + β(s) L*1`.
struct AdjointOfBump {
    radius: f64,
    first: crate::expr::Compiled,
    second: crate::expr::Compiled,
    zeroth: crate::expr::Compiled,
}

impl AdjointOfBump {
    fn new(l: &Operator, bump: TestBump) -> Result<Self> {
        let n = l.dim();
        let s = (Expr::float(1.0 / (bump.radius * bump.radius)) * Expr::sum((0..n).map(|i| Expr::var(i).powi(2))))
            .simplify();
        let l1 = l.apply_adjoint(&Expr::one())?;
        let first = (l.apply_adjoint(&s)? - s.clone() * l1.clone()).simplify();
        let second = l.a_gradient_sq(&s)?;
        Ok(AdjointOfBump {
            radius: bump.radius,
            first: first.compile(),
            second: second.compile(),
            zeroth: l1.compile(),
        })
    }

    fn eval(&self, x: &[f64]) -> f64 {
        let s: f64 = x.iter().map(|v| v * v).sum::<f64>() / (self.radius * self.radius);
        if s >= 1.0 {
            return 0.0;
        }
        let (b, b1, b2) = TestBump::profile(s);
        b1 * self.first.eval(x) + b2 * self.second.eval(x) + b * self.zeroth.eval(x)
    }
}

/// Largest `r` with `δ_r(θ)` inside the Euclidean ball of radius `radius`.
fn ray_exit(d: &Dilation, theta: &[f64], radius: f64) -> f64 {
    let norm2 = |r: f64| -> f64 { d.apply_unchecked(r, theta).iter().map(|v| v * v).sum() };
    let (mut lo, mut hi) = (0.0, 1.0);
    while norm2(hi) < radius * radius {
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if norm2(mid) < radius * radius {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-15 * hi {
            break;
        }
    }
    0.5 * (lo + hi)
}

/// `∫ Γ_unit(x) (L*φ)(x) dx` with the ball `‖x‖ < EXCISION` removed,
/// in dilation-adapted polar coordinates, at a fixed resolution.
fn pairing(unit: &dyn Fn(&[f64]) -> f64, adj: &AdjointOfBump, d: &Dilation, m: usize, nr: usize) -> f64 {
    let rule = gauss_legendre(nr);
    let mut total = 0.0;
    for (theta, w) in sphere_rule(d.dim(), m) {
        let weight = w * unit(&theta) * d.polar_weight(&theta);
        let r1 = ray_exit(d, &theta, adj.radius);
        let r0 = EXCISION / d.homogeneous_norm(&theta);
        if r1 <= r0 {
            continue;
        }
        let (mid, half) = (0.5 * (r0 + r1), 0.5 * (r1 - r0));
        let radial: f64 = rule
            .iter()
            .map(|(t, wt)| {
                let r = mid + half * t;
                wt * r * adj.eval(&d.apply_unchecked(r, &theta))
            })
            .sum::<f64>()
            * half;
        total += weight * radial;
    }
    total
}

/// Runs `f` at increasing resolutions until two successive values agree to
/// [`QUAD_RTOL`].
pub(crate) fn refine(levels: &[(usize, usize)], mut f: impl FnMut(usize, usize) -> f64, what: &str) -> Result<f64> {
    let mut prev = f(levels[0].0, levels[0].1);
    for &(m, nr) in &levels[1..] {
        let next = f(m, nr);
        let scale = next.abs().max(prev.abs());
        if (next - prev).abs() <= QUAD_RTOL * scale || scale == 0.0 {
            return Ok(next);
        }
        prev = next;
    }
    Err(Error::NonConvergence(format!("{what}: quadrature did not reach relative tolerance {QUAD_RTOL}")))
}

const CALIBRATION_LEVELS: [(usize, usize); 4] = [(12, 32), (20, 48), (32, 80), (48, 128)];

/// `c = −φ(0) / ∫ Γ_unit L*φ` for the unit-radius test bump.
pub fn calibrate(unit: &dyn Fn(&[f64]) -> f64, l: &Operator, d: &Dilation) -> Result<f64> {
    calibrate_with(unit, l, d, TestBump { radius: 1.0 })
}

/// [`calibrate`] with a chosen test bump.
pub fn calibrate_with(unit: &dyn Fn(&[f64]) -> f64, l: &Operator, d: &Dilation, bump: TestBump) -> Result<f64> {
    if l.dim() != d.dim() {
        return Err(Error::dim("operator and dilation act on different spaces"));
    }
    let adj = AdjointOfBump::new(l, bump)?;
    let integral = refine(&CALIBRATION_LEVELS, |m, nr| pairing(unit, &adj, d, m, nr), "calibration")?;
    if integral.abs() < 1e-300 || !integral.is_finite() {
        return Err(Error::invalid("zero pairing: the kernel has the wrong homogeneity"));
    }
    Ok(-1.0 / integral)
}

/// `∫ Γ L*φ + φ(0)` for a given bump; zero for an exact fundamental solution.
pub fn pairing_defect(gamma: &FundamentalSolution, bump: TestBump) -> Result<f64> {
    let adj = AdjointOfBump::new(&gamma.operator, bump)?;
    let integral = refine(
        &CALIBRATION_LEVELS,
        |m, nr| pairing(&|x: &[f64]| gamma.unit(x), &adj, &gamma.dilation, m, nr),
        "pairing",
    )?;
    Ok(gamma.c * integral + 1.0)
}

/// Sampled checks of the defining properties of `Γ`.
#[derive(Clone, Debug, Serialize)]
pub struct GammaReport {
    pub kernel: Kernel,
    pub constant: f64,
    #[serde(serialize_with = "crate::report::rational")]
    pub q: Rational,
    pub samples: usize,
    pub min_value: f64,
    pub nonnegative: bool,
    /// Largest relative defect of `Γ(δ_λ x) = λ^{2−Q} Γ(x)`, `λ ∈ {0.5, 2, 7}`.
    pub homogeneity_residual: f64,
    /// Largest `Γ` at `‖x‖ = 10³` divided by `Γ` at `‖x‖ = 1` on the same ray.
    pub decay_ratio: f64,
    /// Largest `|L Γ|` at points with `ρ ∈ [0.5, 2]`.
    pub l_gamma_max: f64,
    pub l_gamma_points: usize,
    pub passed: bool,
}

/// Homogeneity tolerance of [`verify_gamma`].
pub const HOMOGENEITY_TOL: f64 = 1e-12;
/// Bound on `|L Γ|` off the origin.
pub const L_GAMMA_TOL: f64 = 1e-9;

fn random_directions(n: usize, count: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let v: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();
            let norm = v.iter().map(|a| a * a).sum::<f64>().sqrt();
            v.into_iter().map(|a| a / norm).collect()
        })
        .collect()
}

/// Checks `Γ ≥ 0`, homogeneity, decay and `L Γ = 0` off the origin.
pub fn verify_gamma(gamma: &FundamentalSolution, samples: usize, lgamma_points: usize, seed: u64) -> Result<GammaReport> {
    let n = gamma.dim();
    let d = &gamma.dilation;
    let q = crate::expr::to_f64(gamma.q());
    let dirs = random_directions(n, samples, seed);
    let mut min_value = f64::INFINITY;
    let mut homog: f64 = 0.0;
    let mut decay: f64 = 0.0;
    for (k, theta) in dirs.iter().enumerate() {
        let scale = 10f64.powf(2.0 * (k as f64 / samples.max(1) as f64) - 1.0);
        let x = d.apply_unchecked(scale, theta);
        let g = gamma.eval(&x);
        min_value = min_value.min(g);
        for lambda in [0.5, 2.0, 7.0] {
            let lhs = gamma.eval(&d.apply_unchecked(lambda, &x));
            let rhs = lambda.powf(2.0 - q) * g;
            homog = homog.max((lhs - rhs).abs() / rhs.abs());
        }
        let unit = d.apply_unchecked(1.0 / d.homogeneous_norm(theta), theta);
        decay = decay.max(gamma.eval(&d.apply_unchecked(1e3, &unit)) / gamma.eval(&unit));
    }
    let lg = gamma.operator.apply(&gamma.unit_expr())?.compile();
    let mut lmax: f64 = 0.0;
    let rho = |x: &[f64]| gamma.unit(x).powf(-1.0 / (q - 2.0));
    for (k, theta) in random_directions(n, lgamma_points, seed ^ 0x5eed).iter().enumerate() {
        let target = 0.5 + 1.5 * k as f64 / (lgamma_points.max(2) - 1) as f64;
        let x = d.apply_unchecked(target / rho(theta), theta);
        lmax = lmax.max((gamma.c * lg.eval(&x)).abs());
    }
    let passed = min_value >= 0.0 && homog <= HOMOGENEITY_TOL && decay < 1e-3 && lmax < L_GAMMA_TOL;
    Ok(GammaReport {
        kernel: gamma.kernel,
        constant: gamma.c,
        q: gamma.q().clone(),
        samples,
        min_value,
        nonnegative: min_value >= 0.0,
        homogeneity_residual: homog,
        decay_ratio: decay,
        l_gamma_max: lmax,
        l_gamma_points: lgamma_points,
        passed,
    })
}

#[cfg(test)]
mod tests;
