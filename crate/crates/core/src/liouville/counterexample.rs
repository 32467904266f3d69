//! The sharpness counterexample `u = −Γ∗f` and its `L^p` tail over dyadic
//! annuli `M^k ≤ ‖x‖ < M^{k+1}`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::expr::to_f64;
use crate::quad::{gauss_legendre, sphere_area, sphere_rule};

use super::{convolve_with, Bump, ConvolutionRule, FundamentalSolution, Kernel};

/// Ratio at or above which the tail is declared divergent.
pub const DIVERGENT_AT: f64 = 0.95;
/// Ratio at or below which the tail is declared convergent.
pub const CONVERGENT_AT: f64 = 0.9;
/// Relative tolerance of the finite-difference check `L u = f`.
pub const LU_RTOL: f64 = 1e-2;

/// Annulus sampling parameters.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct AnnulusConfig {
    /// Number of annuli `K`.
    pub annuli: usize,
    /// Ratio `M` between consecutive radii.
    pub ratio: f64,
    /// Monte Carlo samples per annulus.
    pub samples: usize,
    pub seed: u64,
}

impl Default for AnnulusConfig {
    fn default() -> Self {
        AnnulusConfig { annuli: 8, ratio: 2.0, samples: 100_000, seed: 1 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Divergent,
    Convergent,
    Inconclusive,
}

impl Verdict {
    pub fn from_ratio(r: f64) -> Self {
        if r >= DIVERGENT_AT {
            Verdict::Divergent
        } else if r <= CONVERGENT_AT {
            Verdict::Convergent
        } else {
            Verdict::Inconclusive
        }
    }
}

/// `L u` against `f` at one point.
#[derive(Clone, Debug, Serialize)]
pub struct LuPoint {
    pub x: Vec<f64>,
    pub lu: f64,
    pub f: f64,
}

/// Sign checks: `u ≤ 0` at every sampled point and `L u = f ≥ 0`.
#[derive(Clone, Debug, Serialize)]
pub struct SignCheck {
    pub sampled_points: usize,
    pub max_u: f64,
    pub u_nonpositive: bool,
    pub lu_points: Vec<LuPoint>,
    /// Largest `|L u − f| / max f`.
    pub lu_defect: f64,
    pub lu_passed: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct CounterexampleReport {
    pub kernel: Kernel,
    #[serde(rename = "Q")]
    pub q: f64,
    pub p: f64,
    pub p_star: f64,
    /// `S_k = ∫_{annulus k} |u|^p`.
    pub annuli: Vec<f64>,
    pub measured_ratio: f64,
    pub theoretical_ratio: f64,
    pub verdict: Verdict,
    pub seed: u64,
    pub samples_per_annulus: usize,
    #[serde(rename = "M")]
    pub ratio_m: f64,
    pub signs: SignCheck,
}

/// `M^{Q + p(2 − Q)}`, the asymptotic ratio of consecutive annulus sums.
pub fn theoretical_ratio(q: f64, p: f64, m: f64) -> f64 {
    m.powf(q + p * (2.0 - q))
}

/// Fixed product rule for `Γ∗f` at points away from the support: nodes `y_j`
/// with weights `w_j f(y_j)`.
struct FarField {
    kernel: Kernel,
    c: f64,
    nodes: Vec<(Vec<f64>, f64)>,
}

impl FarField {
    fn new(gamma: &FundamentalSolution, f: &Bump) -> Self {
        let n = gamma.dim();
        let mut nodes = Vec::new();
        for (t, w) in gauss_legendre(6) {
            let rho = 0.5 * f.radius * (1.0 + t);
            let wr = 0.5 * f.radius * w * rho.powi(n as i32 - 1);
            for (omega, wo) in sphere_rule(n, 6) {
                let y: Vec<f64> = omega.iter().map(|v| rho * v).collect();
                let weight = wr * wo * f.eval(&y);
                nodes.push((y, weight));
            }
        }
        FarField { kernel: gamma.kernel(), c: gamma.constant(), nodes }
    }

    fn u(&self, x: &[f64], buf: &mut [f64]) -> f64 {
        let mut s = 0.0;
        for (y, w) in &self.nodes {
            self.kernel.conv_arg(y, x, buf);
            s += w * self.kernel.unit(buf);
        }
        -self.c * s
    }
}

struct AnnulusSamples {
    /// Per annulus: `(|u|, r^Q w(θ))` pairs.
    values: Vec<Vec<(f64, f64)>>,
    max_u: f64,
}

fn sample_annuli(gamma: &FundamentalSolution, f: &Bump, cfg: &AnnulusConfig) -> AnnulusSamples {
    let far = FarField::new(gamma, f);
    let d = gamma.dilation();
    let n = gamma.dim();
    let q = to_f64(gamma.q());
    let values: Vec<Vec<(f64, f64)>> = (0..cfg.annuli)
        .into_par_iter()
        .map(|k| {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            rng.set_stream(k as u64);
            let mut buf = vec![0.0; n];
            (0..cfg.samples)
                .map(|_| {
                    let mut theta: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();
                    let norm = theta.iter().map(|v| v * v).sum::<f64>().sqrt();
                    theta.iter_mut().for_each(|v| *v /= norm);
                    let t: f64 = rng.random();
                    let r = cfg.ratio.powf(k as f64 + t) / d.homogeneous_norm(&theta);
                    let x = d.apply_unchecked(r, &theta);
                    let u = far.u(&x, &mut buf);
                    (u, r.powf(q) * d.polar_weight(&theta))
                })
                .collect()
        })
        .collect();
    let max_u = values.iter().flatten().map(|v| v.0).fold(f64::NEG_INFINITY, f64::max);
    let values = values.into_iter().map(|v| v.into_iter().map(|(u, w)| (u.abs(), w)).collect()).collect();
    AnnulusSamples { values, max_u }
}

fn lu_check(gamma: &FundamentalSolution, f: &Bump) -> SignCheck {
    let n = gamma.dim();
    let r = f.radius;
    let h = 0.1 * r;
    let rule = ConvolutionRule { m: 24, nr: 12 };
    let template: [&[f64]; 4] = [&[0.0, 0.0, 0.0], &[0.3, -0.2, 0.1], &[1.3, 0.4, 0.2], &[2.0, 1.0, 2.0]];
    let fe = |y: &[f64]| f.eval(y);
    let u = |x: &[f64]| -convolve_with(gamma, &fe, r, x, rule);
    let mut points = Vec::new();
    let mut defect: f64 = 0.0;
    for t in template {
        let x: Vec<f64> = (0..n).map(|i| r * t.get(i).copied().unwrap_or(0.0)).collect();
        // Richardson extrapolation of the second-order difference quotient
        let coarse = gamma.operator().apply_numeric(&u, &x, h);
        let fine = gamma.operator().apply_numeric(&u, &x, 0.5 * h);
        let lu = (4.0 * fine - coarse) / 3.0;
        let fx = f.eval(&x);
        defect = defect.max((lu - fx).abs() / f.scale);
        points.push(LuPoint { x, lu, f: fx });
    }
    SignCheck {
        sampled_points: 0,
        max_u: f64::NEG_INFINITY,
        u_nonpositive: true,
        lu_points: points,
        lu_defect: defect,
        lu_passed: defect <= LU_RTOL,
    }
}

fn validate(f: &Bump, ps: &[f64], cfg: &AnnulusConfig, n: usize) -> Result<()> {
    if f.dim != n {
        return Err(Error::dim("bump and kernel dimensions differ"));
    }
    if !(f.scale > 0.0 && f.radius > 0.0) {
        return Err(Error::invalid("the source must be a nonnegative, nonzero bump"));
    }
    if let Some(p) = ps.iter().find(|p| !(**p >= 1.0)) {
        return Err(Error::invalid(format!("exponent p = {p} must be at least 1")));
    }
    if !(cfg.ratio > 1.0) || cfg.annuli < 4 || cfg.samples == 0 {
        return Err(Error::invalid("need M > 1, at least 4 annuli and a positive sample count"));
    }
    Ok(())
}

/// Annulus sums, fitted ratio and verdict for each exponent in `ps`, sharing
/// one set of samples.
pub fn counterexample_scan(
    gamma: &FundamentalSolution,
    f: &Bump,
    ps: &[f64],
    cfg: &AnnulusConfig,
) -> Result<Vec<CounterexampleReport>> {
    validate(f, ps, cfg, gamma.dim())?;
    let samples = sample_annuli(gamma, f, cfg);
    let mut signs = lu_check(gamma, f);
    signs.sampled_points = cfg.annuli * cfg.samples;
    signs.max_u = samples.max_u;
    signs.u_nonpositive = samples.max_u <= 0.0;
    let q = to_f64(gamma.q());
    let area = sphere_area(gamma.dim());
    let half = cfg.annuli / 2;
    Ok(ps
        .iter()
        .map(|&p| {
            let sums: Vec<f64> = samples
                .values
                .iter()
                .map(|vals| {
                    let mean = vals.iter().map(|(u, w)| u.powf(p) * w).sum::<f64>() / vals.len() as f64;
                    area * cfg.ratio.ln() * mean
                })
                .collect();
            let first = cfg.annuli - half;
            let ratio = (sums[cfg.annuli - 1] / sums[first]).powf(1.0 / (half - 1) as f64);
            CounterexampleReport {
                kernel: gamma.kernel(),
                q,
                p,
                p_star: to_f64(&gamma.p_star()),
                annuli: sums,
                measured_ratio: ratio,
                theoretical_ratio: theoretical_ratio(q, p, cfg.ratio),
                verdict: Verdict::from_ratio(ratio),
                seed: cfg.seed,
                samples_per_annulus: cfg.samples,
                ratio_m: cfg.ratio,
                signs: signs.clone(),
            }
        })
        .collect())
}

/// [`counterexample_scan`] for a single exponent.
pub fn counterexample(gamma: &FundamentalSolution, f: &Bump, p: f64, cfg: &AnnulusConfig) -> Result<CounterexampleReport> {
    Ok(counterexample_scan(gamma, f, &[p], cfg)?.remove(0))
}
