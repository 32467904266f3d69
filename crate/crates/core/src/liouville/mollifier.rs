//! The group mollifier `û_ε(x) = ∫ u(y∘x) J_ε(y) dy`.

use crate::error::{Error, Result};
use crate::group::GroupLaw;
use crate::quad::{adaptive, gauss_legendre, sphere_area, sphere_rule};

/// `J_ε(y) = exp(−1/(1 − |y/ε|²)) / Z_ε` on the Euclidean ball of radius `ε`.
#[derive(Clone, Debug)]
pub struct Mollifier {
    dim: usize,
    eps: f64,
    norm: f64,
    nodes: Vec<(Vec<f64>, f64)>,
}

fn profile(s: f64) -> f64 {
    if s >= 1.0 {
        0.0
    } else {
        (-1.0 / (1.0 - s * s)).exp()
    }
}

impl Mollifier {
    pub fn new(dim: usize, eps: f64) -> Result<Self> {
        if dim == 0 || !(eps > 0.0) {
            return Err(Error::invalid("mollifier needs a dimension and ε > 0"));
        }
        let (radial, err) = adaptive(&mut |s: f64| profile(s) * s.powi(dim as i32 - 1), 0.0, 1.0, 1e-15, 30);
        if err > 1e-12 {
            return Err(Error::NonConvergence("mollifier normalization".into()));
        }
        let norm = sphere_area(dim) * eps.powi(dim as i32) * radial;
        let mut nodes = Vec::new();
        for (t, w) in gauss_legendre(40) {
            let s = 0.5 * (1.0 + t);
            let wr = 0.5 * w * s.powi(dim as i32 - 1) * profile(s);
            for (omega, wo) in sphere_rule(dim, 8) {
                nodes.push((omega.iter().map(|v| eps * s * v).collect(), wr * wo));
            }
        }
        let total: f64 = nodes.iter().map(|n| n.1).sum();
        nodes.iter_mut().for_each(|n| n.1 /= total);
        Ok(Mollifier { dim, eps, norm, nodes })
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    /// `J_ε(y)`.
    pub fn density(&self, y: &[f64]) -> f64 {
        let r = y.iter().map(|v| v * v).sum::<f64>().sqrt() / self.eps;
        profile(r) / self.norm
    }

    /// `û_ε(x)`. The discrete weights are renormalized to sum to one, so
    /// constants are reproduced up to round-off.
    pub fn mollify(&self, u: &dyn Fn(&[f64]) -> f64, g: &GroupLaw, x: &[f64]) -> Result<f64> {
        if g.dim() != self.dim || x.len() != self.dim {
            return Err(Error::dim("mollifier, group and point dimensions differ"));
        }
        Ok(self.nodes.iter().map(|(y, w)| w * u(&g.compose(y, x))).sum())
    }
}
