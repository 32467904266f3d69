//! Calibrated fundamental solutions and convolutions with a bump source.
//!
//! ```bash
//! cargo run --release -p hypoliouville --example fundamental_solutions
//! ```

use std::f64::consts::PI;

use hypoliouville::liouville::{convolve, gamma_euclidean, gamma_heisenberg, pairing_defect, verify_gamma, Bump, TestBump};

fn main() -> hypoliouville::Result<()> {
    let e = gamma_euclidean(3)?;
    println!("R^3: c = {:.8} (1/(4 pi) = {:.8})", e.constant(), 1.0 / (4.0 * PI));
    let h = gamma_heisenberg()?;
    println!("Heisenberg: c = {:.8}, pairing defect on a second bump {:.1e}", h.constant(), pairing_defect(&h, TestBump { radius: 1.5 })?);
    let r = verify_gamma(&h, 2000, 20, 1)?;
    println!("  min Gamma {:.3e}, homogeneity {:.1e}, max |L Gamma| {:.1e}", r.min_value, r.homogeneity_residual, r.l_gamma_max);

    let f = Bump::unit_mass(3, 0.5);
    for x in [[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, 2.0], [4.0, 3.0, 0.0]] {
        let v = convolve(&h, &|y: &[f64]| f.eval(y), f.radius, &x)?;
        println!("  Gamma*f{x:?} = {v:.6e}   Gamma{x:?} = {:.6e}", h.eval(&x));
    }
    Ok(())
}
