//! The annulus-ratio test of `u = −Γ∗f` across the critical exponent.
//!
//! ```bash
//! cargo run --release -p hypoliouville --example sharp_counterexample
//! ```

use hypoliouville::liouville::{counterexample_scan, gamma_euclidean, gamma_heisenberg, AnnulusConfig, Bump};

fn main() -> hypoliouville::Result<()> {
    let cfg = AnnulusConfig { samples: 20_000, ..Default::default() };
    for gamma in [gamma_euclidean(3)?, gamma_heisenberg()?] {
        let ps = hypoliouville::expr::to_f64(&gamma.p_star());
        let reports = counterexample_scan(&gamma, &Bump::unit_mass(3, 0.5), &[ps - 0.5, ps, ps + 0.5, ps + 1.0], &cfg)?;
        println!("{:?}: Q = {}, p* = {ps}", gamma.kernel(), reports[0].q);
        for r in &reports {
            println!("  p = {:<4} ratio {:.4} (theory {:.4}) {:?}", r.p, r.measured_ratio, r.theoretical_ratio, r.verdict);
        }
        let s = &reports[0].signs;
        println!("  max u = {:.2e}, L u = f defect {:.1e}", s.max_u, s.lu_defect);
    }
    Ok(())
}
