//! Group axioms, left invariance and unimodularity for the Heisenberg group,
//! and a failing pairing of the Laplacian with the same law.
//!
//! ```bash
//! cargo run -p hypoliouville --example group_invariance
//! ```

use hypoliouville::fields::{heisenberg_sublaplacian, Operator};
use hypoliouville::group::{invariance_residual, monomial_basis, unimodularity_check, verify_axioms, GroupLaw};

fn main() -> hypoliouville::Result<()> {
    let g = GroupLaw::heisenberg();
    let axioms = verify_axioms(&g)?;
    for c in &axioms.checks {
        println!("{:<28} {:?} residual {:.1e} {}", c.name, c.method, c.residual, if c.passed { "ok" } else { "FAILED" });
    }
    let basis = monomial_basis(3, 3);
    let inv = invariance_residual(&heisenberg_sublaplacian(), &g, &basis)?;
    println!("sub-Laplacian invariance: {:?} residual {} ({} test functions)", inv.method, inv.residual, basis.len());
    let lap = invariance_residual(&Operator::laplacian(3), &g, &basis)?;
    println!("Laplacian invariance: passed {} (worst on {:?})", lap.passed, lap.worst_function);
    println!("unimodular: {}", unimodularity_check(&g)?.passed);
    Ok(())
}
