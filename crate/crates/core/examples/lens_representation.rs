//! Discrete representation measures on the lens domain and the discrete
//! maximum principle. Writes the measures to `measures.csv` in the
//! system temp directory.
//!
//! ```bash
//! cargo run --release -p hypoliouville --example lens_representation
//! ```

use hypoliouville::expr::{parse, VarNames};
use hypoliouville::fields::Operator;
use hypoliouville::group::monomial_basis;
use hypoliouville::lens::{extract_measures, maximum_principle_check, representation_check, solve_dirichlet, LensDomain};

fn main() -> hypoliouville::Result<()> {
    let l = Operator::laplacian(2);
    let dom = LensDomain::standard(2);
    let m = extract_measures(&l, &dom, 1.0 / 64.0, 0.0)?;
    println!("{:?}", m.summary());
    let names = VarNames::default_for(2);
    for u in monomial_basis(2, 4) {
        println!("residual for {:<14} {:+.3e}", u.render(&names), representation_check(&l, &m, &u)?);
    }
    let path = std::env::temp_dir().join("measures.csv");
    m.write_csv(std::fs::File::create(&path)?)?;
    println!("measures written to {}", path.display());

    let s = solve_dirichlet(&l, &dom, 1.0 / 32.0, &parse("-1", 2)?, &parse("-x2^2", 2)?, 0.0)?;
    println!("u(0) = {:.6}, max u = {:.3e} (solver: {:?})", s.value_at_origin(), s.max_interior(), s.stats);
    let p = maximum_principle_check(&l, &dom, 1.0 / 32.0, 0.0, 10, 3)?;
    println!("maximum principle over {} random problems: {}", p.trials, p.passed);
    Ok(())
}
