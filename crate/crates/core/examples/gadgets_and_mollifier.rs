//! Convex gadgets, the semilinear chain-rule identity and the group mollifier.
//!
//! ```bash
//! cargo run -p hypoliouville --example gadgets_and_mollifier
//! ```

use hypoliouville::expr::parse;
use hypoliouville::fields::heisenberg_sublaplacian;
use hypoliouville::group::GroupLaw;
use hypoliouville::liouville::{gadget_eval, gadget_invariants, semilinear_residual, Gadget, Mollifier};

fn main() -> hypoliouville::Result<()> {
    let gadgets = [Gadget::Thm1 { p: 2.0 }, Gadget::Thm2 { p: 0.5 }, Gadget::Thm3 { p: 1.0 }, Gadget::Thm5 { f: parse("x1^3", 1)? }];
    for g in &gadgets {
        let r = gadget_invariants(g, 10_000)?;
        let at1 = gadget_eval(g, 1.0)?;
        println!("{} (F, F', F'')(1) = ({:.4}, {:.4}, {:.4})", r.variant, at1.0, at1.1, at1.2);
        for (name, ok) in &r.checks {
            println!("    {} {name}", if *ok { "ok  " } else { "FAIL" });
        }
    }

    // L u = u for u = exp(x1) on the Heisenberg group, with F(t) = t^2/2
    let r = semilinear_residual(&heisenberg_sublaplacian(), &parse("x1^2/2", 1)?, &parse("exp(x1)", 3)?)?;
    println!("semilinear residual: {:?}", r);

    let g = GroupLaw::heisenberg();
    let abs = |x: &[f64]| x.iter().map(|v| v * v).sum::<f64>().sqrt();
    for eps in [0.2, 0.1, 0.05] {
        let m = Mollifier::new(3, eps)?;
        println!("eps = {eps}: mollified |x| at 0 = {:.5}", m.mollify(&abs, &g, &[0.0; 3])?);
    }
    Ok(())
}
