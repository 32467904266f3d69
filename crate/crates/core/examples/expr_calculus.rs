//! Parse, differentiate, simplify and apply an operator symbolically.
//!
//! ```bash
//! cargo run -p hypoliouville --example expr_calculus
//! ```

use hypoliouville::expr::{parse, VarNames};
use hypoliouville::fields::heisenberg_sublaplacian;

fn main() -> hypoliouville::Result<()> {
    let names = VarNames::default_for(3);
    let u = parse("x1^2 * x3 - sin(x2) + exp(x1*x2)/2", 3)?;
    println!("u          = {}", u.render(&names));
    for i in 0..3 {
        println!("d u / d x{} = {}", i + 1, u.diff(i).simplify().render(&names));
    }

    let l = heisenberg_sublaplacian();
    let lu = l.apply(&u)?;
    println!("L u        = {}", lu.render(&names));
    println!("L u at (1, 0.5, -2) = {:.12}", lu.eval(&[1.0, 0.5, -2.0]));

    // compiled evaluation for hot loops
    let c = lu.compile();
    let mean: f64 = (0..1000).map(|k| c.eval(&[k as f64 * 1e-3, 0.5, -2.0])).sum::<f64>() / 1000.0;
    println!("mean of L u along x1 in [0, 1) = {mean:.6}");
    Ok(())
}
