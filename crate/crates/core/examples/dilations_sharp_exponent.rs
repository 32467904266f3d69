//! Homogeneous dimension and critical exponent for several families,
//! including the heat lift `Q + 2`.
//!
//! ```bash
//! cargo run -p hypoliouville --example dilations_sharp_exponent
//! ```

use hypoliouville::dilation::{automorphism_check, homogeneity_degree, sharp_exponent, Dilation};
use hypoliouville::fields::heisenberg_sublaplacian;
use hypoliouville::group::GroupLaw;

fn main() -> hypoliouville::Result<()> {
    let heis = Dilation::from_integers(&[1, 1, 2])?;
    println!("automorphism: {:?}", automorphism_check(&heis, &GroupLaw::heisenberg())?.passed);
    println!("degree of the sub-Laplacian: {:?}", homogeneity_degree(&heisenberg_sublaplacian(), &heis)?.degree.map(|d| d.to_string()));

    let cases = [
        ("R^3", Dilation::isotropic(3)),
        ("R^5", Dilation::isotropic(5)),
        ("Heisenberg", heis.clone()),
        ("Heisenberg heat", heis.heat_lift()),
        ("Kolmogorov (1, 3, 2)", Dilation::from_integers(&[1, 3, 2])?),
    ];
    for (name, d) in cases {
        let p = sharp_exponent(d.q())?;
        println!("{name:<22} Q = {:<3} p* = {p}", d.q().to_string());
    }
    println!("R^2: {}", sharp_exponent(Dilation::isotropic(2).q()).map_or_else(|e| e.to_string(), |p| p.to_string()));
    Ok(())
}
