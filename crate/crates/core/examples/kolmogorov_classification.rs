//! Classify constant-coefficient Kolmogorov operators: hypoellipticity,
//! unimodularity and the L∞-Liouville test on the spectrum of `B`.
//!
//! ```bash
//! cargo run -p hypoliouville --example kolmogorov_classification
//! ```

use hypoliouville::expr::rat;
use hypoliouville::kolmogorov::{build_group, classify, gram, KolmogorovSpec};
use hypoliouville::Rational;

fn m(rows: &[[(i64, i64); 2]; 2]) -> Vec<Vec<Rational>> {
    rows.iter().map(|r| r.iter().map(|(p, q)| rat(*p, *q)).collect()).collect()
}

fn main() -> hypoliouville::Result<()> {
    let a = m(&[[(1, 1), (0, 1)], [(0, 1), (0, 1)]]);
    let cases = [
        ("classical", m(&[[(0, 1), (0, 1)], [(1, 1), (0, 1)]])),
        ("expanding", m(&[[(1, 1), (-1, 2)], [(1, 2), (-1, 1)]])),
        ("rotation", m(&[[(0, 1), (-1, 1)], [(1, 1), (0, 1)]])),
        ("degenerate", m(&[[(0, 1), (0, 1)], [(0, 1), (1, 1)]])),
    ];
    for (name, b) in cases {
        let spec = KolmogorovSpec::new(a.clone(), b)?;
        let k = classify(&spec)?;
        let law = build_group(&spec);
        println!(
            "{name:<10} hypoelliptic {:<5} unimodular {:<5} Linf-Liouville {:<5} law {:?}",
            k.hypoelliptic, k.unimodular, k.linf_liouville, law.kind
        );
        for n in &k.notes {
            println!("            {n}");
        }
    }
    let spec = KolmogorovSpec::new(a, m(&[[(0, 1), (0, 1)], [(1, 1), (0, 1)]]))?;
    println!("classical C(1) = {}", gram(&spec, 1.0)?);
    Ok(())
}
