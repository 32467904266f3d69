//! Hörmander rank of the Mumford fields and of a Kolmogorov operator with an expanding drift.
//!
//! ```bash
//! cargo run -p hypoliouville --example hormander_rank
//! ```

use hypoliouville::expr::parse;
use hypoliouville::fields::{hormander_check, sample_points, VectorField};
use hypoliouville::kolmogorov::{build_operator, KolmogorovSpec};
use hypoliouville::expr::rat;

fn main() -> hypoliouville::Result<()> {
    let x = VectorField::coordinate(3, 0);
    let y = VectorField::new(vec![parse("0", 3)?, parse("cos(x1)", 3)?, parse("sin(x1)", 3)?]);
    let pts = sample_points(3, 50, 10.0, 1);
    let report = hormander_check(&[x, y], &pts, 4)?;
    println!("Mumford: min rank by depth {:?}, full rank: {}", report.min_rank_by_depth, report.full_rank);

    let spec = KolmogorovSpec::new(
        vec![vec![rat(1, 1), rat(0, 1)], vec![rat(0, 1), rat(0, 1)]],
        vec![vec![rat(1, 1), rat(-1, 2)], vec![rat(1, 2), rat(-1, 1)]],
    )?;
    let l = build_operator(&spec);
    let report = hormander_check(&l.hormander_fields(), &sample_points(3, 100, 5.0, 2), 4)?;
    println!(
        "Kolmogorov with B = [[1, -1/2], [1/2, -1]]: ranks {}..={} after depth {}",
        report.ranks.iter().min().unwrap(),
        report.ranks.iter().max().unwrap(),
        report.depth_used
    );
    println!("note: {}", report.note);
    Ok(())
}
