//! Content of a union of well-separated parts against the sum of the parts.

use aniso_content::contents::{decomposition_check, DecompositionGrid};
use aniso_content::{ConvexBody, Result, SetSpec};

pub fn run_example() -> Result<()> {
    let body = ConvexBody::disk64();
    let a = SetSpec::parse("point")?.build::<2>()?;
    let b = a.translate(&[1.0, 0.0]);
    let grid = DecompositionGrid {
        cell_size: 1.0 / 512.0,
        padding: 0.45,
        radii: aniso_content::geometric_radii(0.02, 0.4, 6)?,
    };
    let report = decomposition_check(&[a, b], 0.0, &body, &grid, "disk64")?;
    println!(
        "two points, s = 0: union [{:.4}, {:.4}], parts sum [{:.4}, {:.4}], 2 lambda(C) = {:.4}: {:?}",
        report.union.lower,
        report.union.upper,
        report.sum_lower,
        report.sum_upper,
        2.0 * body.volume(),
        report.verdict
    );
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<()> {
    run_example()
}
