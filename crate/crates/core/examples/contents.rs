//! Minkowski, outer Minkowski and S-content envelopes of a gasket prefractal,
//! with the octave table and the dimension estimate.

use aniso_content::closed_form::{gasket_content_limits, GasketProfile, GASKET_DIMENSION};
use aniso_content::contents::{content_estimate, default_radii, dimension_estimate, ContentKind};
use aniso_content::field::profile_from_sublevels;
use aniso_content::{distance_field, sierpinski_gasket, ConvexBody, Grid, Result};

pub fn run_example() -> Result<()> {
    let body = ConvexBody::disk64();
    let gasket = sierpinski_gasket(8)?;
    let grid = Grid::covering(&gasket, 1.0 / 256.0, 0.2)?;
    let field = distance_field(&gasket, &body, &grid)?;
    let sub = field.sublevel_volumes();
    let radii = default_radii(&sub, Some(0.02), Some(0.18), 8)?;
    let profile = profile_from_sublevels(&sub, &radii, field.meta("disk64"))?;

    let exact = gasket_content_limits(&GasketProfile::new(&body));
    println!(
        "exact M envelope [{:.4}, {:.4}]",
        exact.m_lower, exact.m_upper
    );
    for kind in ContentKind::ALL {
        let r = content_estimate(&profile, GASKET_DIMENSION, kind)?;
        println!(
            "{kind:?}: [{:.4}, {:.4}] over r in [{:.4}, {:.4}]",
            r.lower, r.upper, r.window.0, r.window.1
        );
        for row in &r.octave_table {
            println!(
                "    [{:.4}, {:.4}): {:.4} .. {:.4}",
                row.r_lo, row.r_hi, row.min, row.max
            );
        }
    }

    let dim = dimension_estimate(&profile)?;
    println!(
        "dimension {:.3} (lower {:.3}, upper {:.3}), log2 3 = {GASKET_DIMENSION:.3}",
        dim.dimension, dim.dim_lower, dim.dim_upper
    );
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<()> {
    run_example()
}
