//! Support, gauge and dual gauge of convex bodies, and what they say about
//! the anisotropic distance.

use aniso_content::{BodySpec, ConvexBody, Result};

pub fn run_example() -> Result<()> {
    let skew = ConvexBody::new(&[[1.5, 0.1], [-0.2, 0.4], [-0.6, -0.3], [0.3, -0.9]])?;
    let bodies = [
        ("disk64", ConvexBody::disk64()),
        ("square", ConvexBody::square()),
        ("triangle", ConvexBody::triangle()),
        ("skew", skew),
    ];
    let x = [0.7, -0.4];
    for (name, c) in &bodies {
        println!(
            "{name:>8}: volume {:.6}  a {:.4}  b {:.4}  h_C(x) {:.6}  gauge(x) {:.6}  dist_C(x, 0) {:.6}",
            c.volume(),
            c.inradius(),
            c.outradius(),
            c.support(&x),
            c.gauge(&x),
            c.gauge_dual(&x),
        );
    }

    // the gauge of the scaled body rC is gauge_C / r
    let square = ConvexBody::square();
    let half = square.scale(0.5)?;
    println!(
        "gauge in 2C vs C/2: {} {}",
        square.gauge(&x) * 2.0,
        half.gauge(&x)
    );

    // bodies round-trip through their JSON description
    let spec = BodySpec::parse(
        r#"{"dimension": 3, "vertices": [[1,0,0],[-1,0,0],[0,1,0],[0,-1,0],[0,0,1],[0,0,-1]]}"#,
    )?;
    let octahedron = spec.build::<3>()?;
    println!(
        "octahedron: {} facets, volume {:.6}, gauge(1,1,1) = {}",
        octahedron.facets().len(),
        octahedron.volume(),
        octahedron.gauge(&[1.0, 1.0, 1.0])
    );
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<()> {
    run_example()
}
