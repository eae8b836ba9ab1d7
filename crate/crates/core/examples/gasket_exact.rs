//! Closed forms: the gasket's piecewise tube volume, its four content limits
//! and the α-sweep that reproduces them, plus the anisotropic perimeter.

use aniso_content::closed_form::{
    alpha_sweep, gasket_content_limits, polygon_aniso_perimeter, GasketProfile, GASKET_DIMENSION,
};
use aniso_content::{ConvexBody, PolygonRegion, Result};

pub fn run_example() -> Result<()> {
    for (name, body) in [
        ("disk64", ConvexBody::disk64()),
        ("square", ConvexBody::square()),
    ] {
        let g = GasketProfile::new(&body);
        let l = gasket_content_limits(&g);
        let [sl, ml, mu, su] = l.coefficients();
        println!("{name}: u2 = {:.6}, D = {GASKET_DIMENSION:.6}", g.u2);
        println!("  coefficients of u2^(2-D): {sl:.4} < {ml:.4} < {mu:.4} < {su:.4}");
        println!(
            "  alpha_max {:.4}  beta_min {:.4}  beta_max {:.4}",
            l.alpha_max, l.beta_min, l.beta_max
        );
        let sweep = alpha_sweep(&g, 40, 10_000);
        println!(
            "  sweep at level 40: S [{:.6}, {:.6}]  M [{:.6}, {:.6}]",
            sweep.s_lower / l.scale,
            sweep.s_upper / l.scale,
            sweep.m_lower / l.scale,
            sweep.m_upper / l.scale
        );
        for n in 0..4 {
            let (lo, hi) = g.interval(n);
            let (v, s) = g.evaluate(lo)?;
            println!("  I_{n} = [{lo:.5}, {hi:.5}): V = {v:.6}, S = {s:.6}");
        }
    }

    let square = PolygonRegion::new(vec![[0.0, 0.0], [2.0, 0.0], [2.0, 2.0], [0.0, 2.0]], vec![])?;
    println!(
        "anisotropic perimeter of the square of side 2: disk64 {:.6}, triangle {:.6}",
        polygon_aniso_perimeter(&square, &ConvexBody::disk64()),
        polygon_aniso_perimeter(&square, &ConvexBody::triangle())
    );
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<()> {
    run_example()
}
