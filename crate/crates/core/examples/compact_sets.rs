//! Building compact sets: gasket prefractals, polygons with holes, point
//! clouds and set specs, plus the boundary sampling that feeds the field.

use aniso_content::{
    sample_boundary, sierpinski_gasket, CompactSet, PolygonRegion, Result, SetSpec,
};

pub fn run_example() -> Result<()> {
    for depth in [0, 3, 8] {
        let g = sierpinski_gasket(depth)?;
        println!(
            "gasket depth {depth}: {} segments, skeleton length {:.4}, diameter {:.4}",
            g.element_count(),
            g.skeleton_length(),
            g.bounding_diameter()
        );
    }

    let frame = PolygonRegion::new(
        vec![[0.0, 0.0], [3.0, 0.0], [3.0, 3.0], [0.0, 3.0]],
        vec![vec![[1.0, 1.0], [1.0, 2.0], [2.0, 2.0], [2.0, 1.0]]],
    )?;
    let frame = CompactSet::polygon(frame)?;
    println!(
        "square frame: area {}, contains (0.5,0.5) {}, contains (1.5,1.5) {}",
        frame.volume(),
        frame.interior_contains(&[0.5, 0.5]),
        frame.interior_contains(&[1.5, 1.5])
    );
    let samples = sample_boundary(&frame, 0.05)?;
    println!("boundary samples at spacing 0.05: {}", samples.len());

    for text in [
        "points:10",
        "triangle-boundary",
        r#"{"kind":"gasket","depth":4}"#,
    ] {
        let set = SetSpec::parse(text)?.build::<2>()?;
        println!("{text:>22} -> {set}");
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<()> {
    run_example()
}
