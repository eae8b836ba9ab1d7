#![allow(dead_code)]

use std::f64::consts::PI;

use aniso_content::{CompactSet, ConvexBody, PolygonRegion};
use rand::Rng;

/// Sorted angles in `[0, 2π)` whose cyclic gaps stay below `max_gap`.
fn spread_angles<R: Rng>(rng: &mut R, k: usize, max_gap: f64) -> Vec<f64> {
    assert!(
        k as f64 * max_gap > 2.0 * PI,
        "{k} gaps below {max_gap} cannot cover the circle"
    );
    loop {
        let mut a: Vec<f64> = (0..k).map(|_| rng.gen_range(0.0..2.0 * PI)).collect();
        a.sort_by(f64::total_cmp);
        let wrap = a[0] + 2.0 * PI - a[k - 1];
        if a.windows(2).all(|w| w[1] - w[0] < max_gap) && wrap < max_gap {
            return a;
        }
    }
}

/// Random convex polygon with `k` vertices around the origin.
pub fn random_body<R: Rng>(rng: &mut R, k: usize) -> ConvexBody<2> {
    let angles = spread_angles(rng, k, 0.9 * PI);
    let verts: Vec<[f64; 2]> = angles
        .iter()
        .map(|&t| {
            let r = rng.gen_range(0.5..1.5);
            [r * t.cos(), r * t.sin()]
        })
        .collect();
    ConvexBody::new(&verts).expect("angles with gaps below π keep the origin inside")
}

/// Random star-shaped simple polygon with `k` vertices.
pub fn random_star_polygon<R: Rng>(rng: &mut R, k: usize) -> CompactSet<2> {
    let angles = spread_angles(rng, k, PI / 2.0);
    let ring: Vec<[f64; 2]> = angles
        .iter()
        .map(|&t| {
            let r = rng.gen_range(0.5..1.0);
            [r * t.cos(), r * t.sin()]
        })
        .collect();
    CompactSet::polygon(PolygonRegion::new(ring, vec![]).unwrap()).unwrap()
}

pub fn random_cloud<R: Rng>(rng: &mut R, k: usize) -> CompactSet<2> {
    CompactSet::points(
        (0..k)
            .map(|_| [rng.gen::<f64>(), rng.gen::<f64>()])
            .collect(),
    )
}

pub fn pool(threads: usize) -> rayon::ThreadPool {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .unwrap()
}

pub fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}
