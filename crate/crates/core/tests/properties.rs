mod common;

use aniso_content::closed_form::{
    body_dilation_profile, polygon_aniso_perimeter, triangle_tube, GasketProfile,
    TriangleAnisotropy, TriangleVariant,
};
use aniso_content::contents::{kappa_monotonicity, kneser_check, ExactVolume};
use aniso_content::{
    distance_field, geometric_radii, volume_profile, CompactSet, ConvexBody, Grid, PolygonRegion,
};
use common::{random_body, random_star_polygon};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn body_from(seed: u64, k: usize) -> ConvexBody<2> {
    random_body(&mut ChaCha8Rng::seed_from_u64(seed), k)
}

fn vec2() -> impl Strategy<Value = [f64; 2]> {
    prop::array::uniform2(-5.0f64..5.0)
}

fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

proptest! {
    #[test]
    fn support_is_sublinear(seed in any::<u64>(), k in 3usize..24, x in vec2(), y in vec2(), t in 0.0f64..10.0) {
        let c = body_from(seed, k);
        let sum = [x[0] + y[0], x[1] + y[1]];
        prop_assert!(c.support(&sum) <= c.support(&x) + c.support(&y) + 1e-12);
        let scaled = [t * x[0], t * x[1]];
        prop_assert!((c.support(&scaled) - t * c.support(&x)).abs() <= 1e-12 * (1.0 + t * norm(&x)));
    }

    #[test]
    fn gauge_matches_its_dual_form(seed in any::<u64>(), k in 3usize..40, x in vec2()) {
        let c = body_from(seed, k);
        let (g, d) = (c.gauge(&x), c.gauge_dual(&x));
        prop_assert!((g - d).abs() <= 1e-9 * g.max(1.0), "{} vs {}", g, d);
    }

    #[test]
    fn membership_is_the_unit_gauge_ball(seed in any::<u64>(), k in 3usize..24, x in vec2()) {
        let c = body_from(seed, k);
        let g = c.gauge(&x);
        prop_assume!((g - 1.0).abs() > 1e-9);
        prop_assert_eq!(c.contains(&x), g < 1.0);
    }

    #[test]
    fn gauge_is_sandwiched_by_euclidean_radii(seed in any::<u64>(), k in 3usize..24, x in vec2()) {
        let c = body_from(seed, k);
        let (g, e) = (c.gauge(&x), norm(&x));
        prop_assert!(e / c.outradius() <= g * (1.0 + 1e-12) + 1e-15);
        prop_assert!(g <= e / c.inradius() * (1.0 + 1e-12) + 1e-15);
    }

    #[test]
    fn scaling_is_covariant(seed in any::<u64>(), k in 3usize..24, x in vec2(), r in 0.01f64..100.0) {
        let c = body_from(seed, k);
        let rc = c.scale(r).unwrap();
        prop_assert!((rc.gauge(&x) - c.gauge(&x) / r).abs() <= 1e-9 * (1.0 + c.gauge(&x) / r));
        prop_assert!((rc.support(&x) - r * c.support(&x)).abs() <= 1e-9 * (1.0 + r * c.support(&x)));
        prop_assert!((rc.volume() - r * r * c.volume()).abs() <= 1e-9 * r * r * c.volume());
    }

    #[test]
    fn solid_gauges(x in prop::array::uniform3(-5.0f64..5.0)) {
        let cube = ConvexBody::<3>::cube().gauge(&x);
        let octa = ConvexBody::<3>::cross_polytope().gauge(&x);
        let max = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let l1: f64 = x.iter().map(|v| v.abs()).sum();
        prop_assert!((cube - max).abs() <= 1e-12 * (1.0 + max));
        prop_assert!((octa - l1).abs() <= 1e-12 * (1.0 + l1));
    }

    #[test]
    fn body_perimeter_is_twice_its_area(seed in any::<u64>(), k in 3usize..24) {
        let c = body_from(seed, k);
        let ring: Vec<[f64; 2]> = c.vertices().iter().map(|v| [v[0], v[1]]).collect();
        let p = polygon_aniso_perimeter(&PolygonRegion::new(ring, vec![]).unwrap(), &c);
        prop_assert!((p - 2.0 * c.volume()).abs() <= 1e-9 * c.volume());
    }

    #[test]
    fn anisotropic_isoperimetry(seed in any::<u64>(), k in 5usize..12, body_seed in any::<u64>()) {
        let e = random_star_polygon(&mut ChaCha8Rng::seed_from_u64(seed), k);
        let c = body_from(body_seed, 6);
        let CompactSet::Polygons(regions) = &e else { unreachable!() };
        let p = polygon_aniso_perimeter(&regions[0], &c);
        let bound = 2.0 * c.volume().sqrt() * e.volume().sqrt();
        prop_assert!(p >= bound * (1.0 - 1e-12), "{} < {}", p, bound);
    }

    #[test]
    fn dilated_body_is_kneser(seed in any::<u64>(), k in 3usize..24) {
        let c = body_from(seed, k);
        let lam = c.volume();
        let v = ExactVolume { f: move |r: f64| lam * (1.0 + r).powi(2), range: (1e-6, 1e3) };
        prop_assert!(kneser_check(&v, 2, 500, seed).unwrap().holds());
        let radii = geometric_radii(1e-3, 1e2, 2).unwrap();
        prop_assert!(kappa_monotonicity(&body_dilation_profile(&c, &radii, "c").unwrap()).holds);
    }

    #[test]
    fn gasket_profile_is_monotone_and_kneser(seed in any::<u64>(), k in 3usize..24, r in 1e-6f64..1.0, f in 1.0f64..3.0) {
        let g = GasketProfile::new(&body_from(seed, k));
        let (v1, s1) = g.evaluate(r).unwrap();
        let (v2, s2) = g.evaluate(r * f).unwrap();
        prop_assert!(v2 >= v1 * (1.0 - 1e-12));
        // kappa = S/r is non-increasing
        prop_assert!(s2 / (r * f) <= s1 / r * (1.0 + 1e-9));
    }

    #[test]
    fn boundary_tube_sits_inside_filled_tube(seed in any::<u64>(), k in 3usize..24, frac in 0.0f64..1.0) {
        let t = TriangleAnisotropy::new(&body_from(seed, k), 1.0).unwrap();
        let r = frac * t.boundary_validity();
        let (vf, _) = triangle_tube(&t, r, TriangleVariant::Filled).unwrap();
        let (vb, _) = triangle_tube(&t, r, TriangleVariant::Boundary).unwrap();
        prop_assert!(vb <= vf * (1.0 + 1e-12));
        prop_assert!(vb >= -1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn grid_volumes_are_monotone_and_sandwiched(seed in any::<u64>(), k in 3usize..8) {
        let c = body_from(seed, k);
        let set = CompactSet::points(vec![[0.0, 0.0]]);
        let h = 1.0 / 128.0;
        let r_max = 0.5;
        let grid = Grid::covering(&set, h, (r_max * 1.002 + h) * c.outradius() + 2.0 * h).unwrap();
        let field = distance_field(&set, &c, &grid).unwrap();
        for l in (0..grid.cell_count()).step_by(97) {
            let x = grid.center(l);
            let g = field.value_at(l);
            prop_assert!((g - c.gauge(&x)).abs() <= 1e-12 * (1.0 + g));
        }
        let radii = geometric_radii(field.resolution_guard(), r_max, 4).unwrap();
        let p = volume_profile(&field, &radii, "random").unwrap();
        prop_assert!(p.volume.windows(2).all(|w| w[1] >= w[0]));
        let pi = std::f64::consts::PI;
        for (i, &r) in p.radii.iter().enumerate() {
            let exact = c.volume() * r * r;
            prop_assert!((p.volume[i] - exact).abs() <= p.volume_budget[i], "r={}: {} vs {}", r, p.volume[i], exact);
            // E ⊕ rC lies between the balls of radius r·a and r·b
            prop_assert!(p.volume[i] + p.volume_budget[i] >= pi * (r * c.inradius()).powi(2));
            prop_assert!(p.volume[i] - p.volume_budget[i] <= pi * (r * c.outradius()).powi(2));
        }
    }
}
