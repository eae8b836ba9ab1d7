//! End-to-end acceptance run: one PASS/FAIL line per criterion.

mod common;

use std::time::Instant;

use aniso_content::closed_form::{
    alpha_sweep, gasket_content_limits, triangle_tube_volume, GasketProfile, TriangleAnisotropy,
    TriangleVariant, GASKET_DIMENSION,
};
use aniso_content::contents::{
    content_estimate, decomposition_check, dimension_estimate, inequality_ledger,
    kappa_monotonicity, kneser_check, ledger_reports, ContentKind, DecompositionGrid, ExactVolume,
    StepCorrupted, Verdict, VolumeFunction,
};
use aniso_content::field::profile_from_sublevels;
use aniso_content::job::{run, Command, JobConfig};
use aniso_content::set::separated_points;
use aniso_content::{
    distance_field, geometric_radii, sierpinski_gasket, volume_profile, ConvexBody, Grid, Method,
    SetSpec, VolumeProfile,
};
use common::{pool, random_body, random_cloud, random_star_polygon, rel};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

const REFERENCE_COEFFICIENTS: [f64; 4] = [1.107, 1.148, 1.150, 1.170];

fn gasket_limits_match_reference() -> Outcome {
    let start = Instant::now();
    let g = GasketProfile::new(&ConvexBody::disk64());
    let l = gasket_content_limits(&g);
    let elapsed = start.elapsed().as_secs_f64();
    let c = l.coefficients();
    let close = c
        .iter()
        .zip(REFERENCE_COEFFICIENTS)
        .all(|(a, b)| (a - b).abs() <= 1e-3);
    check(
        close && l.strictly_ordered() && elapsed < 1.0,
        format!(
            "coefficients {:.4} {:.4} {:.4} {:.4}, strict {}, {elapsed:.2e} s",
            c[0],
            c[1],
            c[2],
            c[3],
            l.strictly_ordered()
        ),
    )
}

fn alpha_sweep_reproduces_limits() -> Outcome {
    let g = GasketProfile::new(&ConvexBody::disk64());
    let l = gasket_content_limits(&g);
    let s = alpha_sweep(&g, 40, 10_000);
    let errs = [
        rel(s.s_lower, l.s_lower),
        rel(s.m_lower, l.m_lower),
        rel(s.m_upper, l.m_upper),
        rel(s.s_upper, l.s_upper),
    ];
    let worst = errs.iter().copied().fold(0.0, f64::max);
    check(
        worst <= 1e-6,
        format!("worst relative deviation {worst:.2e}"),
    )
}

const TRIANGLE_RADII: [f64; 3] = [0.02, 0.05, 0.1];

/// Grid profile of the filled unit triangle for `C = disk64` at `h = 1/2048`.
fn triangle_pipeline(threads: usize) -> Result<(VolumeProfile, Vec<u8>, f64), String> {
    pool(threads).install(|| {
        let start = Instant::now();
        let body = ConvexBody::disk64();
        let set = SetSpec::parse("triangle")
            .map_err(err)?
            .build::<2>()
            .map_err(err)?;
        let h = 1.0 / 2048.0;
        let grid = Grid::covering(&set, h, 0.11).map_err(err)?;
        let field = distance_field(&set, &body, &grid).map_err(err)?;
        let profile = volume_profile(&field, &TRIANGLE_RADII, "disk64").map_err(err)?;
        let mut csv = Vec::new();
        profile.write_csv(&mut csv).map_err(err)?;
        Ok((profile, csv, start.elapsed().as_secs_f64()))
    })
}

fn triangle_grid_matches(single: &(VolumeProfile, Vec<u8>, f64)) -> Outcome {
    let (profile, _, secs) = single;
    let t = TriangleAnisotropy::new(&ConvexBody::disk64(), 1.0).map_err(err)?;
    let mut worst: f64 = 0.0;
    let mut parts = Vec::new();
    for (i, &r) in TRIANGLE_RADII.iter().enumerate() {
        let exact = triangle_tube_volume(&t, r, TriangleVariant::Filled).map_err(err)?;
        let e = rel(profile.volume[i], exact);
        worst = worst.max(e);
        parts.push(format!("r={r}: {e:.1e}"));
    }
    check(
        worst <= 0.01 && *secs < 30.0,
        format!(
            "relative errors {} in {secs:.1} s on one thread",
            parts.join(", ")
        ),
    )
}

fn gasket_grid_profile(
    body: &ConvexBody<2>,
    label: &str,
    radii: &[f64],
) -> Result<VolumeProfile, String> {
    let set = sierpinski_gasket(12).map_err(err)?;
    let h = 1.0 / 1024.0;
    let r_max = radii[radii.len() - 1];
    let pad = (r_max * 1.002 + h) * body.outradius() + 2.0 * h;
    let grid = Grid::covering(&set, h, pad).map_err(err)?;
    let field = distance_field(&set, body, &grid).map_err(err)?;
    volume_profile(&field, radii, label).map_err(err)
}

fn gasket_grid_matches(profile: &VolumeProfile) -> Outcome {
    let body = ConvexBody::disk64();
    let g = GasketProfile::new(&body);
    let k = g.hole_radius();
    // eight radii from inside I_3 to inside I_0
    let probe: Vec<f64> = (0..8)
        .map(|i| 0.15 * k * (1.25f64 / 0.15).powf(i as f64 / 7.0))
        .collect();
    let check_profile = gasket_grid_profile(&body, "disk64", &probe)?;
    let mut worst: f64 = 0.0;
    for (i, &r) in probe.iter().enumerate() {
        let exact = g.volume(r).map_err(err)?;
        worst = worst.max(rel(check_profile.volume[i], exact));
    }
    let levels: Vec<u32> = probe.iter().map(|&r| g.level(r)).collect();
    let spans = levels.contains(&3) && levels.contains(&0);

    let l = gasket_content_limits(&g);
    let m = content_estimate(profile, GASKET_DIMENSION, ContentKind::Minkowski).map_err(err)?;
    let (lo, hi) = (rel(m.lower, l.m_lower), rel(m.upper, l.m_upper));
    check(
        worst <= 0.01 && spans && lo <= 0.05 && hi <= 0.05,
        format!(
            "V worst relative error {worst:.2e} over {} radii on levels {levels:?}; envelope [{:.4}, {:.4}] vs exact [{:.4}, {:.4}]",
            probe.len(),
            m.lower,
            m.upper,
            l.m_lower,
            l.m_upper
        ),
    )
}

fn kneser_property() -> Outcome {
    let g = GasketProfile::new(&ConvexBody::disk64());
    let k = g.hole_radius();
    let exact = ExactVolume {
        f: |r: f64| g.volume(r).unwrap(),
        range: (k * 2f64.powi(-30), 8.0 * k),
    };
    let closed = kneser_check(&exact, 2, 10_000, 5).map_err(err)?;

    let mut rng = ChaCha8Rng::seed_from_u64(55);
    let cloud = random_cloud(&mut rng, 20);
    let body = random_body(&mut rng, 4);
    let h = 1.0 / 512.0;
    let grid = Grid::covering(&cloud, h, 0.3 * body.outradius() + 3.0 * h).map_err(err)?;
    let field = distance_field(&cloud, &body, &grid).map_err(err)?;
    let sub = field.sublevel_volumes();
    let gridded = kneser_check(&sub, 2, 10_000, 6).map_err(err)?;

    let (lo, hi) = sub.range();
    let step = |inner| StepCorrupted {
        inner,
        at: (lo * hi).sqrt(),
        height: 0.5 * sub.volume_at(hi),
    };
    let bad_grid = kneser_check(&step(sub.clone()), 2, 10_000, 7).map_err(err)?;
    let bad_exact = kneser_check(
        &StepCorrupted {
            inner: exact,
            at: k * 2f64.powi(-15),
            height: 0.05 * g.volume(8.0 * k).unwrap(),
        },
        2,
        10_000,
        8,
    )
    .map_err(err)?;
    check(
        closed.holds() && gridded.holds() && !bad_grid.holds() && !bad_exact.holds(),
        format!(
            "violations: gasket {}, 20-point cloud {}; step controls flagged {} / {}",
            closed.violations.len(),
            gridded.violations.len(),
            bad_exact.violations.len(),
            bad_grid.violations.len()
        ),
    )
}

fn kappa_behaviour() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(66);
    let set = random_star_polygon(&mut rng, 10);
    let body = ConvexBody::square();
    let diam = set.bounding_diameter();
    let limit = 2.0 * body.volume();

    // fine grid near the set, coarse grid far out
    let fine = {
        let h = 1.0 / 256.0;
        let r_max = 2.0 * diam;
        let grid = Grid::covering(&set, h, (r_max * 1.002 + h) * body.outradius() + 2.0 * h)
            .map_err(err)?;
        let field = distance_field(&set, &body, &grid).map_err(err)?;
        let radii = geometric_radii(8.0 * h, r_max, 4).map_err(err)?;
        volume_profile(&field, &radii, "square").map_err(err)?
    };
    let far = {
        let h = 0.25;
        let r_max = 50.0 * diam;
        let grid = Grid::covering(&set, h, (r_max * 1.002 + h) * body.outradius() + 2.0 * h)
            .map_err(err)?;
        let field = distance_field(&set, &body, &grid).map_err(err)?;
        let radii = geometric_radii(2.0 * diam, r_max, 4).map_err(err)?;
        volume_profile(&field, &radii, "square").map_err(err)?
    };
    let (mf, mc) = (kappa_monotonicity(&fine), kappa_monotonicity(&far));
    let kappa_far = *far.kappa.last().unwrap();
    let e = rel(kappa_far, limit);
    check(
        mf.holds && mc.holds && e <= 0.05,
        format!(
            "kappa excess over budgets {:.2e} (near) {:.2e} (far); kappa(50 diam) = {kappa_far:.4} vs n lambda(C) = {limit}, rel {e:.2e}",
            mf.max_excess, mc.max_excess
        ),
    )
}

fn zero_dimensional_contents() -> Outcome {
    let body = ConvexBody::disk64();
    let lam = body.volume();
    let mut ok = true;
    let mut parts = Vec::new();
    for k in [1usize, 3, 10] {
        let set = SetSpec::Points {
            points: separated_points(k),
        }
        .build::<2>()
        .map_err(err)?;
        let h = 1.0 / 512.0;
        let r_max = 1.6;
        let grid = Grid::covering(&set, h, (r_max * 1.002 + h) * body.outradius() + 2.0 * h)
            .map_err(err)?;
        let field = distance_field(&set, &body, &grid).map_err(err)?;
        let radii = geometric_radii(0.2, r_max, 8).map_err(err)?;
        let profile = volume_profile(&field, &radii, "disk64").map_err(err)?;
        let m = content_estimate(&profile, 0.0, ContentKind::Minkowski).map_err(err)?;
        let target = k as f64 * lam;
        let kappa = profile.kappa[0] / 2.0;
        let worst = rel(m.lower, target)
            .max(rel(m.upper, target))
            .max(rel(kappa, target));
        ok &= worst <= 0.02;
        parts.push(format!("k={k}: {worst:.1e}"));
    }
    check(ok, format!("worst relative error {}", parts.join(", ")))
}

fn divergence_sentinel() -> Outcome {
    let set = SetSpec::parse("square")
        .map_err(err)?
        .build::<2>()
        .map_err(err)?;
    let body = ConvexBody::disk64();
    let h = 1.0 / 512.0;
    let grid = Grid::covering(&set, h, 0.26).map_err(err)?;
    let field = distance_field(&set, &body, &grid).map_err(err)?;
    let radii = geometric_radii(4.0 * h, 0.25, 4).map_err(err)?;
    let profile = volume_profile(&field, &radii, "disk64").map_err(err)?;
    let sc = content_estimate(&profile, 0.5, ContentKind::SContent).map_err(err)?;
    let sm = content_estimate(&profile, 0.5, ContentKind::OuterMinkowski).map_err(err)?;
    check(
        sc.divergent && sm.divergent && sc.lower.is_infinite() && sm.lower.is_infinite(),
        format!(
            "S-content divergent {}, outer Minkowski divergent {}",
            sc.divergent, sm.divergent
        ),
    )
}

fn ledger_verdicts() -> Outcome {
    let cfg = JobConfig {
        set: "gasket:12".into(),
        method: Method::ClosedForm,
        s: vec![GASKET_DIMENSION],
        ..JobConfig::new(Command::Verify)
    };
    let exact = run(&cfg).map_err(err)?;
    let exact_ok = exact.verdict == Some(Verdict::Holds);

    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let (mut holds, mut inconclusive, mut violated) = (0, 0, 0);
    for _ in 0..5 {
        let cloud = random_cloud(&mut rng, 8);
        let body = random_body(&mut rng, 5);
        let h = 1.0 / 512.0;
        let r_max = 0.25;
        let grid = Grid::covering(&cloud, h, (r_max * 1.002 + h) * body.outradius() + 2.0 * h)
            .map_err(err)?;
        let field = distance_field(&cloud, &body, &grid).map_err(err)?;
        let sub = field.sublevel_volumes();
        let radii = geometric_radii(sub.resolution_guard(), r_max, 6).map_err(err)?;
        let profile = profile_from_sublevels(&sub, &radii, field.meta("random")).map_err(err)?;
        for s in [0.0, 1.0] {
            let reports = ledger_reports(&profile, s).map_err(err)?;
            let ledger = inequality_ledger(s, &reports, body.volume(), 0.0).map_err(err)?;
            for entry in [
                &ledger.lemma36,
                &ledger.lemma38,
                &ledger.thm39,
                &ledger.prop41,
            ] {
                match entry.verdict {
                    Verdict::Holds => holds += 1,
                    Verdict::Inconclusive => inconclusive += 1,
                    Verdict::Violated => violated += 1,
                }
            }
        }
    }
    check(
        exact_ok && violated == 0,
        format!(
            "closed-form gasket {:?}; grid pairs: {holds} holds, {inconclusive} inconclusive, {violated} violated",
            exact.verdict
        ),
    )
}

fn decomposition_additivity() -> Outcome {
    let a = sierpinski_gasket(10).map_err(err)?;
    let b = a.translate(&[3.0, 0.0]);
    let body = ConvexBody::disk64();
    let grid = DecompositionGrid {
        cell_size: 1.0 / 512.0,
        padding: 0.17,
        radii: geometric_radii(0.01, 0.16, 4).map_err(err)?,
    };
    let report =
        decomposition_check(&[a, b], GASKET_DIMENSION, &body, &grid, "disk64").map_err(err)?;
    let (gl, gu) = report.relative_gap;
    check(
        gl.abs() <= 0.05 && gu.abs() <= 0.05,
        format!(
            "union [{:.4}, {:.4}] vs sum [{:.4}, {:.4}], relative gaps {gl:.1e} / {gu:.1e}",
            report.union.lower, report.union.upper, report.sum_lower, report.sum_upper
        ),
    )
}

fn dimension_is_body_invariant(disk: &VolumeProfile) -> Outcome {
    let square = gasket_grid_profile(&ConvexBody::square(), "square", &disk.radii)?;
    let dd = dimension_estimate(disk).map_err(err)?.dimension;
    let ds = dimension_estimate(&square).map_err(err)?.dimension;
    check(
        (dd - GASKET_DIMENSION).abs() <= 0.05 && (dd - ds).abs() <= 0.05,
        format!("disk64 {dd:.4}, square {ds:.4}, log2 3 = {GASKET_DIMENSION:.4}"),
    )
}

fn deterministic_across_threads(single: &(VolumeProfile, Vec<u8>, f64)) -> Outcome {
    let multi = triangle_pipeline(8)?;
    check(
        single.1 == multi.1,
        format!(
            "{} CSV bytes, identical: {}",
            single.1.len(),
            single.1 == multi.1
        ),
    )
}

fn main() {
    let mut failures = 0;
    let mut report = |n: usize, name: &str, outcome: Outcome| match outcome {
        Ok(d) => println!("PASS {n:>2} {name}: {d}"),
        Err(d) => {
            failures += 1;
            println!("FAIL {n:>2} {name}: {d}");
        }
    };

    report(1, "gasket exact limits", gasket_limits_match_reference());
    report(2, "alpha-sweep envelope", alpha_sweep_reproduces_limits());
    let triangle = triangle_pipeline(1);
    match &triangle {
        Ok(t) => report(3, "triangle grid vs closed form", triangle_grid_matches(t)),
        Err(e) => report(3, "triangle grid vs closed form", Err(e.clone())),
    }
    let gasket_radii = geometric_radii(0.01, 0.2, 8).unwrap();
    let gasket = gasket_grid_profile(&ConvexBody::disk64(), "disk64", &gasket_radii);
    match &gasket {
        Ok(p) => report(4, "gasket grid vs closed form", gasket_grid_matches(p)),
        Err(e) => report(4, "gasket grid vs closed form", Err(e.clone())),
    }
    report(5, "Kneser property", kneser_property());
    report(
        6,
        "kappa monotone with limit n lambda(C)",
        kappa_behaviour(),
    );
    report(7, "zero-dimensional contents", zero_dimensional_contents());
    report(8, "divergence sentinel", divergence_sentinel());
    report(9, "inequality ledger", ledger_verdicts());
    report(10, "decomposition additivity", decomposition_additivity());
    match &gasket {
        Ok(p) => report(11, "dimension estimate", dimension_is_body_invariant(p)),
        Err(e) => report(11, "dimension estimate", Err(e.clone())),
    }
    match &triangle {
        Ok(t) => report(12, "determinism", deterministic_across_threads(t)),
        Err(e) => report(12, "determinism", Err(e.clone())),
    }

    if failures > 0 {
        println!("{failures} acceptance criteria failed");
        std::process::exit(1);
    }
}
