//! The inequality ledger, the Kneser check on V and kappa monotonicity, on an
//! exact profile and on a grid profile, with a step-corrupted negative control.

use aniso_content::closed_form::{gasket_volume_profile, GasketProfile};
use aniso_content::contents::{
    inequality_ledger, kappa_monotonicity, kneser_check, ledger_reports, ExactVolume, StepCorrupted,
};
use aniso_content::{
    distance_field, geometric_radii, volume_profile, ConvexBody, Grid, Result, SetSpec,
};

pub fn run_example() -> Result<()> {
    let body = ConvexBody::square();
    let g = GasketProfile::new(&body);
    let k = g.hole_radius();
    let exact = ExactVolume {
        f: |r: f64| g.volume(r).unwrap(),
        range: (k * 2f64.powi(-30), 4.0 * k),
    };
    let clean = kneser_check(&exact, 2, 10_000, 1)?;
    println!(
        "gasket Kneser: {} violations, max excess {:.3e}",
        clean.violations.len(),
        clean.max_excess
    );
    let corrupted = StepCorrupted {
        inner: exact,
        at: k * 2f64.powi(-10),
        height: 0.05,
    };
    let bad = kneser_check(&corrupted, 2, 10_000, 1)?;
    println!("with a step: {} violations", bad.violations.len());

    let radii = geometric_radii(k * 2f64.powi(-20), k, 4)?;
    let profile = gasket_volume_profile(&g, &radii, "square")?;
    println!(
        "exact kappa monotone: {}",
        kappa_monotonicity(&profile).holds
    );

    let cloud =
        SetSpec::parse(r#"{"kind":"points","points":[[0,0],[0.4,0.1],[0.2,0.5],[0.9,0.3]]}"#)?
            .build::<2>()?;
    let grid = Grid::covering(&cloud, 1.0 / 512.0, 0.5)?;
    let field = distance_field(&cloud, &body, &grid)?;
    let radii = geometric_radii(0.04, 0.32, 6)?;
    let profile = volume_profile(&field, &radii, "square")?;
    let reports = ledger_reports(&profile, 0.0)?;
    let ledger = inequality_ledger(0.0, &reports, body.volume(), 0.0)?;
    for (name, entry) in [
        ("chain", &ledger.lemma36),
        ("(n-s)/n bound", &ledger.lemma38),
        ("isoperimetric", &ledger.thm39),
        ("perimeter", &ledger.prop41),
    ] {
        println!("{name:>14}: {:?}", entry.verdict);
        for c in &entry.checks {
            println!(
                "        {}: {:.4} <= {:.4} (budget {:.2e})",
                c.name, c.small, c.large, c.budget
            );
        }
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<()> {
    run_example()
}
