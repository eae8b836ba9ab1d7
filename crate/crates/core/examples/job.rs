//! Running the CLI pipelines from code: a profile and a closed-form
//! verification, with the config recovered from the emitted metadata.

use aniso_content::job::{run, Command, JobConfig};
use aniso_content::{Method, Result};

pub fn run_example() -> Result<()> {
    let dir = tempfile::tempdir()?;
    let profile = JobConfig {
        set: "points:3".into(),
        body: "square".into(),
        grid_h: Some(1.0 / 128.0),
        rmax: Some(0.3),
        out: Some(dir.path().to_path_buf()),
        ..JobConfig::new(Command::Profile)
    };
    let outcome = run(&profile)?;
    print!("{}", outcome.stdout);
    let meta = std::fs::read_to_string(dir.path().join("profile.json"))?;
    assert_eq!(JobConfig::from_metadata(&meta)?, profile);

    let verify = JobConfig {
        set: "gasket:12".into(),
        method: Method::ClosedForm,
        ..JobConfig::new(Command::Verify)
    };
    let outcome = run(&verify)?;
    println!(
        "closed-form gasket verification: {:?} (exit {})",
        outcome.verdict, outcome.exit_code
    );
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<()> {
    run_example()
}
