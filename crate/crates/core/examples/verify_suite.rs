// Runs the randomized property suite for the ball configuration and prints
// the worst residual of each check.

use std::path::Path;

use mmsde::config::ExperimentConfig;
use mmsde::harness::verify_suite;

fn main() -> mmsde::Result<()> {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("configs/ball_compare.toml");
    let mut cfg = ExperimentConfig::load(&path)?;
    cfg.verify_samples = 300;
    let report = verify_suite(&cfg);
    for p in &report.properties {
        println!("{} {}", p.name, if p.passed { "ok" } else { "FAILED" });
        for c in &p.checks {
            println!("    {:<28} worst {:>10.2e}  tol {:.0e}  n {}", c.name, c.worst, c.tolerance, c.samples);
        }
    }
    println!("overall: {}", if report.passed { "pass" } else { "fail" });
    Ok(())
}
