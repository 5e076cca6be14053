// Monte Carlo convergence of the Euler scheme and a Yosida comparison, run
// from the bundled half-line configuration with fewer trajectories.

use std::io;
use std::path::Path;

use mmsde::config::ExperimentConfig;
use mmsde::harness::{compare_schemes, run_convergence};

fn main() -> mmsde::Result<()> {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("configs/halfline.toml");
    let cfg = ExperimentConfig::load(&path)?.with_trajectories(200)?;

    let table = run_convergence(&cfg)?;
    table.to_table().write_csv(io::stdout().lock())?;

    let table = compare_schemes(&cfg)?;
    println!();
    table.to_table().write_csv(io::stdout().lock())
}
