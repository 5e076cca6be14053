use std::fs::{self, File};
use std::io::{BufReader, BufWriter};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use mmsde::config::ExperimentConfig;
use mmsde::harness::{compare_schemes, run_convergence, simulate_trajectory, verify_suite};
use mmsde::paths::io::{read_step_path, Format, Table};
use mmsde::schemes::SchemeKind;
use mmsde::skorokhod::solve_step;
use mmsde::{Error, Result};

#[derive(Parser)]
#[command(name = "mmsde", version, about = "Skorokhod problems and SDEs driven by maximal monotone operators")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// TOML experiment configuration.
    #[arg(long)]
    config: PathBuf,
    /// Overrides `experiment.seed`.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides `experiment.out`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides `experiment.trajectories`.
    #[arg(long)]
    trajectories: Option<usize>,
    /// Overrides `experiment.format`.
    #[arg(long)]
    format: Option<Format>,
    /// Worker threads (0 = all cores); overrides `experiment.workers`.
    #[arg(long)]
    workers: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one deterministic Skorokhod problem for a step path read from a file.
    Skorokhod {
        #[command(flatten)]
        common: Common,
        /// Input path in CSV (`time,v_1..v_d`) or JSONL; format from the extension.
        #[arg(long)]
        input: PathBuf,
    },
    /// Emit one scheme trajectory and its driver.
    Simulate {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value = "euler")]
        scheme: SchemeKind,
        /// Index into `experiment.levels` (and `experiment.yosida_levels`).
        #[arg(long, default_value_t = 0)]
        level: usize,
        #[arg(long, default_value_t = 0)]
        trajectory: u64,
    },
    /// Monte Carlo convergence study of the Euler scheme; writes errors.csv.
    Converge {
        #[command(flatten)]
        common: Common,
    },
    /// Yosida and modified Yosida schemes against the Euler reference; writes errors.csv.
    Compare {
        #[command(flatten)]
        common: Common,
    },
    /// Randomized property suite; writes verify.json.
    Verify {
        #[command(flatten)]
        common: Common,
    },
}

fn load(common: &Common) -> Result<ExperimentConfig> {
    let mut cfg = ExperimentConfig::load(&common.config)?;
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    if let Some(out) = &common.out {
        cfg.out = out.clone();
    }
    if let Some(n) = common.trajectories {
        cfg.trajectories = n;
    }
    if let Some(f) = common.format {
        cfg.format = f;
    }
    if let Some(w) = common.workers {
        cfg.workers = w;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn write_table(table: &Table, dir: &Path, stem: &str, format: Format) -> Result<PathBuf> {
    fs::create_dir_all(dir)?;
    let path = dir.join(format!("{stem}.{}", format.extension()));
    table.write(BufWriter::new(File::create(&path)?), format)?;
    Ok(path)
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Skorokhod { common, input } => {
            let cfg = load(&common)?;
            let format = match input.extension().and_then(|e| e.to_str()) {
                Some("jsonl") => Format::Jsonl,
                _ => Format::Csv,
            };
            let file = File::open(&input).map_err(|e| Error::config("--input", format!("{}: {e}", input.display())))?;
            let y = read_step_path(BufReader::new(file), format)?;
            let sol = solve_step(&cfg.operator, &cfg.projection, &y, cfg.flow_substeps)?;
            let mut table = sol.to_table();
            table.metadata.extend(cfg.labels.iter().cloned());
            let path = write_table(&table, &cfg.out, "skorokhod", cfg.format)?;
            println!("wrote {}", path.display());
        }
        Command::Simulate {
            common,
            scheme,
            level,
            trajectory,
        } => {
            let cfg = load(&common)?;
            let out = simulate_trajectory(&cfg, scheme, level, trajectory)?;
            let stem = format!("{}_level{level}_traj{trajectory}", scheme.name());
            let path = write_table(&out.to_table(&cfg.labels), &cfg.out, &stem, cfg.format)?;
            let driver = write_table(&out.driver.to_table(), &cfg.out, &format!("driver_level{level}_traj{trajectory}"), cfg.format)?;
            println!("wrote {} and {}", path.display(), driver.display());
        }
        Command::Converge { common } => {
            let cfg = load(&common)?;
            let table = run_convergence(&cfg)?;
            let path = table.write_to_dir(&cfg.out, cfg.format)?;
            println!("{}\nwrote {}", table.reference, path.display());
        }
        Command::Compare { common } => {
            let cfg = load(&common)?;
            let table = compare_schemes(&cfg)?;
            let path = table.write_to_dir(&cfg.out, cfg.format)?;
            println!("{}\nwrote {}", table.reference, path.display());
        }
        Command::Verify { common } => {
            let cfg = load(&common)?;
            let report = verify_suite(&cfg);
            fs::create_dir_all(&cfg.out)?;
            let path = cfg.out.join("verify.json");
            fs::write(&path, report.to_json() + "\n")?;
            for p in &report.properties {
                println!("{:<18} {}", p.name, if p.passed { "pass" } else { "FAIL" });
            }
            println!("wrote {}", path.display());
            return Ok(report.passed);
        }
    }
    Ok(true)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
