use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

const SMALL: &str = r#"
[operator]
kind = "halfline"

[coefficient]
kind = "scalar"
value = 1.0

[driver]
h0 = [1.0]
[driver.z]
sigma = 1.0
jump_rate = 1.0
jump_law = { kind = "gaussian", mean = [-0.5], cov = [[0.25]] }

[experiment]
levels = [4, 16]
yosida_levels = [4, 16]
reference_factor = 4
trajectories = 20
verify_samples = 50
"#;

fn mmsde(args: &[&str], config: &Path, out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mmsde"))
        .args(args)
        .arg("--config")
        .arg(config)
        .arg("--out")
        .arg(out)
        .output()
        .expect("binary runs")
}

fn setup(text: &str) -> (TempDir, PathBuf) {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("config.toml");
    fs::write(&config, text).unwrap();
    (dir, config)
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn converge_writes_error_table() {
    let (dir, config) = setup(SMALL);
    let out = dir.path().join("run");
    let o = mmsde(&["converge"], &config, &out);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = fs::read_to_string(out.join("errors.csv")).unwrap();
    let header = text.lines().find(|l| !l.starts_with('#')).unwrap();
    assert_eq!(
        header,
        "level,scheme,checkpoint,mean_err,std_err,sup_err,p_gt_1e-1,p_gt_1e-2,n_traj"
    );
    assert!(text.starts_with("# reference=ORACLE"));
    assert_eq!(text.lines().filter(|l| l.starts_with("4,euler") || l.starts_with("16,euler")).count(), 2);
}

#[test]
fn compare_and_jsonl_format() {
    let (dir, config) = setup(SMALL);
    let out = dir.path().join("cmp");
    let o = Command::new(env!("CARGO_BIN_EXE_mmsde"))
        .args(["compare", "--format", "jsonl", "--trajectories", "5", "--config"])
        .arg(&config)
        .arg("--out")
        .arg(&out)
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", stderr(&o));
    let text = fs::read_to_string(out.join("errors.jsonl")).unwrap();
    let rows: Vec<serde_json::Value> = text
        .lines()
        .filter_map(|l| serde_json::from_str(l).ok())
        .filter(|v: &serde_json::Value| v.get("scheme").is_some())
        .collect();
    assert_eq!(rows.len(), 4);
    assert!(rows.iter().all(|r| r["n_traj"] == 5));
}

#[test]
fn simulate_writes_scheme_and_driver() {
    let (dir, config) = setup(SMALL);
    let out = dir.path().join("sim");
    let o = Command::new(env!("CARGO_BIN_EXE_mmsde"))
        .args(["simulate", "--scheme", "modified-yosida", "--level", "1", "--trajectory", "3", "--config"])
        .arg(&config)
        .arg("--out")
        .arg(&out)
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(out.join("modified_yosida_level1_traj3.csv").exists());
    assert!(out.join("driver_level1_traj3.csv").exists());
}

#[test]
fn verify_passes_and_writes_report() {
    let (dir, config) = setup(SMALL);
    let out = dir.path().join("v");
    let o = mmsde(&["verify"], &config, &out);
    assert!(o.status.success(), "{}", stderr(&o));
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("verify.json")).unwrap()).unwrap();
    assert_eq!(report["passed"], true);
}

#[test]
fn skorokhod_solves_a_path_file() {
    let (dir, config) = setup(SMALL);
    let input = dir.path().join("y.csv");
    fs::write(&input, "time,v_1\n0,1\n0.5,-0.5\n1,0.25\n").unwrap();
    let out = dir.path().join("sk");
    let o = Command::new(env!("CARGO_BIN_EXE_mmsde"))
        .args(["skorokhod", "--input"])
        .arg(&input)
        .arg("--config")
        .arg(&config)
        .arg("--out")
        .arg(&out)
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", stderr(&o));
    let text = fs::read_to_string(out.join("skorokhod.csv")).unwrap();
    assert!(text.lines().any(|l| !l.starts_with('#')));
}

#[test]
fn config_errors_exit_with_two() {
    let (dir, _) = setup(SMALL);
    let missing = mmsde(&["converge"], &dir.path().join("absent.toml"), dir.path());
    assert_eq!(missing.status.code(), Some(2));

    let (dir, config) = setup(&SMALL.replace("levels = [4, 16]\n", "levels = [16, 4]\n"));
    let o = mmsde(&["converge"], &config, dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("experiment.levels"), "{}", stderr(&o));

    let (dir, config) = setup(&SMALL.replace("trajectories = 20", "trajectories = 20\nsede = 1"));
    let o = mmsde(&["converge"], &config, dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("sede"), "{}", stderr(&o));
}

#[test]
fn non_convergence_exits_with_three() {
    let text = r#"
[operator]
kind = "box"
lo = [0.0]
hi = [1.0]

[projection]
kind = "elastic_iterated"
c = 1.0
max_iter = 5

[driver]
h0 = [0.5]
"#;
    let (dir, config) = setup(text);
    let input = dir.path().join("y.csv");
    fs::write(&input, "time,v_1\n0,0.5\n0.5,6.5\n").unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_mmsde"))
        .args(["skorokhod", "--input"])
        .arg(&input)
        .arg("--config")
        .arg(&config)
        .arg("--out")
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
}
