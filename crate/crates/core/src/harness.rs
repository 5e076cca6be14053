//! Monte Carlo studies and property suites built on an [`ExperimentConfig`].
//!
//! Trajectories are independent: each one simulates its drivers from the
//! substreams of `(seed, trajectory)`, so results do not depend on the number
//! of worker threads. Per-trajectory errors are collected in trajectory order
//! and reduced sequentially, which keeps tables byte-identical across runs.

use std::fs;
use std::path::{Path, PathBuf};

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::ExperimentConfig;
use crate::drivers::{simulate, DriverRealization};
use crate::operators::{flow, resolve, yosida_a, yosida_j, yosida_resolve, MonotoneOperator};
use crate::paths::io::{Cell, Format, Table};
use crate::paths::{grid_distance, uniform_partition, Partition, StepPath};
use crate::projections::Projection;
use crate::rng::{substream, Purpose};
use crate::schemes::{
    euler_scheme, modified_yosida_scheme, run_truncated, yosida_scheme, Coefficient, SchemeKind, SchemeOutput,
};
use crate::skorokhod::{comparison_slack, reflect_halfline_oracle, solve_step, verify_solution};
use crate::{Error, Matrix, Point, Result, MEMBERSHIP_TOL};

pub const ERROR_COLUMNS: [&str; 9] = [
    "level",
    "scheme",
    "checkpoint",
    "mean_err",
    "std_err",
    "sup_err",
    "p_gt_1e-1",
    "p_gt_1e-2",
    "n_traj",
];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ErrorRow {
    /// Grid intervals for convergence studies, the Yosida index for comparisons.
    pub level: f64,
    pub scheme: SchemeKind,
    pub checkpoint: f64,
    pub mean_err: f64,
    pub std_err: f64,
    /// Mean over trajectories of the grid-sup error.
    pub sup_err: f64,
    pub p_gt_1e1: f64,
    pub p_gt_1e2: f64,
    pub n_traj: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ErrorTable {
    /// What the errors are measured against; starts with `ORACLE` or `SELF-REFERENCE`.
    pub reference: String,
    pub metadata: Vec<(String, String)>,
    pub rows: Vec<ErrorRow>,
}

impl ErrorTable {
    pub fn is_oracle(&self) -> bool {
        self.reference.starts_with("ORACLE")
    }

    pub fn get(&self, level: f64, scheme: SchemeKind, checkpoint: f64) -> Option<&ErrorRow> {
        self.rows
            .iter()
            .find(|r| r.level == level && r.scheme == scheme && r.checkpoint == checkpoint)
    }

    /// Rows of one scheme at one checkpoint, in level order.
    pub fn series(&self, scheme: SchemeKind, checkpoint: f64) -> Vec<&ErrorRow> {
        self.rows
            .iter()
            .filter(|r| r.scheme == scheme && r.checkpoint == checkpoint)
            .collect()
    }

    pub fn to_table(&self) -> Table {
        let mut metadata = vec![("reference".to_string(), self.reference.clone())];
        metadata.extend(self.metadata.iter().cloned());
        let rows = self
            .rows
            .iter()
            .map(|r| {
                vec![
                    level_cell(r.level),
                    Cell::Text(r.scheme.name().into()),
                    Cell::Num(r.checkpoint),
                    Cell::Num(r.mean_err),
                    Cell::Num(r.std_err),
                    Cell::Num(r.sup_err),
                    Cell::Num(r.p_gt_1e1),
                    Cell::Num(r.p_gt_1e2),
                    Cell::Int(r.n_traj as i64),
                ]
            })
            .collect();
        Table {
            metadata,
            columns: ERROR_COLUMNS.iter().map(|s| s.to_string()).collect(),
            rows,
        }
    }

    /// Writes `errors.csv` (or `errors.jsonl`) into `dir`.
    pub fn write_to_dir(&self, dir: &Path, format: Format) -> Result<PathBuf> {
        fs::create_dir_all(dir)?;
        let path = dir.join(format!("errors.{}", format.extension()));
        let file = fs::File::create(&path)?;
        self.to_table().write(std::io::BufWriter::new(file), format)?;
        Ok(path)
    }
}

fn level_cell(level: f64) -> Cell {
    if level.fract() == 0.0 && level.abs() < 1e15 {
        Cell::Int(level as i64)
    } else {
        Cell::Num(level)
    }
}

/// Maps `f` over trajectory indices on `workers` threads (0 = all cores),
/// returning results in index order.
pub fn par_map<T, F>(workers: usize, n: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(u64) -> Result<T> + Sync + Send,
{
    if workers == 1 {
        return (0..n as u64).map(f).collect();
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::invalid(format!("cannot start worker pool: {e}")))?;
    pool.install(|| (0..n as u64).into_par_iter().map(&f).collect())
}

/// Uniform grid with `reference_intervals()` intervals.
pub fn reference_partition(cfg: &ExperimentConfig) -> Result<Partition> {
    uniform_partition(cfg.horizon, cfg.reference_intervals())
}

/// Level grids as exact subsamples of the reference grid.
pub fn level_partitions(cfg: &ExperimentConfig) -> Result<Vec<Partition>> {
    let reference = reference_partition(cfg)?;
    let total = cfg.reference_intervals();
    cfg.levels.iter().map(|&l| reference.subsample(total / l)).collect()
}

/// Runs one scheme, going through the truncation wrapper when the
/// coefficient is only locally Lipschitz.
pub fn run_scheme(
    cfg: &ExperimentConfig,
    kind: SchemeKind,
    yosida_n: Option<f64>,
    driver: &DriverRealization,
) -> Result<SchemeOutput> {
    let op = &cfg.operator;
    let m = cfg.flow_substeps;
    let n = || yosida_n.ok_or_else(|| Error::invalid("Yosida schemes need an index n"));
    let run = |c: &Coefficient| match kind {
        SchemeKind::Euler => euler_scheme(op, &cfg.projection, c, driver, m),
        SchemeKind::Yosida => yosida_scheme(op, n()?, c, driver, m),
        SchemeKind::ModifiedYosida => modified_yosida_scheme(op, &cfg.projection, n()?, c, driver, m),
    };
    match cfg.truncation {
        Some(level) if !cfg.coefficient.is_globally_lipschitz() => {
            Ok(run_truncated(&cfg.coefficient, level, run)?.output)
        }
        _ => run(&cfg.coefficient),
    }
}

/// One scheme trajectory at grid level `level` (an index into `levels`; the
/// Yosida index is the entry of `yosida_levels` with the same position).
pub fn simulate_trajectory(
    cfg: &ExperimentConfig,
    kind: SchemeKind,
    level: usize,
    trajectory: u64,
) -> Result<SchemeOutput> {
    let parts = level_partitions(cfg)?;
    let part = parts.get(level).ok_or_else(|| {
        Error::config("--level", format!("level index {level} out of range (0..{})", parts.len()))
    })?;
    let n = match kind {
        SchemeKind::Euler => None,
        _ => Some(*cfg.yosida_levels.get(level).ok_or_else(|| {
            Error::config("experiment.yosida_levels", format!("no Yosida index at position {level}"))
        })?),
    };
    let driver = simulate(&cfg.driver, part, cfg.seed, trajectory)?;
    run_scheme(cfg, kind, n, &driver)
}

fn at(path: &StepPath, t: f64, horizon: f64) -> &Point {
    path.eval(t + 1e-12 * horizon)
}

/// Whether the closed-form half-line reflection applies: `A = ∂I_{[0,∞)}`,
/// classical projection and a state-independent coefficient.
pub fn oracle_applies(cfg: &ExperimentConfig) -> bool {
    cfg.operator.is_halfline_indicator()
        && cfg.projection == Projection::Classical
        && cfg.coefficient.constant_value().is_some()
}

fn oracle_reference(cfg: &ExperimentConfig, driver: &DriverRealization) -> Result<StepPath> {
    let f = cfg
        .coefficient
        .constant_value()
        .ok_or_else(|| Error::invalid("oracle needs a constant coefficient"))?;
    let z0 = driver.z.initial().clone();
    let y = driver.h.add(&driver.z.map(|z| f * (z - &z0)))?;
    Ok(reflect_halfline_oracle(&y)?.x)
}

struct TrajectoryErrors {
    /// `[level][checkpoint]`.
    checkpoint: Vec<Vec<f64>>,
    /// `[level]`.
    sup: Vec<f64>,
}

fn aggregate(
    per_traj: &[TrajectoryErrors],
    level: usize,
    checkpoint: usize,
    label: f64,
    scheme: SchemeKind,
    t: f64,
) -> ErrorRow {
    let n = per_traj.len();
    let errs: Vec<f64> = per_traj.iter().map(|e| e.checkpoint[level][checkpoint]).collect();
    let mean = errs.iter().sum::<f64>() / n as f64;
    let var = if n > 1 {
        errs.iter().map(|e| (e - mean) * (e - mean)).sum::<f64>() / (n - 1) as f64
    } else {
        0.0
    };
    let frac = |eps: f64| errs.iter().filter(|&&e| e > eps).count() as f64 / n as f64;
    ErrorRow {
        level: label,
        scheme,
        checkpoint: t,
        mean_err: mean,
        std_err: var.sqrt(),
        sup_err: per_traj.iter().map(|e| e.sup[level]).sum::<f64>() / n as f64,
        p_gt_1e1: frac(1e-1),
        p_gt_1e2: frac(1e-2),
        n_traj: n,
    }
}

fn base_metadata(cfg: &ExperimentConfig) -> Vec<(String, String)> {
    let mut meta = vec![
        ("seed".to_string(), cfg.seed.to_string()),
        ("trajectories".to_string(), cfg.trajectories.to_string()),
        ("horizon".to_string(), format!("{:?}", cfg.horizon)),
        ("flow_substeps".to_string(), cfg.flow_substeps.to_string()),
        (
            "checkpoints".to_string(),
            cfg.checkpoints
                .iter()
                .map(|c| format!("{:?}{}", c.t, if c.continuity { "" } else { "(jump-possible)" }))
                .collect::<Vec<_>>()
                .join(" "),
        ),
    ];
    meta.extend(cfg.labels.iter().cloned());
    meta
}

/// Euler scheme errors across `levels` against the half-line oracle when it
/// applies, otherwise against the Euler scheme on the reference grid.
pub fn run_convergence(cfg: &ExperimentConfig) -> Result<ErrorTable> {
    cfg.validate()?;
    let reference_grid = reference_partition(cfg)?;
    let parts = level_partitions(cfg)?;
    let oracle = oracle_applies(cfg);
    let t_end = cfg.horizon;

    let per_traj = par_map(cfg.workers, cfg.trajectories, |j| {
        let fine = simulate(&cfg.driver, &reference_grid, cfg.seed, j)?;
        let reference = if oracle {
            oracle_reference(cfg, &fine)?
        } else {
            run_scheme(cfg, SchemeKind::Euler, None, &fine)?.x
        };
        let mut out = TrajectoryErrors {
            checkpoint: Vec::with_capacity(parts.len()),
            sup: Vec::with_capacity(parts.len()),
        };
        for part in &parts {
            let driver = simulate(&cfg.driver, part, cfg.seed, j)?;
            let x = run_scheme(cfg, SchemeKind::Euler, None, &driver)?.x;
            out.checkpoint.push(
                cfg.checkpoints
                    .iter()
                    .map(|c| (at(&x, c.t, t_end) - at(&reference, c.t, t_end)).norm())
                    .collect(),
            );
            out.sup.push(grid_distance(&x, &reference, &driver.grid, t_end));
        }
        Ok(out)
    })?;

    let mut rows = Vec::new();
    for (li, &level) in cfg.levels.iter().enumerate() {
        for (ci, c) in cfg.checkpoints.iter().enumerate() {
            rows.push(aggregate(&per_traj, li, ci, level as f64, SchemeKind::Euler, c.t));
        }
    }
    let n_ref = cfg.reference_intervals();
    let reference = if oracle {
        format!("ORACLE half-line reflection of H + f·Z on the uniform grid with {n_ref} intervals")
    } else {
        format!("SELF-REFERENCE euler scheme on the uniform grid with {n_ref} intervals")
    };
    let mut metadata = base_metadata(cfg);
    metadata.push((
        "levels".into(),
        cfg.levels.iter().map(|l| l.to_string()).collect::<Vec<_>>().join(" "),
    ));
    Ok(ErrorTable {
        reference,
        metadata,
        rows,
    })
}

/// Yosida and modified Yosida schemes against the Euler scheme on the
/// reference grid. Entry `i` of `yosida_levels` runs on the grid of entry `i`
/// of `levels`. Checkpoint errors are reported at continuity checkpoints;
/// `sup_err` is the grid-sup of `J_n(Xⁿ) − X̄` for the Yosida scheme and of
/// `Xⁿ − X̄` for the modified scheme.
pub fn compare_schemes(cfg: &ExperimentConfig) -> Result<ErrorTable> {
    cfg.validate()?;
    if cfg.yosida_levels.len() != cfg.levels.len() {
        return Err(Error::config(
            "experiment.yosida_levels",
            format!(
                "needs one entry per grid level ({} given, {} levels)",
                cfg.yosida_levels.len(),
                cfg.levels.len()
            ),
        ));
    }
    let checkpoints: Vec<_> = cfg.checkpoints.iter().filter(|c| c.continuity).copied().collect();
    if checkpoints.is_empty() {
        return Err(Error::config(
            "experiment.checkpoints",
            "scheme comparison needs at least one continuity checkpoint",
        ));
    }
    let reference_grid = reference_partition(cfg)?;
    let parts = level_partitions(cfg)?;
    let t_end = cfg.horizon;
    let kinds = [SchemeKind::Yosida, SchemeKind::ModifiedYosida];

    let per_traj = par_map(cfg.workers, cfg.trajectories, |j| {
        let fine = simulate(&cfg.driver, &reference_grid, cfg.seed, j)?;
        let reference = run_scheme(cfg, SchemeKind::Euler, None, &fine)?.x;
        // Index `2 * level + scheme`.
        let mut out = TrajectoryErrors {
            checkpoint: Vec::new(),
            sup: Vec::new(),
        };
        for (part, &n) in parts.iter().zip(&cfg.yosida_levels) {
            let driver = simulate(&cfg.driver, part, cfg.seed, j)?;
            for kind in kinds {
                let run = run_scheme(cfg, kind, Some(n), &driver)?;
                out.checkpoint.push(
                    checkpoints
                        .iter()
                        .map(|c| (at(&run.x, c.t, t_end) - at(&reference, c.t, t_end)).norm())
                        .collect(),
                );
                let measured = match kind {
                    SchemeKind::Yosida => run.resolvent_path(&cfg.operator)?,
                    _ => run.x,
                };
                out.sup.push(grid_distance(&measured, &reference, &driver.grid, t_end));
            }
        }
        Ok(out)
    })?;

    let mut rows = Vec::new();
    for (li, &n) in cfg.yosida_levels.iter().enumerate() {
        for (ki, &kind) in kinds.iter().enumerate() {
            for (ci, c) in checkpoints.iter().enumerate() {
                rows.push(aggregate(&per_traj, 2 * li + ki, ci, n, kind, c.t));
            }
        }
    }
    let mut metadata = base_metadata(cfg);
    metadata.push((
        "grid_levels".into(),
        cfg.levels.iter().map(|l| l.to_string()).collect::<Vec<_>>().join(" "),
    ));
    Ok(ErrorTable {
        reference: format!(
            "SELF-REFERENCE euler scheme on the uniform grid with {} intervals",
            cfg.reference_intervals()
        ),
        metadata,
        rows,
    })
}

/// One inequality checked over many samples.
#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    /// Largest observed `lhs − rhs`; the check passes when it is `≤ tolerance`.
    pub worst: f64,
    pub tolerance: f64,
    pub samples: usize,
    pub passed: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct PropertyResult {
    pub name: String,
    pub passed: bool,
    pub checks: Vec<Check>,
    /// Error message when the property could not be evaluated.
    pub error: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct VerifyReport {
    pub seed: u64,
    pub passed: bool,
    pub properties: Vec<PropertyResult>,
}

impl VerifyReport {
    pub fn property(&self, name: &str) -> Option<&PropertyResult> {
        self.properties.iter().find(|p| p.name == name)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

struct Checker {
    checks: Vec<Check>,
}

impl Checker {
    fn new() -> Self {
        Checker { checks: Vec::new() }
    }

    /// Records `excess = lhs − rhs` for the named check.
    fn record(&mut self, name: &str, excess: f64, tolerance: f64) {
        let idx = match self.checks.iter().position(|c| c.name == name) {
            Some(i) => i,
            None => {
                self.checks.push(Check {
                    name: name.into(),
                    worst: f64::NEG_INFINITY,
                    tolerance,
                    samples: 0,
                    passed: true,
                });
                self.checks.len() - 1
            }
        };
        let c = &mut self.checks[idx];
        c.samples += 1;
        if excess > c.worst || excess.is_nan() {
            c.worst = excess;
        }
        c.passed = c.worst <= c.tolerance;
    }

    fn finish(mut self, name: &str, outcome: Result<()>) -> PropertyResult {
        for c in &mut self.checks {
            if c.worst == f64::NEG_INFINITY {
                c.worst = 0.0;
            }
            c.passed = c.worst <= c.tolerance;
        }
        let error = outcome.err().map(|e| e.to_string());
        PropertyResult {
            name: name.into(),
            passed: error.is_none() && self.checks.iter().all(|c| c.passed),
            checks: self.checks,
            error,
        }
    }
}

fn gaussian(rng: &mut ChaCha8Rng, d: usize, scale: f64) -> Point {
    Point::from_iterator(d, (0..d).map(|_| { let v: f64 = StandardNormal.sample(rng); scale * v }))
}

fn sample_point(rng: &mut ChaCha8Rng, cfg: &ExperimentConfig) -> Point {
    &cfg.driver.h0 + gaussian(rng, cfg.driver.dimension, 2.0)
}

const YOSIDA_GRID: [f64; 4] = [1.0, 10.0, 100.0, 1000.0];

fn check_resolvent(cfg: &ExperimentConfig, rng: &mut ChaCha8Rng, ck: &mut Checker) -> Result<()> {
    let op = &cfg.operator;
    let exact = op.has_closed_form_resolvent();
    let tol = if exact { 1e-12 } else { 1e-8 };
    for _ in 0..cfg.verify_samples {
        let lambda = 10f64.powf(rng.random_range(-2.0..1.0));
        let z = sample_point(rng, cfg);
        let w = sample_point(rng, cfg);
        let jz = resolve(op, lambda, &z)?;
        let jw = resolve(op, lambda, &w)?;
        let gap = (&z - &w).norm();
        ck.record("non_expansive", (&jz - &jw).norm() - gap, tol * (1.0 + gap));
        ck.record("range_in_domain", op.domain().distance(&jz)?, MEMBERSHIP_TOL);
        let a = (&z - &jz) / lambda;
        let b = (&w - &jw) / lambda;
        let scale = 1.0 + (a.norm() + b.norm()) * gap;
        ck.record("monotone_graph", -(a - b).dot(&(&jz - &jw)), tol * scale);
        let mu = lambda * rng.random_range(0.05..1.0);
        let r = mu / lambda;
        let again = resolve(op, mu, &(&z * r + &jz * (1.0 - r)))?;
        ck.record("resolvent_identity", (again - &jz).norm(), if exact { 1e-9 } else { 1e-6 } * (1.0 + z.norm()));
    }
    Ok(())
}

fn check_yosida(cfg: &ExperimentConfig, rng: &mut ChaCha8Rng, ck: &mut Checker) -> Result<()> {
    let op = &cfg.operator;
    let tol = if op.has_closed_form_resolvent() { 1e-10 } else { 1e-7 };
    for i in 0..cfg.verify_samples {
        let n = YOSIDA_GRID[i % YOSIDA_GRID.len()];
        let z = sample_point(rng, cfg);
        let w = sample_point(rng, cfg);
        let gap = (&z - &w).norm();
        let jz = yosida_j(op, n, &z)?;
        let jw = yosida_j(op, n, &w)?;
        ck.record("a_resolvent_non_expansive", (&jz - &jw).norm() - gap, tol * (1.0 + gap));
        let az = yosida_a(op, n, &z)?;
        let aw = yosida_a(op, n, &w)?;
        ck.record("b_lipschitz_n", (&az - &aw).norm() - n * gap, tol * (1.0 + n * gap));
        ck.record("d_monotone", -(&z - &w).dot(&(&az - &aw)), tol * (1.0 + n * gap * gap));

        let mu = 10f64.powf(rng.random_range(-3.0..0.0));
        let y = yosida_resolve(op, n, mu, &z)?;
        let back = &y + yosida_a(op, n, &y)? * mu - &z;
        ck.record("resolvent_of_yosida", back.norm(), 1e-9 * (1.0 + z.norm()));

        let p = op.project_domain(&z)?;
        let gaps = YOSIDA_GRID
            .iter()
            .map(|&m| Ok((yosida_j(op, m, &z)? - &p).norm()))
            .collect::<Result<Vec<f64>>>()?;
        let rise = gaps.windows(2).map(|g| g[1] - g[0]).fold(f64::NEG_INFINITY, f64::max);
        ck.record("c_gap_non_increasing", rise, 1e-12 * (1.0 + z.norm()));
        if op.is_indicator() {
            ck.record("c_gap_zero_for_indicator", gaps.iter().copied().fold(0.0, f64::max), 0.0);
        }
    }
    Ok(())
}

fn check_projection(cfg: &ExperimentConfig, rng: &mut ChaCha8Rng, ck: &mut Checker) -> Result<()> {
    let op = &cfg.operator;
    let proj = &cfg.projection;
    let fixed_tol = match proj {
        Projection::ElasticIterated { tol, .. } => tol.max(1e-12),
        _ => 1e-12,
    };
    for _ in 0..cfg.verify_samples {
        let z = sample_point(rng, cfg);
        let w = sample_point(rng, cfg);
        let pz = proj.apply(op, &z)?;
        let pw = proj.apply(op, &w)?;
        let gap = (&z - &w).norm();
        ck.record("lipschitz_1", (&pz - &pw).norm() - gap, 1e-10);
        let inside = op.project_domain(&z)?;
        ck.record("identity_on_domain", (proj.apply(op, &inside)? - &inside).norm(), fixed_tol * (1.0 + inside.norm()));
        if proj.maps_into_domain() {
            ck.record("range_in_domain", op.domain().distance(&pz)?, MEMBERSHIP_TOL);
        }
        if *proj == Projection::Classical {
            let d = &pz - &pw;
            ck.record("firmly_non_expansive", d.norm_squared() - d.dot(&(&z - &w)), 1e-10);
        }
    }
    Ok(())
}

fn check_flow(cfg: &ExperimentConfig, rng: &mut ChaCha8Rng, ck: &mut Checker) -> Result<()> {
    let linear = MonotoneOperator::linear_monotone(Matrix::identity(1, 1))?;
    let one = Point::from_element(1, 1.0);
    for m in [10, 100, 1000] {
        let v = flow(&linear, &one, 1.0, m)?[0];
        ck.record("exponential_oracle", (v - (-1.0f64).exp()).abs() - 2.0 / m as f64, 0.0);
    }
    let op = &cfg.operator;
    let m = cfg.flow_substeps;
    for _ in 0..cfg.verify_samples.div_ceil(10) {
        let alpha = op.project_domain(&sample_point(rng, cfg))?;
        let s = rng.random_range(0.0..1.0);
        let whole = flow(op, &alpha, 2.0 * s, 2 * m)?;
        let split = flow(op, &flow(op, &alpha, s, m)?, s, m)?;
        ck.record("semigroup", (whole - &split).norm(), 1e-12 * (1.0 + alpha.norm()));
        ck.record("range_in_domain", op.domain().distance(&split)?, MEMBERSHIP_TOL);
        ck.record("zero_time", (flow(op, &alpha, 0.0, m)? - &alpha).norm(), 0.0);
    }
    Ok(())
}

/// A random step path with `y_0` in the domain.
fn random_input(cfg: &ExperimentConfig, rng: &mut ChaCha8Rng, partition: &Partition) -> Result<StepPath> {
    let op = &cfg.operator;
    let d = op.dimension();
    let mut y = op.project_domain(&sample_point(rng, cfg))?;
    let mut values = vec![y.clone()];
    for _ in 1..partition.len() {
        if rng.random_bool(0.7) {
            y += gaussian(rng, d, 0.5);
        }
        values.push(y.clone());
    }
    StepPath::new(partition.clone(), values)
}

fn random_partition(rng: &mut ChaCha8Rng, max_steps: usize) -> Result<Partition> {
    let steps = rng.random_range(1..=max_steps);
    let mut t = 0.0;
    let mut times = vec![0.0];
    for _ in 0..steps {
        t += rng.random_range(0.01..0.2);
        times.push(t);
    }
    Partition::new(times)
}

fn check_skorokhod_oracle(rng: &mut ChaCha8Rng, ck: &mut Checker) -> Result<()> {
    let hl = MonotoneOperator::indicator_halfline();
    for _ in 0..100 {
        let part = random_partition(rng, 50)?;
        let mut v = rng.random_range(0.0..2.0);
        let mut values = vec![v];
        for _ in 1..part.len() {
            v += 1.5 * rng.sample::<f64, _>(StandardNormal);
            values.push(v);
        }
        let y = StepPath::scalar(part.clone(), &values)?;
        let a = solve_step(&hl, &Projection::Classical, &y, 4)?;
        let b = reflect_halfline_oracle(&y)?;
        ck.record("grid_sup_error", grid_distance(&a.x, &b.x, &part, part.horizon()), 1e-10);
    }
    Ok(())
}

fn graph_pairs(cfg: &ExperimentConfig, rng: &mut ChaCha8Rng) -> Result<Vec<(Point, Point)>> {
    let op = &cfg.operator;
    let mut pairs = Vec::new();
    if let Some(beta) = op.graph_sample(&cfg.driver.h0) {
        pairs.push((cfg.driver.h0.clone(), beta));
    }
    for _ in 0..16 {
        let z = sample_point(rng, cfg);
        if op.domain().distance(&z)? == 0.0 {
            if let Some(beta) = op.graph_sample(&z) {
                pairs.push((z, beta));
            }
        }
    }
    Ok(pairs)
}

fn check_solution(cfg: &ExperimentConfig, rng: &mut ChaCha8Rng, ck: &mut Checker) -> Result<()> {
    let op = &cfg.operator;
    let proj = &cfg.projection;
    for _ in 0..(cfg.verify_samples / 50).max(20) {
        let part = random_partition(rng, 30)?;
        let y = random_input(cfg, rng, &part)?;
        let sol = solve_step(op, proj, &y, cfg.flow_substeps)?;
        let pairs = graph_pairs(cfg, rng)?;
        let report = verify_solution(op, proj, &sol, &pairs, 1e-9)?;
        ck.record("additivity", report.additivity_residual, 1e-12);
        ck.record("initial_k", report.initial_k, 0.0);
        ck.record("decomposition", report.decomposition_residual, 1e-9);
        ck.record("jump_condition", report.jump_residual, 1e-12);
        ck.record("jump_bound", report.jump_bound_violations as f64, 0.0);
        ck.record("monotonicity", -report.min_monotonicity, 1e-9);
        if proj.maps_into_domain() {
            ck.record("domain", report.domain_residual, MEMBERSHIP_TOL);
        }
    }
    Ok(())
}

fn check_comparison(cfg: &ExperimentConfig, rng: &mut ChaCha8Rng, ck: &mut Checker) -> Result<()> {
    let op = &cfg.operator;
    let proj = &cfg.projection;
    for _ in 0..(cfg.verify_samples / 5).max(20) {
        let part = random_partition(rng, 20)?;
        let a = solve_step(op, proj, &random_input(cfg, rng, &part)?, cfg.flow_substeps)?;
        let b = solve_step(op, proj, &random_input(cfg, rng, &part)?, cfg.flow_substeps)?;
        let slack = comparison_slack(op, &a, &b)?;
        ck.record("interval_sum", -slack.interval_sum, 1e-8);
        ck.record("distance_bound", -slack.distance_bound, 1e-8);
    }
    Ok(())
}

/// Randomized property checks on the configured operator and projection.
///
/// Every name in `cfg.verify` contributes one entry; failures and evaluation
/// errors are reported, never raised.
pub fn verify_suite(cfg: &ExperimentConfig) -> VerifyReport {
    let mut properties = Vec::with_capacity(cfg.verify.len());
    for (idx, name) in cfg.verify.iter().enumerate() {
        let mut rng = substream(cfg.seed, 0, Purpose::PropertySamples, idx as u64);
        let mut ck = Checker::new();
        let outcome = match name.as_str() {
            "resolvent" => check_resolvent(cfg, &mut rng, &mut ck),
            "yosida" => check_yosida(cfg, &mut rng, &mut ck),
            "projection" => check_projection(cfg, &mut rng, &mut ck),
            "flow" => check_flow(cfg, &mut rng, &mut ck),
            "skorokhod_oracle" => check_skorokhod_oracle(&mut rng, &mut ck),
            "solution" => check_solution(cfg, &mut rng, &mut ck),
            "comparison" => check_comparison(cfg, &mut rng, &mut ck),
            other => Err(Error::config("experiment.verify", format!("unknown property `{other}`"))),
        };
        properties.push(ck.finish(name, outcome));
    }
    VerifyReport {
        seed: cfg.seed,
        passed: properties.iter().all(|p| p.passed),
        properties,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::drivers::{DriverSpec, JumpLaw, ProcessSpec};

    fn p1(v: f64) -> Point {
        Point::from_element(1, v)
    }

    fn halfline_config() -> ExperimentConfig {
        let z = ProcessSpec::brownian(1, 1.0).with_jumps(
            1.0,
            JumpLaw::Gaussian {
                mean: p1(-0.5),
                cov: Matrix::from_element(1, 1, 0.25),
            },
        );
        let driver = DriverSpec::new(p1(1.0), z).unwrap();
        let mut cfg = ExperimentConfig::new(
            MonotoneOperator::indicator_halfline(),
            Projection::Classical,
            Coefficient::constant(Matrix::identity(1, 1)),
            driver,
        )
        .unwrap();
        cfg.levels = vec![4, 16];
        cfg.reference_factor = 4;
        cfg.trajectories = 8;
        cfg.verify_samples = 200;
        cfg
    }

    #[test]
    fn oracle_is_chosen_and_labelled() {
        let cfg = halfline_config();
        let t = run_convergence(&cfg).unwrap();
        assert!(t.is_oracle());
        assert_eq!(t.rows.len(), 2);
        assert!(t.rows.iter().all(|r| r.mean_err >= 0.0 && r.n_traj == 8));
        let mut elastic = cfg.clone();
        elastic.projection = Projection::elastic(0.5).unwrap();
        assert!(!run_convergence(&elastic).unwrap().is_oracle());
    }

    #[test]
    fn workers_do_not_change_results() {
        let mut cfg = halfline_config();
        cfg.workers = 1;
        let a = run_convergence(&cfg).unwrap();
        cfg.workers = 3;
        let b = run_convergence(&cfg).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn constant_solution_has_zero_error() {
        let driver = DriverSpec::new(p1(2.0), ProcessSpec::zero(1)).unwrap();
        let mut cfg = ExperimentConfig::new(
            MonotoneOperator::indicator_halfline(),
            Projection::Classical,
            Coefficient::zero(1),
            driver,
        )
        .unwrap();
        cfg.trajectories = 3;
        let t = run_convergence(&cfg).unwrap();
        assert!(t.rows.iter().all(|r| r.mean_err == 0.0 && r.sup_err == 0.0));
    }

    #[test]
    fn comparison_rows_and_pairing() {
        let mut cfg = halfline_config();
        cfg.yosida_levels = vec![4.0];
        assert!(matches!(compare_schemes(&cfg), Err(Error::Config { .. })));
        cfg.yosida_levels = vec![4.0, 16.0];
        let t = compare_schemes(&cfg).unwrap();
        assert_eq!(t.rows.len(), 4);
        assert!(!t.is_oracle());
    }

    #[test]
    fn suite_passes_and_detects_corruption() {
        let cfg = halfline_config();
        let report = verify_suite(&cfg);
        assert!(report.passed, "{}", report.to_json());
        let mut bad = cfg.clone();
        bad.projection = Projection::Elastic { c: 1.5 };
        bad.verify = vec!["projection".into()];
        let report = verify_suite(&bad);
        assert!(!report.passed);
        let lip = &report.property("projection").unwrap().checks[0];
        assert_eq!(lip.name, "lipschitz_1");
        assert!(!lip.passed);
        let mut empty = cfg;
        empty.verify.clear();
        let report = verify_suite(&empty);
        assert!(report.properties.is_empty() && report.passed);
    }

    #[test]
    fn error_table_layout() {
        let cfg = halfline_config();
        let t = run_convergence(&cfg).unwrap();
        let mut buf = Vec::new();
        t.to_table().write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("# reference=ORACLE"));
        let header = text.lines().find(|l| !l.starts_with('#')).unwrap();
        assert_eq!(header, ERROR_COLUMNS.join(","));
        assert!(text.contains("\n4,euler,0.5,"));
    }
}
