//! Deterministic Skorokhod problem `SP(A, Π; y)` for step inputs.
//!
//! For `y` constant on `[t_{k-1}, t_k)` the solution follows the constant-input
//! flow of `−A`; at each partition time the state jumps to
//! `Π(x_{t_k−} + Δy_{t_k})`. The bounded-variation part `k = y − x` is split into
//! the flow accumulation `k^c` and the projection corrections `k^d`.

use serde::Serialize;

use crate::operators::{flow_path, MonotoneOperator};
use crate::paths::io::{labelled_paths_table, Table};
use crate::paths::StepPath;
use crate::projections::Projection;
use crate::{ensure_dim, Error, Point, Result, MEMBERSHIP_TOL};

pub const DEFAULT_FLOW_SUBSTEPS: usize = 16;

#[derive(Debug, Clone, PartialEq)]
pub struct BVDecomposition {
    /// Flow-generated part `k^c`.
    pub continuous: StepPath,
    /// Projection corrections `k^d`.
    pub jump: StepPath,
    /// Variation of `k` over each partition interval `(t_{k-1}, t_k]`.
    pub interval_variation: Vec<f64>,
}

impl BVDecomposition {
    pub fn total_variation(&self) -> f64 {
        self.interval_variation.iter().sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SkorokhodSolution {
    pub x: StepPath,
    pub k: StepPath,
    pub y: StepPath,
    pub decomposition: BVDecomposition,
    /// `x_{t_k−}` at every partition point (`x_0` at `k = 0`).
    pub left_limits: Vec<Point>,
    pub flow_substeps: usize,
}

impl SkorokhodSolution {
    /// `time, component, v_1..v_d` with `x` and `k` blocks.
    pub fn to_table(&self) -> Table {
        labelled_paths_table(&[("x", &self.x), ("k", &self.k)])
    }
}

/// Result of one partition interval followed by the jump at its right end.
#[derive(Debug, Clone)]
pub(crate) struct Advance {
    pub x_left: Point,
    pub x: Point,
    pub dk_flow: Point,
    pub dk_jump: Point,
    pub variation: f64,
}

/// Flows `x_prev` for `dt` and applies the jump `dy` through `proj`.
pub(crate) fn advance(
    op: &MonotoneOperator,
    proj: &Projection,
    x_prev: &Point,
    dt: f64,
    dy: &Point,
    substeps: usize,
) -> Result<Advance> {
    let (x_left, dk_flow, mut variation) = if op.is_zero() {
        (x_prev.clone(), Point::zeros(x_prev.len()), 0.0)
    } else {
        let path = flow_path(op, x_prev, dt, substeps)?;
        let variation = path.windows(2).map(|w| (&w[0] - &w[1]).norm()).sum();
        let x_left = path.into_iter().last().expect("nonempty flow");
        let dk = x_prev - &x_left;
        (x_left, dk, variation)
    };
    let (x, dk_jump) = if dy.iter().all(|v| *v == 0.0) {
        (x_left.clone(), Point::zeros(dy.len()))
    } else {
        let w = &x_left + dy;
        let x = proj.apply(op, &w)?;
        let dk = w - &x;
        (x, dk)
    };
    variation += dk_jump.norm();
    Ok(Advance {
        x_left,
        x,
        dk_flow,
        dk_jump,
        variation,
    })
}

pub(crate) fn check_start(op: &MonotoneOperator, y0: &Point) -> Result<()> {
    ensure_dim(y0, op.dimension(), "initial value")?;
    let distance = op.domain().distance(y0)?;
    if distance > MEMBERSHIP_TOL {
        return Err(Error::DomainViolation {
            distance,
            tolerance: MEMBERSHIP_TOL,
        });
    }
    Ok(())
}

/// Solves `SP(A, Π; y)` for a step input with `y_0 ∈ D̄(A)`.
pub fn solve_step(
    op: &MonotoneOperator,
    proj: &Projection,
    y: &StepPath,
    flow_substeps: usize,
) -> Result<SkorokhodSolution> {
    if flow_substeps == 0 {
        return Err(Error::invalid("flow_substeps must be positive"));
    }
    check_start(op, y.initial())?;
    let d = y.dimension();
    let times = y.times();
    let n = times.len();
    let mut xs = Vec::with_capacity(n);
    let mut ks = Vec::with_capacity(n);
    let mut kcs = Vec::with_capacity(n);
    let mut kds = Vec::with_capacity(n);
    let mut left = Vec::with_capacity(n);
    let mut var = Vec::with_capacity(n.saturating_sub(1));
    xs.push(y.initial().clone());
    ks.push(Point::zeros(d));
    kcs.push(Point::zeros(d));
    kds.push(Point::zeros(d));
    left.push(y.initial().clone());
    for i in 1..n {
        let step = advance(op, proj, &xs[i - 1], times[i] - times[i - 1], &y.jump(i), flow_substeps)?;
        kcs.push(&kcs[i - 1] + &step.dk_flow);
        kds.push(&kds[i - 1] + &step.dk_jump);
        ks.push(y.value(i) - &step.x);
        var.push(step.variation);
        left.push(step.x_left);
        xs.push(step.x);
    }
    let part = y.partition().clone();
    Ok(SkorokhodSolution {
        x: StepPath::new(part.clone(), xs)?,
        k: StepPath::new(part.clone(), ks)?,
        y: y.clone(),
        decomposition: BVDecomposition {
            continuous: StepPath::new(part.clone(), kcs)?,
            jump: StepPath::new(part, kds)?,
            interval_variation: var,
        },
        left_limits: left,
        flow_substeps,
    })
}

/// Closed-form reflection map on `[0, ∞)` with the classical projection:
/// `x_t = y_t + max(0, sup_{s≤t}(−y_s))`, `k_t = −max(0, sup_{s≤t}(−y_s))`.
pub fn reflect_halfline_oracle(y: &StepPath) -> Result<SkorokhodSolution> {
    if y.dimension() != 1 {
        return Err(Error::invalid("half-line reflection needs a scalar path"));
    }
    if !(y.initial()[0] >= 0.0) {
        return Err(Error::invalid(format!(
            "half-line reflection needs y_0 ≥ 0, got {}",
            y.initial()[0]
        )));
    }
    let mut running = 0.0_f64;
    let mut xs = Vec::with_capacity(y.values().len());
    let mut ks = Vec::with_capacity(y.values().len());
    for v in y.values() {
        running = running.max(-v[0]);
        xs.push(Point::from_element(1, v[0] + running));
        ks.push(Point::from_element(1, -running));
    }
    let left = std::iter::once(xs[0].clone())
        .chain(xs[..xs.len() - 1].iter().cloned())
        .collect();
    let var = ks.windows(2).map(|w| (&w[1] - &w[0]).norm()).collect();
    let part = y.partition().clone();
    let k = StepPath::new(part.clone(), ks)?;
    Ok(SkorokhodSolution {
        x: StepPath::new(part.clone(), xs)?,
        decomposition: BVDecomposition {
            continuous: StepPath::constant(part, Point::zeros(1)),
            jump: k.clone(),
            interval_variation: var,
        },
        k,
        y: y.clone(),
        left_limits: left,
        flow_substeps: 1,
    })
}

/// One increment of `k` on the substep grid.
#[derive(Debug, Clone)]
pub struct KIncrement {
    /// Partition interval `(t_{k-1}, t_k]` the increment belongs to (`k ≥ 1`).
    pub interval: usize,
    pub time: f64,
    /// `x` right after the increment.
    pub x: Point,
    /// `y` at the increment time.
    pub y: Point,
    pub dk: Point,
    /// Length of the substep for flow increments, 0 for jumps.
    pub du: f64,
    pub is_jump: bool,
}

/// Rebuilds the substep-level increments of `k` from the grid values of `x`.
pub fn fine_increments(op: &MonotoneOperator, sol: &SkorokhodSolution) -> Result<Vec<KIncrement>> {
    let m = sol.flow_substeps;
    let times = sol.x.times();
    let mut out = Vec::with_capacity((times.len() - 1) * (m + 1));
    for i in 1..times.len() {
        let dt = times[i] - times[i - 1];
        let x_prev = sol.x.value(i - 1);
        let path = if op.is_zero() {
            vec![x_prev.clone(); m + 1]
        } else {
            flow_path(op, x_prev, dt, m)?
        };
        let y_prev = sol.y.value(i - 1);
        for j in 1..=m {
            out.push(KIncrement {
                interval: i,
                time: times[i - 1] + dt * j as f64 / m as f64,
                x: path[j].clone(),
                y: y_prev.clone(),
                dk: &path[j - 1] - &path[j],
                du: dt / m as f64,
                is_jump: false,
            });
        }
        let x_left = &path[m];
        let dy = sol.y.jump(i);
        let x = sol.x.value(i);
        let dk = if dy.iter().all(|v| *v == 0.0) {
            Point::zeros(dy.len())
        } else {
            x_left + dy - x
        };
        out.push(KIncrement {
            interval: i,
            time: times[i],
            x: x.clone(),
            y: sol.y.value(i).clone(),
            dk,
            du: 0.0,
            is_jump: true,
        });
    }
    Ok(out)
}

#[derive(Debug, Clone, Serialize)]
pub struct VerificationReport {
    /// `max |x_t + k_t − y_t|`.
    pub additivity_residual: f64,
    pub initial_k: f64,
    /// `max |k − k^c − k^d|`.
    pub decomposition_residual: f64,
    /// `max dist(x_t, D̄(A))`.
    pub domain_residual: f64,
    /// `max |x_t − Π(x_{t−} + Δy_t)|` over points with `|Δk^d_t| > 0`.
    pub jump_residual: f64,
    /// Points where `|Δk^d_t| > 2|Δy_t|`.
    pub jump_bound_violations: usize,
    /// Smallest monotonicity sum `Σ⟨x_u − α, Δk^c_u − β Δu⟩` over intervals and pairs.
    pub min_monotonicity: f64,
    pub pairs_checked: usize,
    pub passed: bool,
}

/// Checks the defining properties of a Skorokhod solution.
///
/// The monotonicity condition is evaluated per partition interval as a
/// right-point sum against the flow increments of `k`, for every supplied
/// `(α, β) ∈ Gr(A)`.
pub fn verify_solution(
    op: &MonotoneOperator,
    proj: &Projection,
    sol: &SkorokhodSolution,
    test_pairs: &[(Point, Point)],
    tol: f64,
) -> Result<VerificationReport> {
    let n = sol.x.values().len();
    let mut additivity: f64 = 0.0;
    let mut decomposition: f64 = 0.0;
    let mut domain: f64 = 0.0;
    for i in 0..n {
        additivity = additivity.max((sol.x.value(i) + sol.k.value(i) - sol.y.value(i)).norm());
        let kc = sol.decomposition.continuous.value(i);
        let kd = sol.decomposition.jump.value(i);
        decomposition = decomposition.max((sol.k.value(i) - kc - kd).norm());
        domain = domain.max(op.domain().distance(sol.x.value(i))?);
    }
    let initial_k = sol.k.initial().norm();

    let incs = fine_increments(op, sol)?;
    let mut jump_residual: f64 = 0.0;
    let mut violations = 0;
    let mut x_left = sol.x.initial().clone();
    for inc in &incs {
        if !inc.is_jump {
            x_left = inc.x.clone();
            continue;
        }
        let i = inc.interval;
        let dkd = sol.decomposition.jump.jump(i);
        let dy = sol.y.jump(i);
        if dkd.norm() > 0.0 {
            let target = proj.apply(op, &(&x_left + &dy))?;
            jump_residual = jump_residual.max((sol.x.value(i) - target).norm());
        }
        if dkd.norm() > 2.0 * dy.norm() {
            violations += 1;
        }
    }

    let mut min_mono = f64::INFINITY;
    for (alpha, beta) in test_pairs {
        let mut acc = 0.0;
        let mut current = 1;
        for inc in incs.iter().filter(|inc| !inc.is_jump) {
            if inc.interval != current {
                min_mono = min_mono.min(acc);
                acc = 0.0;
                current = inc.interval;
            }
            acc += (&inc.x - alpha).dot(&(&inc.dk - beta * inc.du));
        }
        min_mono = min_mono.min(acc);
    }
    if test_pairs.is_empty() || incs.is_empty() {
        min_mono = 0.0;
    }

    let domain_ok = !proj.maps_into_domain() || domain <= MEMBERSHIP_TOL;
    let passed = additivity <= tol
        && initial_k <= tol
        && decomposition <= tol.max(1e-9)
        && jump_residual <= tol
        && violations == 0
        && min_mono >= -tol
        && domain_ok;
    Ok(VerificationReport {
        additivity_residual: additivity,
        initial_k,
        decomposition_residual: decomposition,
        domain_residual: domain,
        jump_residual,
        jump_bound_violations: violations,
        min_monotonicity: min_mono,
        pairs_checked: test_pairs.len(),
        passed,
    })
}

/// Worst slacks of the two comparison inequalities between solutions driven by
/// different inputs on a common partition.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ComparisonSlack {
    /// Minimum over all partition sub-intervals `(s, t]` of
    /// `Σ⟨x_u − x'_u, Δk_u − Δk'_u⟩ + ½ Σ_{jumps} |Δk_u − Δk'_u|²`.
    pub interval_sum: f64,
    /// Minimum over partition points of
    /// `|y_t − y'_t|² − 2 Σ⟨(y_t − y'_t) − (y_u − y'_u), Δk_u − Δk'_u⟩ − |x_t − x'_t|²`.
    pub distance_bound: f64,
}

pub fn comparison_slack(
    op: &MonotoneOperator,
    a: &SkorokhodSolution,
    b: &SkorokhodSolution,
) -> Result<ComparisonSlack> {
    if a.x.partition() != b.x.partition() || a.flow_substeps != b.flow_substeps {
        return Err(Error::invalid("solutions must share partition and flow substeps"));
    }
    let ia = fine_increments(op, a)?;
    let ib = fine_increments(op, b)?;
    let n = a.x.values().len();

    // Prefix sums of the Stieltjes atoms at partition points.
    let mut prefix = vec![0.0; n];
    let mut acc = 0.0;
    for (u, v) in ia.iter().zip(&ib) {
        let dx = &u.x - &v.x;
        let de = &u.dk - &v.dk;
        acc += dx.dot(&de);
        if u.is_jump {
            acc += 0.5 * de.norm_squared();
            prefix[u.interval] = acc;
        }
    }
    let mut interval_sum = f64::INFINITY;
    for t in 1..n {
        for s in 0..t {
            interval_sum = interval_sum.min(prefix[t] - prefix[s]);
        }
    }
    if n < 2 {
        interval_sum = 0.0;
    }

    let mut distance_bound = f64::INFINITY;
    for t in 0..n {
        let dy_t = a.y.value(t) - b.y.value(t);
        let dx_t = a.x.value(t) - b.x.value(t);
        let integral: f64 = ia
            .iter()
            .zip(&ib)
            .take_while(|(u, _)| u.interval <= t)
            .map(|(u, v)| {
                let d_u = &u.y - &v.y;
                (&dy_t - d_u).dot(&(&u.dk - &v.dk))
            })
            .sum();
        let slack = dy_t.norm_squared() - 2.0 * integral - dx_t.norm_squared();
        distance_bound = distance_bound.min(slack);
    }
    Ok(ComparisonSlack {
        interval_sum,
        distance_bound,
    })
}
