//! Approximation schemes for
//! `X_t + K_t = H_t + ∫⟨f(X_{s−}), dZ_s⟩` with `K` driven by `A`:
//!
//! - [`euler_scheme`]: the Skorokhod problem of the step input
//!   `Ȳ_t = H_{t_k} + Σ f(X̄_{t_{j-1}})(Z_{t_j} − Z_{t_{j-1}})`;
//! - [`yosida_scheme`]: `A` replaced by its Yosida approximation `A_n`, with the
//!   stiff drift integrated implicitly through the resolvent of `A_n`;
//! - [`modified_yosida_scheme`]: as above, but states after jumps larger than
//!   `1/n` are projected back with `Π`.
//!
//! Stochastic integrals use the left-point rule on the driver grid.

use std::fmt;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::drivers::DriverRealization;
use crate::operators::{yosida_j, yosida_resolve, MonotoneOperator};
use crate::paths::io::Table;
use crate::paths::StepPath;
use crate::projections::Projection;
use crate::skorokhod::{advance, check_start};
use crate::{Error, Matrix, Point, Result};

pub type CoefficientFn = Arc<dyn Fn(&Point) -> Matrix + Send + Sync>;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Regularity {
    /// `‖f(x) − f(y)‖ ≤ L|x − y|` everywhere.
    Lipschitz(f64),
    /// Locally Lipschitz; `growth` is `L` in `‖f(x)‖ ≤ L(1 + |x|)` when declared.
    Local { growth: Option<f64> },
}

/// Matrix-valued coefficient `f : R^d → R^{d×d}`.
#[derive(Clone)]
pub struct Coefficient {
    label: String,
    f: CoefficientFn,
    regularity: Regularity,
    truncation: Option<f64>,
    constant: Option<Matrix>,
    evaluations: Arc<AtomicU64>,
}

impl fmt::Debug for Coefficient {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Coefficient")
            .field("label", &self.label)
            .field("regularity", &self.regularity)
            .field("truncation", &self.truncation)
            .finish()
    }
}

impl Coefficient {
    pub fn new(label: impl Into<String>, regularity: Regularity, f: CoefficientFn) -> Self {
        Coefficient {
            label: label.into(),
            f,
            regularity,
            truncation: None,
            constant: None,
            evaluations: Arc::new(AtomicU64::new(0)),
        }
    }

    pub fn zero(d: usize) -> Self {
        let mut c = Self::constant(Matrix::zeros(d, d));
        c.label = "zero".into();
        c
    }

    pub fn constant(m: Matrix) -> Self {
        let value = m.clone();
        let mut c = Self::new("constant", Regularity::Lipschitz(0.0), Arc::new(move |_| value.clone()));
        c.constant = Some(m);
        c
    }

    /// The value of a state-independent coefficient built with [`Coefficient::constant`].
    pub fn constant_value(&self) -> Option<&Matrix> {
        self.constant.as_ref()
    }

    /// `f(x) = diag(x)`, so `⟨f(x), dZ⟩ = x ⊙ dZ`.
    pub fn diagonal_state() -> Self {
        Self::new(
            "diagonal_state",
            Regularity::Lipschitz(1.0),
            Arc::new(Matrix::from_diagonal),
        )
    }

    /// `f(x) = diag(x_i²)`; locally Lipschitz only.
    pub fn diagonal_square() -> Self {
        Self::new(
            "diagonal_square",
            Regularity::Local { growth: None },
            Arc::new(|x| Matrix::from_diagonal(&x.map(|v| v * v))),
        )
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn regularity(&self) -> Regularity {
        self.regularity
    }

    pub fn truncation(&self) -> Option<f64> {
        self.truncation
    }

    pub fn is_globally_lipschitz(&self) -> bool {
        self.truncation.is_some() || matches!(self.regularity, Regularity::Lipschitz(_))
    }

    pub fn evaluations(&self) -> u64 {
        self.evaluations.load(Ordering::Relaxed)
    }

    pub fn eval(&self, x: &Point) -> Matrix {
        self.evaluations.fetch_add(1, Ordering::Relaxed);
        let value = (self.f)(x);
        match self.truncation {
            Some(n) => value * radial_cutoff(x.norm(), n),
            None => value,
        }
    }

    /// `f(x)·dz`; skips the evaluation for the zero coefficient.
    fn integrand(&self, x: &Point, dz: &Point) -> Point {
        if self.constant.as_ref().is_some_and(|m| m.iter().all(|v| *v == 0.0)) {
            return Point::zeros(dz.len());
        }
        self.eval(x) * dz
    }
}

/// 1 on `B(0, N)`, 0 outside `B(0, N+1)`, linear in between.
fn radial_cutoff(r: f64, n: f64) -> f64 {
    (n + 1.0 - r).clamp(0.0, 1.0)
}

/// Globally Lipschitz `f_N` equal to `f` on `B(0, N)` and vanishing outside `B(0, N+1)`.
pub fn truncate(coeff: &Coefficient, level: f64) -> Result<Coefficient> {
    if !(level >= 1.0 && level.is_finite()) {
        return Err(Error::invalid(format!("truncation level must be ≥ 1, got {level}")));
    }
    let mut c = coeff.clone();
    c.truncation = Some(level);
    c.constant = None;
    Ok(c)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SchemeKind {
    Euler,
    Yosida,
    ModifiedYosida,
}

impl SchemeKind {
    pub fn name(&self) -> &'static str {
        match self {
            SchemeKind::Euler => "euler",
            SchemeKind::Yosida => "yosida",
            SchemeKind::ModifiedYosida => "modified_yosida",
        }
    }
}

impl std::str::FromStr for SchemeKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "euler" => Ok(SchemeKind::Euler),
            "yosida" => Ok(SchemeKind::Yosida),
            "modified_yosida" | "modified-yosida" => Ok(SchemeKind::ModifiedYosida),
            other => Err(Error::config("scheme", format!("unknown scheme `{other}`"))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SchemeOutput {
    pub scheme: SchemeKind,
    pub x: StepPath,
    pub k: StepPath,
    /// `H_t + Σ f(X_{t_{j-1}}) ΔZ_{t_j}` on the grid.
    pub y: StepPath,
    /// Yosida index; `None` for the Euler scheme.
    pub yosida_n: Option<f64>,
    pub mesh: f64,
    pub substeps: usize,
    pub driver: DriverRealization,
}

impl SchemeOutput {
    /// `max |X + K − Y|` over the grid.
    pub fn additivity_residual(&self) -> f64 {
        self.x
            .values()
            .iter()
            .zip(self.k.values())
            .zip(self.y.values())
            .map(|((x, k), y)| (x + k - y).norm())
            .fold(0.0, f64::max)
    }

    /// `J_n(X^n)` on the grid; the identity map for the Euler scheme.
    pub fn resolvent_path(&self, op: &MonotoneOperator) -> Result<StepPath> {
        match self.yosida_n {
            None => Ok(self.x.clone()),
            Some(n) => {
                let vals: Result<Vec<Point>> = self.x.values().iter().map(|x| yosida_j(op, n, x)).collect();
                StepPath::new(self.x.partition().clone(), vals?)
            }
        }
    }

    /// `time, component, v_1..v_d` for `x` and `k`, with run metadata.
    pub fn to_table(&self, extra: &[(String, String)]) -> Table {
        let mut table = crate::paths::io::labelled_paths_table(&[("x", &self.x), ("k", &self.k)]);
        table.metadata = vec![
            ("scheme".into(), self.scheme.name().into()),
            ("n".into(), self.yosida_n.map_or("none".into(), |n| format!("{n:?}"))),
            ("mesh".into(), format!("{:?}", self.mesh)),
            ("substeps".into(), self.substeps.to_string()),
            ("seed".into(), self.driver.seed.to_string()),
            ("trajectory".into(), self.driver.trajectory.to_string()),
        ];
        table.metadata.extend(extra.iter().cloned());
        table
    }
}

fn check_inputs(op: &MonotoneOperator, coeff: &Coefficient, driver: &DriverRealization, substeps: usize) -> Result<()> {
    if driver.dimension() != op.dimension() {
        return Err(Error::invalid("driver and operator dimensions differ"));
    }
    if substeps == 0 {
        return Err(Error::invalid("substeps must be positive"));
    }
    if !coeff.is_globally_lipschitz() {
        return Err(Error::invalid(format!(
            "coefficient `{}` is only locally Lipschitz; wrap it with `truncate`",
            coeff.label()
        )));
    }
    check_start(op, driver.h.initial())
}

struct Recorder {
    xs: Vec<Point>,
    ys: Vec<Point>,
    integral: Point,
}

impl Recorder {
    fn new(h0: &Point) -> Self {
        Recorder {
            xs: vec![h0.clone()],
            ys: vec![h0.clone()],
            integral: Point::zeros(h0.len()),
        }
    }

    fn finish(
        self,
        scheme: SchemeKind,
        yosida_n: Option<f64>,
        substeps: usize,
        driver: &DriverRealization,
    ) -> Result<SchemeOutput> {
        let part = driver.grid.clone();
        let ks = self.xs.iter().zip(&self.ys).map(|(x, y)| y - x).collect();
        Ok(SchemeOutput {
            scheme,
            x: StepPath::new(part.clone(), self.xs)?,
            k: StepPath::new(part.clone(), ks)?,
            y: StepPath::new(part.clone(), self.ys)?,
            yosida_n,
            mesh: driver.base.mesh(),
            substeps,
            driver: driver.clone(),
        })
    }
}

/// Euler-type Skorokhod scheme on the driver grid.
pub fn euler_scheme(
    op: &MonotoneOperator,
    proj: &Projection,
    coeff: &Coefficient,
    driver: &DriverRealization,
    flow_substeps: usize,
) -> Result<SchemeOutput> {
    check_inputs(op, coeff, driver, flow_substeps)?;
    let times = driver.grid.times();
    let mut rec = Recorder::new(driver.h.initial());
    for i in 1..times.len() {
        let x_prev = &rec.xs[i - 1];
        let noise = coeff.integrand(x_prev, &driver.z.jump(i));
        let dy = driver.h.jump(i) + &noise;
        let step = advance(op, proj, x_prev, times[i] - times[i - 1], &dy, flow_substeps)?;
        rec.integral += noise;
        rec.ys.push(driver.h.value(i) + &rec.integral);
        rec.xs.push(step.x);
    }
    rec.finish(SchemeKind::Euler, None, flow_substeps, driver)
}

fn yosida_common(
    op: &MonotoneOperator,
    proj: Option<&Projection>,
    n: f64,
    coeff: &Coefficient,
    driver: &DriverRealization,
    substeps: usize,
) -> Result<SchemeOutput> {
    if !(n >= 1.0 && n.is_finite()) {
        return Err(Error::invalid(format!("Yosida index must be ≥ 1, got {n}")));
    }
    check_inputs(op, coeff, driver, substeps)?;
    let times = driver.grid.times();
    let threshold = 1.0 / n;
    let mut rec = Recorder::new(driver.h.initial());
    for i in 1..times.len() {
        let x_prev = &rec.xs[i - 1];
        let noise = coeff.integrand(x_prev, &driver.z.jump(i));
        let mut w = x_prev + driver.h.jump(i) + &noise;
        if let Some(proj) = proj {
            let big = driver.h_jumps[i].norm().max(driver.z_jumps[i].norm()) > threshold;
            if big {
                w = proj.apply(op, &w)?;
            }
        }
        let x = if op.is_zero() {
            w
        } else {
            let mu = (times[i] - times[i - 1]) / substeps as f64;
            let mut x = w;
            for _ in 0..substeps {
                x = yosida_resolve(op, n, mu, &x)?;
            }
            x
        };
        rec.integral += noise;
        rec.ys.push(driver.h.value(i) + &rec.integral);
        rec.xs.push(x);
    }
    let kind = if proj.is_some() {
        SchemeKind::ModifiedYosida
    } else {
        SchemeKind::Yosida
    };
    rec.finish(kind, Some(n), substeps, driver)
}

/// Yosida scheme: explicit noise increment, then `substeps` implicit steps of
/// `x' = −A_n(x)` using `(I + μA_n)^{-1}`.
pub fn yosida_scheme(
    op: &MonotoneOperator,
    n: f64,
    coeff: &Coefficient,
    driver: &DriverRealization,
    substeps: usize,
) -> Result<SchemeOutput> {
    yosida_common(op, None, n, coeff, driver, substeps)
}

/// Yosida scheme whose post-increment state is replaced by
/// `Π(X_prev + ΔH + f(X_prev)ΔZ)` wherever `max(|ΔH|, |ΔZ|) > 1/n` for the
/// jump parts of the drivers.
pub fn modified_yosida_scheme(
    op: &MonotoneOperator,
    proj: &Projection,
    n: f64,
    coeff: &Coefficient,
    driver: &DriverRealization,
    substeps: usize,
) -> Result<SchemeOutput> {
    yosida_common(op, Some(proj), n, coeff, driver, substeps)
}

/// Runs a scheme on the truncated coefficient `f_N` and raises `N` until the
/// grid trajectory stays inside `B(0, N)`.
#[derive(Debug, Clone)]
pub struct TruncatedRun {
    pub output: SchemeOutput,
    pub level: f64,
    pub escalations: usize,
}

pub const MAX_ESCALATIONS: usize = 64;

pub fn run_truncated(
    coeff: &Coefficient,
    initial_level: f64,
    mut run: impl FnMut(&Coefficient) -> Result<SchemeOutput>,
) -> Result<TruncatedRun> {
    let mut level = initial_level;
    for escalations in 0..=MAX_ESCALATIONS {
        let truncated = truncate(coeff, level)?;
        let output = run(&truncated)?;
        let radius = output.x.values().iter().map(|x| x.norm()).fold(0.0, f64::max);
        if radius <= level {
            return Ok(TruncatedRun {
                output,
                level,
                escalations,
            });
        }
        level = (2.0 * level).max(radius.ceil() + 1.0);
    }
    Err(Error::NonConvergence {
        what: "truncation escalation",
        iterations: MAX_ESCALATIONS,
        residual: level,
        last_iterate: Vec::new(),
    })
}
