//! Experiment configuration.
//!
//! Configurations are TOML documents with the sections `[operator]`,
//! `[projection]`, `[coefficient]`, `[driver]` and `[experiment]`. Every key
//! and its default is listed in the repository README. Parsing produces an
//! [`ExperimentConfig`] whose fields are already validated objects; errors name
//! the offending key.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::convex::{ConvexSet, HalfSpace};
use crate::drivers::{DriverSpec, JumpLaw, ProcessSpec};
use crate::operators::{MonotoneOperator, ProxKind};
use crate::paths::io::Format;
use crate::projections::Projection;
use crate::schemes::Coefficient;
use crate::{Error, Matrix, Point, Result, MEMBERSHIP_TOL};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum OperatorSpec {
    Zero { dimension: usize },
    Halfline,
    Halfspace { normal: Vec<f64>, offset: f64 },
    Box { lo: Vec<f64>, hi: Vec<f64> },
    Ball { center: Vec<f64>, radius: f64 },
    Polyhedron { faces: Vec<FaceSpec> },
    Linear { matrix: Vec<Vec<f64>> },
    L1 { dimension: usize, weight: f64 },
    HalfSquaredNorm { dimension: usize, weight: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FaceSpec {
    pub normal: Vec<f64>,
    pub offset: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum CoefficientSpec {
    Zero,
    /// `f ≡ value·I`.
    Scalar { value: f64 },
    /// `f ≡ matrix`.
    Constant { matrix: Vec<Vec<f64>> },
    /// `f(x) = diag(x)`.
    DiagonalState,
    /// `f(x) = diag(x_i²)`, run through the truncation wrapper starting at `truncation`.
    DiagonalSquare {
        #[serde(default = "default_truncation")]
        truncation: f64,
    },
}

fn default_truncation() -> f64 {
    2.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum JumpLawSpec {
    Gaussian { mean: Vec<f64>, cov: Vec<Vec<f64>> },
    UniformBall { radius: f64 },
    Fixed { value: Vec<f64> },
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProcessSection {
    /// Full volatility matrix; overrides `sigma`.
    pub vol: Option<Vec<Vec<f64>>>,
    /// Volatility `sigma·I`.
    pub sigma: Option<f64>,
    pub drift: Option<Vec<f64>>,
    #[serde(default)]
    pub jump_rate: f64,
    pub jump_law: Option<JumpLawSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DriverSection {
    pub h0: Vec<f64>,
    #[serde(default)]
    pub z: ProcessSection,
    #[serde(default)]
    pub h: ProcessSection,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Checkpoint {
    pub t: f64,
    /// Whether `t` is a.s. a continuity point of the drivers.
    #[serde(default = "yes")]
    pub continuity: bool,
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSection {
    #[serde(default = "default_horizon")]
    pub horizon: f64,
    #[serde(default = "default_levels")]
    pub levels: Vec<usize>,
    #[serde(default = "default_yosida_levels")]
    pub yosida_levels: Vec<f64>,
    #[serde(default = "default_reference_factor")]
    pub reference_factor: usize,
    #[serde(default = "default_trajectories")]
    pub trajectories: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_substeps")]
    pub flow_substeps: usize,
    pub checkpoints: Option<Vec<Checkpoint>>,
    #[serde(default = "default_out")]
    pub out: PathBuf,
    #[serde(default)]
    pub format: FormatName,
    #[serde(default)]
    pub workers: usize,
    pub verify: Option<Vec<String>>,
    #[serde(default = "default_verify_samples")]
    pub verify_samples: usize,
}

impl Default for ExperimentSection {
    fn default() -> Self {
        toml::from_str("").expect("defaults parse")
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FormatName {
    #[default]
    Csv,
    Jsonl,
}

impl From<FormatName> for Format {
    fn from(f: FormatName) -> Self {
        match f {
            FormatName::Csv => Format::Csv,
            FormatName::Jsonl => Format::Jsonl,
        }
    }
}

fn default_horizon() -> f64 {
    1.0
}
fn default_levels() -> Vec<usize> {
    vec![8, 32, 128]
}
fn default_yosida_levels() -> Vec<f64> {
    vec![4.0, 16.0, 64.0]
}
fn default_reference_factor() -> usize {
    16
}
fn default_trajectories() -> usize {
    100
}
fn default_substeps() -> usize {
    crate::skorokhod::DEFAULT_FLOW_SUBSTEPS
}
fn default_out() -> PathBuf {
    PathBuf::from("out")
}
fn default_verify_samples() -> usize {
    1000
}

/// The configuration file as written.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub operator: OperatorSpec,
    #[serde(default = "classical")]
    pub projection: Projection,
    #[serde(default = "zero_coefficient")]
    pub coefficient: CoefficientSpec,
    pub driver: DriverSection,
    #[serde(default)]
    pub experiment: ExperimentSection,
}

fn classical() -> Projection {
    Projection::Classical
}

fn zero_coefficient() -> CoefficientSpec {
    CoefficientSpec::Zero
}

/// Names accepted by [`crate::harness::verify_suite`].
pub const VERIFY_PROPERTIES: &[&str] = &[
    "resolvent",
    "yosida",
    "projection",
    "flow",
    "skorokhod_oracle",
    "solution",
    "comparison",
];

/// A validated experiment.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub operator: MonotoneOperator,
    pub projection: Projection,
    pub coefficient: Coefficient,
    /// Initial truncation level for locally Lipschitz coefficients.
    pub truncation: Option<f64>,
    pub driver: DriverSpec,
    pub horizon: f64,
    pub levels: Vec<usize>,
    pub yosida_levels: Vec<f64>,
    pub reference_factor: usize,
    pub trajectories: usize,
    pub seed: u64,
    pub flow_substeps: usize,
    pub checkpoints: Vec<Checkpoint>,
    pub out: PathBuf,
    pub format: Format,
    /// Worker threads; 0 uses all available cores.
    pub workers: usize,
    pub verify: Vec<String>,
    pub verify_samples: usize,
    /// `key = value` descriptions of the model, written into output headers.
    pub labels: Vec<(String, String)>,
}

impl ExperimentConfig {
    /// A configuration with default `[experiment]` settings.
    pub fn new(
        operator: MonotoneOperator,
        projection: Projection,
        coefficient: Coefficient,
        driver: DriverSpec,
    ) -> Result<Self> {
        let cfg = Self::assemble(operator, projection, coefficient, driver);
        cfg.validate()?;
        Ok(cfg)
    }

    fn assemble(
        operator: MonotoneOperator,
        projection: Projection,
        coefficient: Coefficient,
        driver: DriverSpec,
    ) -> Self {
        let labels = vec![
            ("operator".into(), operator.label()),
            ("projection".into(), projection_label(&projection)),
            ("coefficient".into(), coefficient.label().to_string()),
        ];
        let mut cfg = ExperimentConfig {
            truncation: (!coefficient.is_globally_lipschitz()).then(default_truncation),
            operator,
            projection,
            coefficient,
            driver,
            horizon: 1.0,
            levels: Vec::new(),
            yosida_levels: Vec::new(),
            reference_factor: 0,
            trajectories: 0,
            seed: 0,
            flow_substeps: 0,
            checkpoints: Vec::new(),
            out: PathBuf::new(),
            format: Format::Csv,
            workers: 0,
            verify: Vec::new(),
            verify_samples: 0,
            labels,
        };
        cfg.apply_experiment(ExperimentSection::default());
        cfg
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let file: ConfigFile = toml::from_str(text).map_err(|e| {
            let field = e.span().map_or_else(|| "config".to_string(), |s| locate(text, s.start));
            Error::config(field, e.message().to_string())
        })?;
        Self::from_file_spec(&file)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::config("--config", format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    pub fn from_file_spec(file: &ConfigFile) -> Result<Self> {
        let operator = build_operator(&file.operator)?;
        let d = operator.dimension();
        file.projection.validate().map_err(|e| Error::config("projection", e.to_string()))?;
        let (coefficient, truncation) = build_coefficient(&file.coefficient, d)?;
        let driver = build_driver(&file.driver, d)?;
        let mut cfg = ExperimentConfig::assemble(operator, file.projection, coefficient, driver);
        cfg.truncation = truncation;
        cfg.labels = vec![
            ("operator".into(), compact(&file.operator)),
            ("projection".into(), compact(&file.projection)),
            ("coefficient".into(), compact(&file.coefficient)),
            ("driver".into(), compact(&file.driver)),
        ];
        cfg.apply_experiment(file.experiment.clone());
        cfg.validate()?;
        Ok(cfg)
    }

    fn apply_experiment(&mut self, e: ExperimentSection) {
        self.horizon = e.horizon;
        self.levels = e.levels;
        self.yosida_levels = e.yosida_levels;
        self.reference_factor = e.reference_factor;
        self.trajectories = e.trajectories;
        self.seed = e.seed;
        self.flow_substeps = e.flow_substeps;
        self.checkpoints = e.checkpoints.unwrap_or_else(|| {
            vec![Checkpoint {
                t: 0.5 * e.horizon,
                continuity: true,
            }]
        });
        self.out = e.out;
        self.format = e.format.into();
        self.workers = e.workers;
        self.verify = e
            .verify
            .unwrap_or_else(|| VERIFY_PROPERTIES.iter().map(|s| s.to_string()).collect());
        self.verify_samples = e.verify_samples;
    }

    /// Checks every cross-field constraint.
    pub fn validate(&self) -> Result<()> {
        let field = |f: &str, m: String| Err(Error::config(format!("experiment.{f}"), m));
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return field("horizon", format!("must be positive, got {}", self.horizon));
        }
        if self.levels.is_empty() || self.levels[0] == 0 {
            return field("levels", "must be a nonempty list of positive integers".into());
        }
        if self.levels.windows(2).any(|w| w[0] >= w[1]) {
            return field("levels", "must be strictly increasing".into());
        }
        if self.reference_factor == 0 {
            return field("reference_factor", "must be positive".into());
        }
        let reference = self.reference_intervals();
        if let Some(l) = self.levels.iter().find(|&&l| !reference.is_multiple_of(l)) {
            return field(
                "levels",
                format!("level {l} does not divide the reference grid size {reference}"),
            );
        }
        if self.yosida_levels.iter().any(|&n| !(n >= 1.0 && n.is_finite())) {
            return field("yosida_levels", "every Yosida index must be ≥ 1".into());
        }
        if self.yosida_levels.windows(2).any(|w| w[0] >= w[1]) {
            return field("yosida_levels", "must be strictly increasing".into());
        }
        if self.trajectories == 0 {
            return field("trajectories", "must be at least 1".into());
        }
        if self.flow_substeps == 0 {
            return field("flow_substeps", "must be positive".into());
        }
        if let Some(c) = self.checkpoints.iter().find(|c| !(c.t > 0.0 && c.t <= self.horizon)) {
            return field("checkpoints", format!("time {} is outside (0, {}]", c.t, self.horizon));
        }
        if let Some(p) = self.verify.iter().find(|p| !VERIFY_PROPERTIES.contains(&p.as_str())) {
            return field(
                "verify",
                format!("unknown property `{p}`; expected one of {VERIFY_PROPERTIES:?}"),
            );
        }
        if self.driver.dimension != self.operator.dimension() {
            return Err(Error::config(
                "driver.h0",
                format!(
                    "dimension {} does not match the operator dimension {}",
                    self.driver.dimension,
                    self.operator.dimension()
                ),
            ));
        }
        let dist = self.operator.domain().distance(&self.driver.h0)?;
        if dist > MEMBERSHIP_TOL {
            return Err(Error::config(
                "driver.h0",
                format!("H_0 lies at distance {dist:e} outside the operator domain"),
            ));
        }
        if !self.coefficient.is_globally_lipschitz() && self.truncation.is_none() {
            return Err(Error::config(
                "coefficient",
                "locally Lipschitz coefficient needs a truncation level",
            ));
        }
        Ok(())
    }

    /// Number of intervals of the reference grid.
    pub fn reference_intervals(&self) -> usize {
        self.levels.last().copied().unwrap_or(1) * self.reference_factor
    }

    pub fn with_levels(mut self, levels: Vec<usize>) -> Result<Self> {
        self.levels = levels;
        self.validate()?;
        Ok(self)
    }

    pub fn with_truncation(mut self, level: f64) -> Result<Self> {
        if !(level >= 1.0 && level.is_finite()) {
            return Err(Error::config("coefficient.truncation", "must be ≥ 1"));
        }
        self.truncation = Some(level);
        Ok(self)
    }

    pub fn with_trajectories(mut self, n: usize) -> Result<Self> {
        self.trajectories = n;
        self.validate()?;
        Ok(self)
    }
}

fn projection_label(p: &Projection) -> String {
    compact(p)
}

fn compact<T: Serialize>(v: &T) -> String {
    serde_json::to_string(v).unwrap_or_default()
}

/// Dotted key path of the table entry enclosing byte offset `pos`.
fn locate(text: &str, pos: usize) -> String {
    let pos = pos.min(text.len());
    let line_start = text[..pos].rfind('\n').map_or(0, |i| i + 1);
    let before = &text[..(text[line_start..].find('\n').map_or(text.len(), |i| line_start + i))];
    let section = before
        .lines()
        .rev()
        .find_map(|l| {
            let l = l.trim();
            (l.starts_with('[') && l.ends_with(']')).then(|| l.trim_matches(['[', ']']).to_string())
        })
        .unwrap_or_default();
    let line = text[line_start..]
        .lines()
        .next()
        .unwrap_or("");
    let key = line.split('=').next().map(str::trim).filter(|k| !k.is_empty() && !k.starts_with('['));
    match (section.is_empty(), key) {
        (false, Some(k)) => format!("{section}.{k}"),
        (false, None) => section,
        (true, Some(k)) => k.to_string(),
        (true, None) => "config".into(),
    }
}

fn point(v: &[f64], field: &str) -> Result<Point> {
    if v.is_empty() {
        return Err(Error::config(field, "must not be empty"));
    }
    Ok(Point::from_column_slice(v))
}

fn matrix(rows: &[Vec<f64>], field: &str) -> Result<Matrix> {
    let n = rows.len();
    if n == 0 || rows.iter().any(|r| r.len() != rows[0].len()) {
        return Err(Error::config(field, "must be a nonempty rectangular array of rows"));
    }
    Ok(Matrix::from_fn(n, rows[0].len(), |i, j| rows[i][j]))
}

fn at<T>(field: &str, r: Result<T>) -> Result<T> {
    r.map_err(|e| match e {
        Error::Config { .. } => e,
        other => Error::config(field, other.to_string()),
    })
}

pub fn build_operator(spec: &OperatorSpec) -> Result<MonotoneOperator> {
    let f = "operator";
    match spec {
        OperatorSpec::Zero { dimension } => at(f, MonotoneOperator::zero(*dimension)),
        OperatorSpec::Halfline => Ok(MonotoneOperator::indicator_halfline()),
        OperatorSpec::Halfspace { normal, offset } => at(
            f,
            MonotoneOperator::indicator_halfspace(point(normal, "operator.normal")?, *offset),
        ),
        OperatorSpec::Box { lo, hi } => at(
            f,
            MonotoneOperator::indicator_box(point(lo, "operator.lo")?, point(hi, "operator.hi")?),
        ),
        OperatorSpec::Ball { center, radius } => at(
            f,
            MonotoneOperator::indicator_ball(point(center, "operator.center")?, *radius),
        ),
        OperatorSpec::Polyhedron { faces } => {
            let faces = faces
                .iter()
                .map(|face| at("operator.faces", HalfSpace::new(point(&face.normal, "operator.faces")?, face.offset)))
                .collect::<Result<Vec<_>>>()?;
            at(f, MonotoneOperator::indicator_polyhedron(faces))
        }
        OperatorSpec::Linear { matrix: m } => at(f, MonotoneOperator::linear_monotone(matrix(m, "operator.matrix")?)),
        OperatorSpec::L1 { dimension, weight } => at(f, MonotoneOperator::l1_norm(*dimension, *weight)),
        OperatorSpec::HalfSquaredNorm { dimension, weight } => at(
            f,
            ConvexSet::whole(*dimension)
                .and_then(|d| MonotoneOperator::convex_prox(d, ProxKind::HalfSquaredNorm { weight: *weight })),
        ),
    }
}

pub fn build_coefficient(spec: &CoefficientSpec, d: usize) -> Result<(Coefficient, Option<f64>)> {
    let c = match spec {
        CoefficientSpec::Zero => Coefficient::zero(d),
        CoefficientSpec::Scalar { value } => {
            if !value.is_finite() {
                return Err(Error::config("coefficient.value", "must be finite"));
            }
            Coefficient::constant(Matrix::identity(d, d) * *value)
        }
        CoefficientSpec::Constant { matrix: m } => {
            let m = matrix(m, "coefficient.matrix")?;
            if m.nrows() != d || m.ncols() != d {
                return Err(Error::config("coefficient.matrix", format!("must be {d}×{d}")));
            }
            Coefficient::constant(m)
        }
        CoefficientSpec::DiagonalState => Coefficient::diagonal_state(),
        CoefficientSpec::DiagonalSquare { truncation } => {
            if !(*truncation >= 1.0 && truncation.is_finite()) {
                return Err(Error::config("coefficient.truncation", "must be ≥ 1"));
            }
            return Ok((Coefficient::diagonal_square(), Some(*truncation)));
        }
    };
    Ok((c, None))
}

fn build_process(p: &ProcessSection, d: usize, name: &str) -> Result<ProcessSpec> {
    let mut spec = match (&p.vol, p.sigma) {
        (Some(v), _) => {
            let vol = matrix(v, &format!("driver.{name}.vol"))?;
            ProcessSpec {
                vol,
                ..ProcessSpec::zero(d)
            }
        }
        (None, Some(s)) => ProcessSpec::brownian(d, s),
        (None, None) => ProcessSpec::zero(d),
    };
    if let Some(b) = &p.drift {
        spec.drift = point(b, &format!("driver.{name}.drift"))?;
    }
    let law = match &p.jump_law {
        None => JumpLaw::Fixed(Point::zeros(d)),
        Some(JumpLawSpec::Gaussian { mean, cov }) => JumpLaw::Gaussian {
            mean: point(mean, &format!("driver.{name}.jump_law.mean"))?,
            cov: matrix(cov, &format!("driver.{name}.jump_law.cov"))?,
        },
        Some(JumpLawSpec::UniformBall { radius }) => JumpLaw::UniformBall { radius: *radius },
        Some(JumpLawSpec::Fixed { value }) => JumpLaw::Fixed(point(value, &format!("driver.{name}.jump_law.value"))?),
    };
    if p.jump_rate > 0.0 && p.jump_law.is_none() {
        return Err(Error::config(format!("driver.{name}.jump_law"), "required when jump_rate > 0"));
    }
    Ok(spec.with_jumps(p.jump_rate, law))
}

pub fn build_driver(section: &DriverSection, d: usize) -> Result<DriverSpec> {
    let h0 = point(&section.h0, "driver.h0")?;
    if h0.len() != d {
        return Err(Error::config(
            "driver.h0",
            format!("has length {} but the operator has dimension {d}", h0.len()),
        ));
    }
    let z = build_process(&section.z, d, "z")?;
    let h = build_process(&section.h, d, "h")?;
    let spec = DriverSpec {
        dimension: d,
        h0,
        h,
        z,
    };
    at("driver", spec.validate())?;
    Ok(spec)
}
