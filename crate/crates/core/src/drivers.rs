//! Seeded driving processes `H` and `Z`: drift + Brownian motion + compound
//! Poisson jumps, sampled on a partition augmented with the jump times.
//!
//! Every sampled value is a deterministic function of
//! `(master seed, trajectory index, time)`. The Brownian part is built by a
//! lazily evaluated Lévy construction on the dyadic points of `[0, T]` (each
//! dyadic node keyed to its own substream); times that are not dyadic at depth
//! [`MAX_BRIDGE_DEPTH`] are filled in by a Brownian bridge between their
//! enclosing depth-`MAX_BRIDGE_DEPTH` nodes. Jump times and sizes come from
//! separate substreams and do not depend on the partition. Consequently a
//! realization on a finer partition agrees bit-for-bit with a coarser one at
//! every shared time.

use std::collections::HashMap;

use nalgebra::SymmetricEigen;
use rand::Rng;
use rand_distr::{Distribution, Exp, StandardNormal};

use crate::paths::{discretize, Partition, StepPath};
use crate::rng::{substream, Purpose};
use crate::{ensure_finite, Error, Matrix, Point, Result};

/// Depth of the dyadic tree below which off-grid times are bridged directly.
pub const MAX_BRIDGE_DEPTH: u32 = 40;

#[derive(Debug, Clone, PartialEq)]
pub enum JumpLaw {
    /// `N(mean, cov)`; `cov` must be positive semidefinite.
    Gaussian { mean: Point, cov: Matrix },
    /// Uniform on the ball of the given radius around the origin.
    UniformBall { radius: f64 },
    Fixed(Point),
}

impl JumpLaw {
    fn validate(&self, d: usize) -> Result<()> {
        match self {
            JumpLaw::Gaussian { mean, cov } => {
                if mean.len() != d || cov.nrows() != d || cov.ncols() != d {
                    return Err(Error::invalid("gaussian jump law has wrong dimensions"));
                }
                ensure_finite(mean, "jump mean")?;
                let sym = (cov + cov.transpose()) * 0.5;
                if (cov - &sym).norm() > 1e-12 * (1.0 + cov.norm()) {
                    return Err(Error::invalid("jump covariance must be symmetric"));
                }
                if SymmetricEigen::new(sym).eigenvalues.min() < -1e-12 {
                    return Err(Error::invalid("jump covariance must be positive semidefinite"));
                }
                Ok(())
            }
            JumpLaw::UniformBall { radius } => {
                if *radius >= 0.0 && radius.is_finite() {
                    Ok(())
                } else {
                    Err(Error::invalid("jump ball radius must be nonnegative"))
                }
            }
            JumpLaw::Fixed(v) => {
                if v.len() != d {
                    return Err(Error::invalid("fixed jump has wrong dimension"));
                }
                ensure_finite(v, "fixed jump")
            }
        }
    }
}

/// Symmetric square root factor `L` with `L Lᵀ = cov`.
fn covariance_factor(cov: &Matrix) -> Matrix {
    let eig = SymmetricEigen::new((cov + cov.transpose()) * 0.5);
    let sqrt = eig.eigenvalues.map(|v| v.max(0.0).sqrt());
    &eig.eigenvectors * Matrix::from_diagonal(&sqrt)
}

fn normals<R: Rng>(rng: &mut R, d: usize) -> Point {
    Point::from_iterator(d, (0..d).map(|_| StandardNormal.sample(rng)))
}

/// One driving process: `drift·t + vol·W_t + Σ jumps`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProcessSpec {
    pub vol: Matrix,
    pub drift: Point,
    pub jump_rate: f64,
    pub jump_law: JumpLaw,
}

impl ProcessSpec {
    /// The identically zero process.
    pub fn zero(d: usize) -> Self {
        ProcessSpec {
            vol: Matrix::zeros(d, d),
            drift: Point::zeros(d),
            jump_rate: 0.0,
            jump_law: JumpLaw::Fixed(Point::zeros(d)),
        }
    }

    pub fn drift_only(drift: Point) -> Self {
        let d = drift.len();
        ProcessSpec {
            drift,
            ..Self::zero(d)
        }
    }

    /// Standard Brownian motion scaled by `sigma` in every coordinate.
    pub fn brownian(d: usize, sigma: f64) -> Self {
        ProcessSpec {
            vol: Matrix::identity(d, d) * sigma,
            ..Self::zero(d)
        }
    }

    pub fn with_jumps(mut self, rate: f64, law: JumpLaw) -> Self {
        self.jump_rate = rate;
        self.jump_law = law;
        self
    }

    fn validate(&self, d: usize, what: &str) -> Result<()> {
        if self.vol.nrows() != d || self.vol.ncols() != d || self.drift.len() != d {
            return Err(Error::invalid(format!("{what}: vol must be {d}×{d} and drift of length {d}")));
        }
        if self.vol.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid(format!("{what}: vol must be finite")));
        }
        ensure_finite(&self.drift, "drift")?;
        if !(self.jump_rate >= 0.0 && self.jump_rate.is_finite()) {
            return Err(Error::invalid(format!("{what}: jump rate must be nonnegative")));
        }
        self.jump_law.validate(d)
    }

    fn has_brownian(&self) -> bool {
        self.vol.iter().any(|v| *v != 0.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DriverSpec {
    pub dimension: usize,
    /// `H_0`; must lie in the closed operator domain.
    pub h0: Point,
    pub h: ProcessSpec,
    pub z: ProcessSpec,
}

impl DriverSpec {
    /// `H ≡ h0`, `Z` as given.
    pub fn new(h0: Point, z: ProcessSpec) -> Result<Self> {
        let d = h0.len();
        let spec = DriverSpec {
            dimension: d,
            h0,
            h: ProcessSpec::zero(d),
            z,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn with_h(mut self, h: ProcessSpec) -> Result<Self> {
        self.h = h;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        let d = self.dimension;
        if d == 0 || self.h0.len() != d {
            return Err(Error::invalid("driver dimension mismatch"));
        }
        ensure_finite(&self.h0, "H_0")?;
        self.h.validate(d, "H")?;
        self.z.validate(d, "Z")
    }
}

/// A sampled pair `(H, Z)` on a jump-augmented partition.
#[derive(Debug, Clone, PartialEq)]
pub struct DriverRealization {
    /// `None` for user-supplied paths.
    pub spec: Option<DriverSpec>,
    pub base: Partition,
    /// `base` plus all jump times in `(0, T]`.
    pub grid: Partition,
    pub h: StepPath,
    pub z: StepPath,
    /// Whether a compound Poisson jump of `H` or `Z` sits at each grid point.
    pub jump_flags: Vec<bool>,
    /// Pure jump parts `ΔH`, `ΔZ` at each grid point (zero where no jump).
    pub h_jumps: Vec<Point>,
    pub z_jumps: Vec<Point>,
    pub seed: u64,
    pub trajectory: u64,
}

struct Tags {
    times: Purpose,
    sizes: Purpose,
    brownian: Purpose,
    off_grid: Purpose,
}

const Z_TAGS: Tags = Tags {
    times: Purpose::ZJumpTimes,
    sizes: Purpose::ZJumpSizes,
    brownian: Purpose::ZBrownian,
    off_grid: Purpose::ZBrownianOffGrid,
};

const H_TAGS: Tags = Tags {
    times: Purpose::HJumpTimes,
    sizes: Purpose::HJumpSizes,
    brownian: Purpose::HBrownian,
    off_grid: Purpose::HBrownianOffGrid,
};

/// Standard `d`-dimensional Brownian motion on `[0, T]`, evaluated lazily.
struct LazyBrownian {
    seed: u64,
    trajectory: u64,
    grid_tag: Purpose,
    off_tag: Purpose,
    horizon: f64,
    dim: usize,
    nodes: HashMap<u64, Point>,
}

impl LazyBrownian {
    fn new(seed: u64, trajectory: u64, tags: &Tags, horizon: f64, dim: usize) -> Self {
        LazyBrownian {
            seed,
            trajectory,
            grid_tag: tags.brownian,
            off_tag: tags.off_grid,
            horizon,
            dim,
            nodes: HashMap::new(),
        }
    }

    fn dyadic_time(&self, depth: u32, index: u64) -> f64 {
        self.horizon * index as f64 / (1u64 << depth) as f64
    }

    /// `W` at `T·index/2^depth`.
    fn node(&mut self, mut depth: u32, mut index: u64) -> Point {
        if index == 0 {
            return Point::zeros(self.dim);
        }
        while depth > 0 && index.is_multiple_of(2) {
            index /= 2;
            depth -= 1;
        }
        let id = (1u64 << depth) | index;
        if let Some(v) = self.nodes.get(&id) {
            return v.clone();
        }
        let mut rng = substream(self.seed, self.trajectory, self.grid_tag, id);
        let z = normals(&mut rng, self.dim);
        let value = if depth == 0 {
            z * self.horizon.sqrt()
        } else {
            let left = self.node(depth, index - 1);
            let right = self.node(depth, index + 1);
            let var = self.horizon / (1u64 << (depth + 1)) as f64;
            (left + right) * 0.5 + z * var.sqrt()
        };
        self.nodes.insert(id, value.clone());
        value
    }

    fn at(&mut self, t: f64) -> Point {
        if t <= 0.0 {
            return Point::zeros(self.dim);
        }
        if t >= self.horizon {
            return self.node(0, 1);
        }
        let (mut lo, mut hi) = (0u64, 1u64);
        for depth in 1..=MAX_BRIDGE_DEPTH {
            let mid = 2 * lo + 1;
            let tm = self.dyadic_time(depth, mid);
            if t == tm {
                return self.node(depth, mid);
            }
            if t < tm {
                lo *= 2;
                hi = mid;
            } else {
                lo = mid;
                hi *= 2;
            }
        }
        let a = self.dyadic_time(MAX_BRIDGE_DEPTH, lo);
        let b = self.dyadic_time(MAX_BRIDGE_DEPTH, hi);
        let wa = self.node(MAX_BRIDGE_DEPTH, lo);
        let wb = self.node(MAX_BRIDGE_DEPTH, hi);
        let mut rng = substream(self.seed, self.trajectory, self.off_tag, t.to_bits());
        let z = normals(&mut rng, self.dim);
        let frac = (t - a) / (b - a);
        let var = (t - a) * (b - t) / (b - a);
        &wa + (wb - &wa) * frac + z * var.max(0.0).sqrt()
    }
}

/// Jump times in `(0, T]` and their sizes.
fn sample_jumps(spec: &ProcessSpec, seed: u64, trajectory: u64, tags: &Tags, horizon: f64) -> Vec<(f64, Point)> {
    if spec.jump_rate == 0.0 {
        return Vec::new();
    }
    let d = spec.drift.len();
    let exp = Exp::new(spec.jump_rate).expect("positive rate");
    let mut time_rng = substream(seed, trajectory, tags.times, 0);
    let factor = match &spec.jump_law {
        JumpLaw::Gaussian { cov, .. } => Some(covariance_factor(cov)),
        _ => None,
    };
    let mut out = Vec::new();
    let mut t = 0.0;
    loop {
        t += exp.sample(&mut time_rng);
        if t > horizon {
            break;
        }
        let mut rng = substream(seed, trajectory, tags.sizes, out.len() as u64);
        let size = match &spec.jump_law {
            JumpLaw::Gaussian { mean, .. } => mean + factor.as_ref().expect("factor") * normals(&mut rng, d),
            JumpLaw::UniformBall { radius } => {
                let dir = normals(&mut rng, d);
                let n = dir.norm();
                let u: f64 = rng.random();
                if n == 0.0 {
                    Point::zeros(d)
                } else {
                    dir * (radius * u.powf(1.0 / d as f64) / n)
                }
            }
            JumpLaw::Fixed(v) => v.clone(),
        };
        out.push((t, size));
    }
    out
}

struct ProcessSampler<'a> {
    spec: &'a ProcessSpec,
    brownian: Option<LazyBrownian>,
    jumps: Vec<(f64, Point)>,
}

impl<'a> ProcessSampler<'a> {
    fn new(spec: &'a ProcessSpec, seed: u64, trajectory: u64, tags: &Tags, horizon: f64) -> Self {
        let d = spec.drift.len();
        ProcessSampler {
            spec,
            brownian: spec
                .has_brownian()
                .then(|| LazyBrownian::new(seed, trajectory, tags, horizon, d)),
            jumps: sample_jumps(spec, seed, trajectory, tags, horizon),
        }
    }

    /// Values at the (sorted) grid times plus the pure jump part at each.
    fn sample(&mut self, times: &[f64], start: &Point) -> (Vec<Point>, Vec<Point>) {
        let d = start.len();
        let mut values = Vec::with_capacity(times.len());
        let mut jumps = Vec::with_capacity(times.len());
        let mut cumulative = Point::zeros(d);
        let mut next = 0;
        for &t in times {
            let mut here = Point::zeros(d);
            while next < self.jumps.len() && self.jumps[next].0 <= t {
                cumulative += &self.jumps[next].1;
                if self.jumps[next].0 == t {
                    here += &self.jumps[next].1;
                }
                next += 1;
            }
            let mut v = start + &self.spec.drift * t + &cumulative;
            if let Some(b) = self.brownian.as_mut() {
                v += &self.spec.vol * b.at(t);
            }
            values.push(v);
            jumps.push(here);
        }
        (values, jumps)
    }
}

/// Samples `(H, Z)` on `partition` augmented with the jump times.
pub fn simulate(spec: &DriverSpec, partition: &Partition, seed: u64, trajectory: u64) -> Result<DriverRealization> {
    spec.validate()?;
    let horizon = partition.horizon();
    if !(horizon > 0.0) {
        return Err(Error::invalid("driver partition needs a positive horizon"));
    }
    let mut zs = ProcessSampler::new(&spec.z, seed, trajectory, &Z_TAGS, horizon);
    let mut hs = ProcessSampler::new(&spec.h, seed, trajectory, &H_TAGS, horizon);
    let jump_times: Vec<f64> = zs.jumps.iter().chain(hs.jumps.iter()).map(|(t, _)| *t).collect();
    let grid = partition.with_points(&jump_times);
    let d = spec.dimension;
    let (z_vals, z_jumps) = zs.sample(grid.times(), &Point::zeros(d));
    let (h_vals, h_jumps) = hs.sample(grid.times(), &spec.h0);
    let jump_flags = grid
        .times()
        .iter()
        .map(|t| jump_times.iter().any(|s| s == t))
        .collect();
    Ok(DriverRealization {
        spec: Some(spec.clone()),
        base: partition.clone(),
        h: StepPath::new(grid.clone(), h_vals)?,
        z: StepPath::new(grid.clone(), z_vals)?,
        grid,
        jump_flags,
        h_jumps,
        z_jumps,
        seed,
        trajectory,
    })
}

impl DriverRealization {
    /// Wraps user-supplied step drivers; every increment counts as a jump.
    pub fn from_paths(h: StepPath, z: StepPath) -> Result<Self> {
        if h.partition() != z.partition() || h.dimension() != z.dimension() {
            return Err(Error::invalid("H and Z must share partition and dimension"));
        }
        if z.initial().norm() != 0.0 {
            return Err(Error::invalid("Z must start at 0"));
        }
        let n = h.values().len();
        let h_jumps: Vec<Point> = (0..n).map(|k| h.jump(k)).collect();
        let z_jumps: Vec<Point> = (0..n).map(|k| z.jump(k)).collect();
        let jump_flags = (0..n)
            .map(|k| h_jumps[k].norm() > 0.0 || z_jumps[k].norm() > 0.0)
            .collect();
        Ok(DriverRealization {
            spec: None,
            base: h.partition().clone(),
            grid: h.partition().clone(),
            h,
            z,
            jump_flags,
            h_jumps,
            z_jumps,
            seed: 0,
            trajectory: 0,
        })
    }

    pub fn dimension(&self) -> usize {
        self.h.dimension()
    }

    pub fn horizon(&self) -> f64 {
        self.grid.horizon()
    }

    /// Number of compound Poisson arrivals on the grid.
    pub fn jump_count(&self) -> usize {
        self.jump_flags.iter().filter(|f| **f).count()
    }

    /// The same realization on a finer partition.
    pub fn refine_consistent(&self, finer: &Partition) -> Result<DriverRealization> {
        if !finer.is_refinement_of(&self.base) || finer.horizon() != self.base.horizon() {
            return Err(Error::invalid("refinement must contain every point of the base partition"));
        }
        match &self.spec {
            Some(spec) => simulate(spec, finer, self.seed, self.trajectory),
            None => {
                let grid = finer.merge(&self.grid);
                let d = self.dimension();
                let carry = |src: &[Point]| -> Vec<Point> {
                    grid.times()
                        .iter()
                        .map(|&t| match self.grid.position(t) {
                            Some(k) => src[k].clone(),
                            None => Point::zeros(d),
                        })
                        .collect()
                };
                let h_jumps = carry(&self.h_jumps);
                let z_jumps = carry(&self.z_jumps);
                let jump_flags = grid
                    .times()
                    .iter()
                    .map(|&t| self.grid.position(t).is_some_and(|k| self.jump_flags[k]))
                    .collect();
                Ok(DriverRealization {
                    spec: None,
                    base: finer.clone(),
                    h: discretize(&self.h, &grid),
                    z: discretize(&self.z, &grid),
                    grid,
                    jump_flags,
                    h_jumps,
                    z_jumps,
                    seed: self.seed,
                    trajectory: self.trajectory,
                })
            }
        }
    }

    /// `time, jump, h_1..h_d, z_1..z_d`.
    pub fn to_table(&self) -> crate::paths::io::Table {
        use crate::paths::io::{Cell, Table};
        let d = self.dimension();
        let mut columns = vec!["time".to_string(), "jump".to_string()];
        columns.extend((1..=d).map(|i| format!("h_{i}")));
        columns.extend((1..=d).map(|i| format!("z_{i}")));
        let rows = (0..self.grid.len())
            .map(|k| {
                let mut row = vec![Cell::Num(self.grid.times()[k]), Cell::Flag(self.jump_flags[k])];
                row.extend(self.h.value(k).iter().map(|&v| Cell::Num(v)));
                row.extend(self.z.value(k).iter().map(|&v| Cell::Num(v)));
                row
            })
            .collect();
        Table {
            metadata: vec![
                ("seed".into(), self.seed.to_string()),
                ("trajectory".into(), self.trajectory.to_string()),
            ],
            columns,
            rows,
        }
    }
}
