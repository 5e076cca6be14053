//! Finite representations of càdlàg paths.
//!
//! Everything lives on a finite partition of `[0, T]`. A [`StepPath`] holds one
//! value per partition interval `[t_k, t_{k+1})` plus the terminal value at `T`,
//! so evaluation is right-continuous with left limits at partition times.

pub mod io;

use crate::{Error, Point, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Partition {
    times: Vec<f64>,
}

impl Partition {
    /// Strictly increasing, finite times starting at 0.
    pub fn new(times: Vec<f64>) -> Result<Self> {
        match times.first() {
            Some(&0.0) => {}
            Some(&t0) => return Err(Error::invalid(format!("partition must start at 0, got {t0}"))),
            None => return Err(Error::invalid("partition must not be empty")),
        }
        if times.iter().any(|t| !t.is_finite()) {
            return Err(Error::invalid("partition times must be finite"));
        }
        if let Some(w) = times.windows(2).find(|w| w[1] <= w[0]) {
            return Err(Error::invalid(format!(
                "partition times must increase strictly ({} then {})",
                w[0], w[1]
            )));
        }
        Ok(Partition { times })
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Number of intervals.
    pub fn intervals(&self) -> usize {
        self.times.len() - 1
    }

    pub fn horizon(&self) -> f64 {
        *self.times.last().expect("partition is nonempty")
    }

    /// Largest gap `‖π‖`; zero for the one-point partition.
    pub fn mesh(&self) -> f64 {
        self.times.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max)
    }

    /// Index of the last partition point `≤ t` (0 for `t < 0`).
    pub fn index_at(&self, t: f64) -> usize {
        self.times.partition_point(|&s| s <= t).saturating_sub(1)
    }

    /// Exact membership test.
    pub fn position(&self, t: f64) -> Option<usize> {
        self.times.binary_search_by(|s| s.total_cmp(&t)).ok()
    }

    /// Whether every point of `coarse` is also a point of `self`.
    pub fn is_refinement_of(&self, coarse: &Partition) -> bool {
        coarse.times.iter().all(|&t| self.position(t).is_some())
    }

    /// Union of the two point sets.
    pub fn merge(&self, other: &Partition) -> Partition {
        let mut times: Vec<f64> = self.times.iter().chain(other.times.iter()).copied().collect();
        times.sort_by(f64::total_cmp);
        times.dedup();
        Partition { times }
    }

    /// Adds the given times (values outside `(0, T]` are ignored).
    pub fn with_points(&self, extra: &[f64]) -> Partition {
        let t_max = self.horizon();
        let mut times = self.times.clone();
        times.extend(extra.iter().copied().filter(|&t| t > 0.0 && t <= t_max));
        times.sort_by(f64::total_cmp);
        times.dedup();
        Partition { times }
    }

    /// Every `stride`-th point; the last point is always kept.
    pub fn subsample(&self, stride: usize) -> Result<Partition> {
        if stride == 0 || !self.intervals().is_multiple_of(stride) {
            return Err(Error::invalid(format!(
                "stride {stride} does not divide {} intervals",
                self.intervals()
            )));
        }
        Ok(Partition {
            times: self.times.iter().step_by(stride).copied().collect(),
        })
    }
}

/// `{0, T/n, …, T}`.
pub fn uniform_partition(horizon: f64, n: usize) -> Result<Partition> {
    if !(horizon > 0.0 && horizon.is_finite()) {
        return Err(Error::invalid(format!("horizon must be positive, got {horizon}")));
    }
    if n == 0 {
        return Err(Error::invalid("need at least one interval"));
    }
    let mut times: Vec<f64> = (0..=n).map(|k| horizon * k as f64 / n as f64).collect();
    times[n] = horizon;
    Partition::new(times)
}

/// Splits every interval into `factor` equal pieces.
pub fn refine(partition: &Partition, factor: usize) -> Result<Partition> {
    if factor == 0 {
        return Err(Error::invalid("refinement factor must be positive"));
    }
    let mut times = Vec::with_capacity(partition.intervals() * factor + 1);
    for w in partition.times.windows(2) {
        times.push(w[0]);
        let gap = w[1] - w[0];
        for j in 1..factor {
            times.push(w[0] + gap * j as f64 / factor as f64);
        }
    }
    times.push(partition.horizon());
    times.dedup();
    Partition::new(times)
}

/// A piecewise-constant càdlàg path on a finite partition.
#[derive(Debug, Clone, PartialEq)]
pub struct StepPath {
    partition: Partition,
    values: Vec<Point>,
}

impl StepPath {
    pub fn new(partition: Partition, values: Vec<Point>) -> Result<Self> {
        if values.len() != partition.len() {
            return Err(Error::invalid(format!(
                "{} values for a partition of {} points",
                values.len(),
                partition.len()
            )));
        }
        let d = values[0].len();
        if d == 0 || values.iter().any(|v| v.len() != d) {
            return Err(Error::invalid("path values must share a positive dimension"));
        }
        Ok(StepPath { partition, values })
    }

    pub fn constant(partition: Partition, value: Point) -> Self {
        let values = vec![value; partition.len()];
        StepPath { partition, values }
    }

    /// Samples `f` at the partition points.
    pub fn from_fn(partition: Partition, f: impl Fn(f64) -> Point) -> Result<Self> {
        let values = partition.times.iter().map(|&t| f(t)).collect();
        Self::new(partition, values)
    }

    /// Scalar path from plain values.
    pub fn scalar(partition: Partition, values: &[f64]) -> Result<Self> {
        Self::new(partition, values.iter().map(|&v| Point::from_element(1, v)).collect())
    }

    pub fn partition(&self) -> &Partition {
        &self.partition
    }

    pub fn times(&self) -> &[f64] {
        self.partition.times()
    }

    pub fn values(&self) -> &[Point] {
        &self.values
    }

    pub fn into_values(self) -> Vec<Point> {
        self.values
    }

    pub fn dimension(&self) -> usize {
        self.values[0].len()
    }

    pub fn horizon(&self) -> f64 {
        self.partition.horizon()
    }

    pub fn value(&self, k: usize) -> &Point {
        &self.values[k]
    }

    pub fn initial(&self) -> &Point {
        &self.values[0]
    }

    pub fn terminal(&self) -> &Point {
        self.values.last().expect("nonempty path")
    }

    /// Right-continuous evaluation; constant beyond `T`.
    pub fn eval(&self, t: f64) -> &Point {
        &self.values[self.partition.index_at(t)]
    }

    /// Left limit at partition point `k` (the initial value for `k = 0`).
    pub fn left_limit(&self, k: usize) -> &Point {
        &self.values[k.saturating_sub(1)]
    }

    /// Jump at partition point `k`; zero at `k = 0`.
    pub fn jump(&self, k: usize) -> Point {
        if k == 0 {
            Point::zeros(self.dimension())
        } else {
            &self.values[k] - &self.values[k - 1]
        }
    }

    pub fn map(&self, f: impl Fn(&Point) -> Point) -> StepPath {
        StepPath {
            partition: self.partition.clone(),
            values: self.values.iter().map(f).collect(),
        }
    }

    /// Pointwise sum on a shared partition.
    pub fn add(&self, other: &StepPath) -> Result<StepPath> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &StepPath) -> Result<StepPath> {
        self.zip_with(other, |a, b| a - b)
    }

    fn zip_with(&self, other: &StepPath, f: impl Fn(&Point, &Point) -> Point) -> Result<StepPath> {
        if self.partition != other.partition {
            return Err(Error::invalid("paths live on different partitions"));
        }
        Ok(StepPath {
            partition: self.partition.clone(),
            values: self.values.iter().zip(&other.values).map(|(a, b)| f(a, b)).collect(),
        })
    }
}

/// Step discretization `y^{(π)}_t = y_{t_k}` for `t ∈ [t_k, t_{k+1})`.
pub fn discretize(path: &StepPath, partition: &Partition) -> StepPath {
    StepPath {
        partition: partition.clone(),
        values: partition.times.iter().map(|&t| path.eval(t).clone()).collect(),
    }
}

fn points_up_to(times: &[f64], horizon: f64) -> impl Iterator<Item = f64> + '_ {
    times.iter().copied().take_while(move |&t| t <= horizon)
}

/// `sup_{t ≤ T} |p_t − q_t|`, exact for step paths.
pub fn sup_distance(p: &StepPath, q: &StepPath, horizon: f64) -> f64 {
    let grid = p.partition.merge(&q.partition);
    points_up_to(grid.times(), horizon)
        .map(|t| (p.eval(t) - q.eval(t)).norm())
        .fold(0.0, f64::max)
}

/// `max_{t ∈ π, t ≤ T} |p_t − q_t|`.
pub fn grid_distance(p: &StepPath, q: &StepPath, partition: &Partition, horizon: f64) -> f64 {
    points_up_to(partition.times(), horizon)
        .map(|t| (p.eval(t) - q.eval(t)).norm())
        .fold(0.0, f64::max)
}

/// Diagnostic approximation of the Skorokhod J₁ distance.
///
/// Both paths are sampled on the union of their partitions and a uniform grid
/// of `grid_density` intervals; the best monotone coupling of the two sample
/// sequences is found by dynamic programming with cost
/// `max(|s − t|, |p_s − q_t|)`. The identity coupling is admissible, so the
/// result never exceeds [`sup_distance`].
pub fn j1_distance_approx(p: &StepPath, q: &StepPath, horizon: f64, grid_density: usize) -> f64 {
    let mut grid = p.partition.merge(&q.partition);
    if horizon > 0.0 && grid_density > 0 {
        if let Ok(u) = uniform_partition(horizon, grid_density) {
            grid = grid.merge(&u);
        }
    }
    let times: Vec<f64> = points_up_to(grid.times(), horizon).collect();
    let ps: Vec<&Point> = times.iter().map(|&t| p.eval(t)).collect();
    let qs: Vec<&Point> = times.iter().map(|&t| q.eval(t)).collect();
    let cost = |i: usize, j: usize| (times[i] - times[j]).abs().max((ps[i] - qs[j]).norm());
    let n = times.len();
    let mut prev = vec![f64::INFINITY; n];
    for i in 0..n {
        let mut row = vec![f64::INFINITY; n];
        for j in 0..n {
            let best = match (i, j) {
                (0, 0) => 0.0,
                (0, _) => row[j - 1],
                (_, 0) => prev[0],
                _ => prev[j].min(row[j - 1]).min(prev[j - 1]),
            };
            row[j] = cost(i, j).max(best);
        }
        prev = row;
    }
    prev[n - 1].min(sup_distance(p, q, horizon))
}

/// Total variation `Σ |Δ|` over partition points in `(from, to]`.
pub fn variation(path: &StepPath, from: f64, to: f64) -> f64 {
    let times = path.times();
    (1..times.len())
        .filter(|&k| times[k] > from && times[k] <= to)
        .map(|k| (&path.values[k] - &path.values[k - 1]).norm())
        .sum()
}
