//! Closed convex sets with nonempty interior and their nearest-point projections.
//!
//! Polyhedra are projected with Dykstra's alternating projection method; once
//! the iteration settles, the active faces are read off the correction vectors
//! and the exact projection onto their intersection is recovered by a small
//! normal-equation solve, subject to a KKT check.

use crate::{ensure_dim, ensure_finite, Error, Matrix, Point, Result};

/// Dykstra stopping tolerance on the cycle-to-cycle change.
pub const DYKSTRA_TOL: f64 = 1e-10;
/// Dykstra iteration cap (full sweeps over all faces).
pub const DYKSTRA_MAX_ITER: usize = 10_000;

/// The half-space `{x : ⟨normal, x⟩ ≤ offset}`.
#[derive(Debug, Clone, PartialEq)]
pub struct HalfSpace {
    pub normal: Point,
    pub offset: f64,
}

impl HalfSpace {
    pub fn new(normal: Point, offset: f64) -> Result<Self> {
        ensure_finite(&normal, "half-space normal")?;
        if !offset.is_finite() {
            return Err(Error::invalid("half-space offset must be finite"));
        }
        if normal.norm() == 0.0 {
            return Err(Error::invalid("half-space normal must be nonzero"));
        }
        Ok(HalfSpace { normal, offset })
    }

    fn violation(&self, z: &Point) -> f64 {
        self.normal.dot(z) - self.offset
    }

    pub fn project(&self, z: &Point) -> Point {
        let v = self.violation(z);
        if v <= 0.0 {
            z.clone()
        } else {
            z - &self.normal * (v / self.normal.norm_squared())
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ConvexSet {
    /// All of `R^d`.
    Whole { dim: usize },
    HalfSpace(HalfSpace),
    /// Axis-aligned box; infinite bounds are allowed.
    Box { lo: Point, hi: Point },
    Ball { center: Point, radius: f64 },
    /// Finite intersection of half-spaces.
    Polyhedron { dim: usize, faces: Vec<HalfSpace> },
}

impl ConvexSet {
    pub fn whole(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid("dimension must be positive"));
        }
        Ok(ConvexSet::Whole { dim })
    }

    pub fn half_space(normal: Point, offset: f64) -> Result<Self> {
        Ok(ConvexSet::HalfSpace(HalfSpace::new(normal, offset)?))
    }

    pub fn bounded_box(lo: Point, hi: Point) -> Result<Self> {
        if lo.len() != hi.len() || lo.is_empty() {
            return Err(Error::invalid("box bounds must have equal positive dimension"));
        }
        for (l, h) in lo.iter().zip(hi.iter()) {
            if l.is_nan() || h.is_nan() || *l == f64::INFINITY || *h == f64::NEG_INFINITY {
                return Err(Error::invalid("box bounds are malformed"));
            }
            if !(l < h) {
                return Err(Error::invalid(format!(
                    "box has empty interior: lower bound {l} is not below upper bound {h}"
                )));
            }
        }
        Ok(ConvexSet::Box { lo, hi })
    }

    pub fn ball(center: Point, radius: f64) -> Result<Self> {
        ensure_finite(&center, "ball center")?;
        if center.is_empty() {
            return Err(Error::invalid("ball dimension must be positive"));
        }
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::invalid(format!("ball radius must be positive, got {radius}")));
        }
        Ok(ConvexSet::Ball { center, radius })
    }

    /// Intersection of half-spaces. Rejects empty and lower-dimensional sets.
    pub fn polyhedron(faces: Vec<HalfSpace>) -> Result<Self> {
        let dim = faces
            .first()
            .map(|f| f.normal.len())
            .ok_or_else(|| Error::invalid("polyhedron needs at least one face"))?;
        if faces.iter().any(|f| f.normal.len() != dim) {
            return Err(Error::invalid("polyhedron faces have mixed dimensions"));
        }
        if !has_interior(&faces, dim) {
            return Err(Error::invalid(
                "polyhedron is empty or has empty interior",
            ));
        }
        Ok(ConvexSet::Polyhedron { dim, faces })
    }

    pub fn dimension(&self) -> usize {
        match self {
            ConvexSet::Whole { dim } | ConvexSet::Polyhedron { dim, .. } => *dim,
            ConvexSet::HalfSpace(h) => h.normal.len(),
            ConvexSet::Box { lo, .. } => lo.len(),
            ConvexSet::Ball { center, .. } => center.len(),
        }
    }

    /// Nearest point of the set.
    pub fn project(&self, z: &Point) -> Result<Point> {
        ensure_dim(z, self.dimension(), "point")?;
        Ok(match self {
            ConvexSet::Whole { .. } => z.clone(),
            ConvexSet::HalfSpace(h) => h.project(z),
            ConvexSet::Box { lo, hi } => {
                Point::from_iterator(z.len(), (0..z.len()).map(|i| z[i].clamp(lo[i], hi[i])))
            }
            ConvexSet::Ball { center, radius } => {
                let r = z - center;
                let n = r.norm();
                if n <= *radius {
                    z.clone()
                } else {
                    center + r * (*radius / n)
                }
            }
            ConvexSet::Polyhedron { faces, .. } => project_polyhedron(z, faces)?,
        })
    }

    /// Euclidean distance to the set.
    pub fn distance(&self, z: &Point) -> Result<f64> {
        if let ConvexSet::Polyhedron { faces, .. } = self {
            if faces.iter().all(|f| f.violation(z) <= 0.0) {
                return Ok(0.0);
            }
        }
        Ok((z - self.project(z)?).norm())
    }

    /// Whether `z` is in the interior with margin `eps` (used for graph samples).
    pub fn interior_margin(&self, z: &Point) -> f64 {
        match self {
            ConvexSet::Whole { .. } => f64::INFINITY,
            ConvexSet::HalfSpace(h) => -h.violation(z) / h.normal.norm(),
            ConvexSet::Box { lo, hi } => (0..z.len())
                .map(|i| (z[i] - lo[i]).min(hi[i] - z[i]))
                .fold(f64::INFINITY, f64::min),
            ConvexSet::Ball { center, radius } => radius - (z - center).norm(),
            ConvexSet::Polyhedron { faces, .. } => faces
                .iter()
                .map(|f| -f.violation(z) / f.normal.norm())
                .fold(f64::INFINITY, f64::min),
        }
    }
}

fn has_interior(faces: &[HalfSpace], dim: usize) -> bool {
    const MARGIN: f64 = 1e-6;
    let shrunk: Vec<HalfSpace> = faces
        .iter()
        .map(|f| HalfSpace {
            normal: f.normal.clone(),
            offset: f.offset - MARGIN * f.normal.norm(),
        })
        .collect();
    let (x, _) = dykstra(&Point::zeros(dim), &shrunk, DYKSTRA_TOL, DYKSTRA_MAX_ITER);
    shrunk
        .iter()
        .all(|f| f.violation(&x) <= 1e-9 * f.normal.norm())
}

/// Dykstra's method; returns the last iterate and the per-face corrections.
/// Convergence is not asserted here.
pub fn dykstra(z: &Point, faces: &[HalfSpace], tol: f64, max_iter: usize) -> (Point, Vec<Point>) {
    let mut x = z.clone();
    let mut corr = vec![Point::zeros(z.len()); faces.len()];
    for _ in 0..max_iter {
        let start = x.clone();
        let mut corr_change = 0.0_f64;
        for (face, c) in faces.iter().zip(corr.iter_mut()) {
            let y = &x + &*c;
            let x_new = face.project(&y);
            let c_new = &y - &x_new;
            corr_change = corr_change.max((&c_new - &*c).norm());
            *c = c_new;
            x = x_new;
        }
        if (&x - &start).norm() < tol && corr_change < tol {
            break;
        }
    }
    (x, corr)
}

fn project_polyhedron(z: &Point, faces: &[HalfSpace]) -> Result<Point> {
    if faces.iter().all(|f| f.violation(z) <= 0.0) {
        return Ok(z.clone());
    }
    let (x, corr) = dykstra(z, faces, DYKSTRA_TOL, DYKSTRA_MAX_ITER);
    let scale = 1.0 + z.norm();
    let active: Vec<usize> = (0..faces.len())
        .filter(|&i| corr[i].norm() > 1e-14 * scale)
        .collect();
    if let Some(exact) = polish(z, faces, &active) {
        return Ok(exact);
    }
    // The correction support can miss a face that is active with a zero
    // multiplier; retry with every face that is tight at the Dykstra iterate.
    let tight: Vec<usize> = (0..faces.len())
        .filter(|&i| faces[i].violation(&x).abs() <= 1e-8 * faces[i].normal.norm() * scale)
        .collect();
    if let Some(exact) = polish(z, faces, &tight) {
        return Ok(exact);
    }
    let residual = faces
        .iter()
        .map(|f| f.violation(&x).max(0.0))
        .fold(0.0, f64::max);
    if residual <= DYKSTRA_TOL * scale {
        Ok(x)
    } else {
        Err(Error::NonConvergence {
            what: "polyhedron projection",
            iterations: DYKSTRA_MAX_ITER,
            residual,
            last_iterate: x.iter().copied().collect(),
        })
    }
}

/// Exact projection onto `{⟨a_i, x⟩ = b_i, i ∈ active}`, accepted only if the
/// result is feasible for every face and all multipliers are nonnegative.
fn polish(z: &Point, faces: &[HalfSpace], active: &[usize]) -> Option<Point> {
    if active.is_empty() || active.len() > z.len() {
        return None;
    }
    let d = z.len();
    let m = active.len();
    let a = Matrix::from_fn(m, d, |r, c| faces[active[r]].normal[c]);
    let rhs = Point::from_iterator(m, active.iter().map(|&i| faces[i].violation(z)));
    let gram = &a * a.transpose();
    let mu = gram.lu().solve(&rhs)?;
    if mu.iter().any(|v| !v.is_finite() || *v < -1e-12) {
        return None;
    }
    let x = z - a.transpose() * mu;
    let scale = 1.0 + z.norm();
    let feasible = faces
        .iter()
        .all(|f| f.violation(&x) <= 1e-12 * f.normal.norm() * scale);
    feasible.then_some(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(v: &[f64]) -> Point {
        Point::from_column_slice(v)
    }

    fn wedge() -> ConvexSet {
        ConvexSet::polyhedron(vec![
            HalfSpace::new(p(&[1.0, -1.0]), 0.0).unwrap(),
            HalfSpace::new(p(&[-1.0, -1.0]), 0.0).unwrap(),
        ])
        .unwrap()
    }

    #[test]
    fn box_clamps() {
        let b = ConvexSet::bounded_box(p(&[0.0, 0.0]), p(&[1.0, 1.0])).unwrap();
        assert_eq!(b.project(&p(&[2.0, 0.5])).unwrap(), p(&[1.0, 0.5]));
    }

    #[test]
    fn wedge_projection_hits_face_and_apex() {
        let w = wedge();
        let x = w.project(&p(&[3.0, 0.0])).unwrap();
        assert!((x - p(&[1.5, 1.5])).norm() < 1e-14);
        let apex = w.project(&p(&[0.0, -5.0])).unwrap();
        assert!(apex.norm() < 1e-14);
    }

    #[test]
    fn polyhedron_matches_box_projection() {
        let faces = vec![
            HalfSpace::new(p(&[1.0, 0.0]), 1.0).unwrap(),
            HalfSpace::new(p(&[-1.0, 0.0]), 0.0).unwrap(),
            HalfSpace::new(p(&[0.0, 1.0]), 1.0).unwrap(),
            HalfSpace::new(p(&[0.0, -1.0]), 0.0).unwrap(),
        ];
        let poly = ConvexSet::polyhedron(faces).unwrap();
        let bx = ConvexSet::bounded_box(p(&[0.0, 0.0]), p(&[1.0, 1.0])).unwrap();
        for z in [p(&[2.0, 3.0]), p(&[-1.0, 0.5]), p(&[0.3, -2.0]), p(&[0.2, 0.4])] {
            let a = poly.project(&z).unwrap();
            let b = bx.project(&z).unwrap();
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn degenerate_sets_rejected() {
        let flat = ConvexSet::polyhedron(vec![
            HalfSpace::new(p(&[1.0]), 0.0).unwrap(),
            HalfSpace::new(p(&[-1.0]), 0.0).unwrap(),
        ]);
        assert!(flat.is_err());
        let empty = ConvexSet::polyhedron(vec![
            HalfSpace::new(p(&[1.0]), -1.0).unwrap(),
            HalfSpace::new(p(&[-1.0]), -1.0).unwrap(),
        ]);
        assert!(empty.is_err());
        assert!(ConvexSet::bounded_box(p(&[0.0]), p(&[0.0])).is_err());
        assert!(ConvexSet::ball(p(&[0.0]), 0.0).is_err());
        assert!(HalfSpace::new(p(&[0.0, 0.0]), 1.0).is_err());
    }
}
