//! Generalized projections onto `D̄(A)`: non-expansive maps that fix the
//! closed domain pointwise. Post-jump states of the Skorokhod problem are
//! chosen by one of these.

use serde::{Deserialize, Serialize};

use crate::operators::MonotoneOperator;
use crate::{Error, Point, Result};

pub const DEFAULT_ITERATED_TOL: f64 = 1e-10;
pub const DEFAULT_ITERATED_MAX_ITER: usize = 100_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Projection {
    /// Nearest-point projection.
    Classical,
    /// `p − c(z − p)` with `p` the nearest point; may leave the domain.
    Elastic { c: f64 },
    /// Limit of repeated elastic reflections.
    ElasticIterated {
        c: f64,
        #[serde(default = "default_tol")]
        tol: f64,
        #[serde(default = "default_max_iter")]
        max_iter: usize,
    },
}

fn default_tol() -> f64 {
    DEFAULT_ITERATED_TOL
}

fn default_max_iter() -> usize {
    DEFAULT_ITERATED_MAX_ITER
}

fn check_elasticity(c: f64) -> Result<()> {
    if (0.0..=1.0).contains(&c) {
        Ok(())
    } else {
        Err(Error::invalid(format!("elasticity must lie in [0, 1], got {c}")))
    }
}

impl Projection {
    pub fn elastic(c: f64) -> Result<Self> {
        check_elasticity(c)?;
        Ok(Projection::Elastic { c })
    }

    pub fn elastic_iterated(c: f64) -> Result<Self> {
        check_elasticity(c)?;
        Ok(Projection::ElasticIterated {
            c,
            tol: DEFAULT_ITERATED_TOL,
            max_iter: DEFAULT_ITERATED_MAX_ITER,
        })
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            Projection::Classical => Ok(()),
            Projection::Elastic { c } => check_elasticity(c),
            Projection::ElasticIterated { c, tol, max_iter } => {
                check_elasticity(c)?;
                if !(tol > 0.0) || max_iter == 0 {
                    return Err(Error::invalid("iterated projection needs tol > 0 and max_iter ≥ 1"));
                }
                Ok(())
            }
        }
    }

    /// Whether the image is guaranteed to lie in the closed domain.
    pub fn maps_into_domain(&self) -> bool {
        !matches!(self, Projection::Elastic { .. })
    }

    /// Applies the projection. Parameters are used as stored; call
    /// [`Projection::validate`] first for untrusted values.
    pub fn apply(&self, op: &MonotoneOperator, z: &Point) -> Result<Point> {
        match *self {
            Projection::Classical => project_classical(op, z),
            Projection::Elastic { c } => elastic_step(op, c, z),
            Projection::ElasticIterated { c, tol, max_iter } => iterate_elastic(op, c, z, tol, max_iter),
        }
    }
}

pub fn project_classical(op: &MonotoneOperator, z: &Point) -> Result<Point> {
    op.project_domain(z)
}

fn elastic_step(op: &MonotoneOperator, c: f64, z: &Point) -> Result<Point> {
    let p = op.project_domain(z)?;
    let overshoot = z - &p;
    Ok(p - overshoot * c)
}

/// `Π^c(z) = p − c(z − p)` with `p = Π_{D̄(A)}(z)`.
pub fn project_elastic(op: &MonotoneOperator, c: f64, z: &Point) -> Result<Point> {
    check_elasticity(c)?;
    elastic_step(op, c, z)
}

/// Iterates `w ← Π^c(w)` until `w` is in the domain within `tol` or the
/// displacement drops below `tol`.
pub fn project_elastic_iterated(
    op: &MonotoneOperator,
    c: f64,
    z: &Point,
    tol: f64,
    max_iter: usize,
) -> Result<Point> {
    check_elasticity(c)?;
    if !(tol > 0.0) {
        return Err(Error::invalid("tolerance must be positive"));
    }
    iterate_elastic(op, c, z, tol, max_iter)
}

fn iterate_elastic(op: &MonotoneOperator, c: f64, z: &Point, tol: f64, max_iter: usize) -> Result<Point> {
    let mut w = z.clone();
    let mut residual = op.domain().distance(&w)?;
    if residual <= tol {
        return Ok(w);
    }
    for _ in 0..max_iter {
        let next = elastic_step(op, c, &w)?;
        let moved = (&next - &w).norm();
        w = next;
        residual = op.domain().distance(&w)?;
        if residual <= tol || moved < tol {
            return Ok(w);
        }
    }
    Err(Error::NonConvergence {
        what: "iterated elastic projection",
        iterations: max_iter,
        residual,
        last_iterate: w.iter().copied().collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::convex::HalfSpace;

    fn p(v: &[f64]) -> Point {
        Point::from_column_slice(v)
    }

    fn unit_box() -> MonotoneOperator {
        MonotoneOperator::indicator_box(p(&[0.0, 0.0]), p(&[1.0, 1.0])).unwrap()
    }

    #[test]
    fn classical_examples() {
        let hl = MonotoneOperator::indicator_halfline();
        assert_eq!(project_classical(&hl, &p(&[-2.0])).unwrap()[0], 0.0);
        assert_eq!(project_classical(&unit_box(), &p(&[0.3, 0.7])).unwrap(), p(&[0.3, 0.7]));
        let ball = MonotoneOperator::indicator_ball(p(&[0.0, 0.0]), 1.0).unwrap();
        assert_eq!(project_classical(&ball, &p(&[0.0, 3.0])).unwrap(), p(&[0.0, 1.0]));
    }

    #[test]
    fn elastic_examples() {
        let hl = MonotoneOperator::indicator_halfline();
        assert_eq!(project_elastic(&hl, 0.5, &p(&[-2.0])).unwrap()[0], 1.0);
        assert_eq!(project_elastic(&unit_box(), 0.3, &p(&[0.2, 0.9])).unwrap(), p(&[0.2, 0.9]));
        assert_eq!(project_elastic(&unit_box(), 1.0, &p(&[1.5, 0.5])).unwrap(), p(&[0.5, 0.5]));
        assert!(matches!(project_elastic(&hl, 1.5, &p(&[1.0])), Err(Error::InvalidArgument(_))));
        assert!(matches!(project_elastic(&hl, -0.1, &p(&[1.0])), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn iterated_examples() {
        let hl = MonotoneOperator::indicator_halfline();
        for c in [0.0, 0.4, 1.0] {
            let once = project_elastic(&hl, c, &p(&[-2.0])).unwrap();
            let it = project_elastic_iterated(&hl, c, &p(&[-2.0]), 1e-10, 100).unwrap();
            assert_eq!(once, it);
        }
        let it = project_elastic_iterated(&unit_box(), 1.0, &p(&[2.0, 2.0]), 1e-10, 100).unwrap();
        assert_eq!(it, p(&[0.0, 0.0]));
    }

    #[test]
    fn iterated_reports_nonconvergence() {
        // Mirror reflection in a thin slab bounces between the faces for a while.
        let slab = MonotoneOperator::indicator_polyhedron(vec![
            HalfSpace::new(p(&[1.0]), 1.0).unwrap(),
            HalfSpace::new(p(&[-1.0]), 0.0).unwrap(),
        ])
        .unwrap();
        let err = project_elastic_iterated(&slab, 1.0, &p(&[10.5]), 1e-10, 3).unwrap_err();
        assert!(matches!(err, Error::NonConvergence { iterations: 3, .. }));
        let ok = project_elastic_iterated(&slab, 1.0, &p(&[10.5]), 1e-10, 100).unwrap();
        assert!(slab.contains(&ok, 1e-10).unwrap());
    }
}
