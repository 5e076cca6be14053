//! Maximal monotone operators represented through their resolvents.
//!
//! Every scheme in this crate only needs `J_λ = (I + λA)^{-1}` and the
//! nearest-point projection onto the closed domain, so multivalued operators
//! such as normal cones are handled without set-valued data.

use std::fmt;
use std::sync::Arc;

use nalgebra::SymmetricEigen;

use crate::convex::ConvexSet;
use crate::{ensure_dim, ensure_finite, Error, Matrix, Point, Result, MEMBERSHIP_TOL, MIN_LAMBDA};

/// Proximal map `(λ, z) ↦ argmin_y φ(y) + |y − z|² / (2λ)`.
pub type ProxFn = Arc<dyn Fn(f64, &Point) -> Point + Send + Sync>;

#[derive(Clone)]
pub enum ProxKind {
    /// `φ(x) = w·Σ|x_i|`, soft thresholding.
    L1 { weight: f64 },
    /// `φ(x) = w·|x|²/2`.
    HalfSquaredNorm { weight: f64 },
    Custom(ProxFn),
}

impl fmt::Debug for ProxKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ProxKind::L1 { weight } => write!(f, "L1 {{ weight: {weight} }}"),
            ProxKind::HalfSquaredNorm { weight } => write!(f, "HalfSquaredNorm {{ weight: {weight} }}"),
            ProxKind::Custom(_) => f.write_str("Custom(..)"),
        }
    }
}

#[derive(Debug, Clone)]
enum Kind {
    /// `A ≡ {0}` on `R^d`.
    Zero,
    /// Subdifferential of the indicator of the domain (normal cone).
    Indicator,
    Linear(Matrix),
    Prox(ProxKind),
}

/// A maximal monotone operator on `R^d`. Immutable after construction.
#[derive(Debug, Clone)]
pub struct MonotoneOperator {
    kind: Kind,
    domain: ConvexSet,
}

impl MonotoneOperator {
    pub fn zero(dim: usize) -> Result<Self> {
        Ok(MonotoneOperator {
            kind: Kind::Zero,
            domain: ConvexSet::whole(dim)?,
        })
    }

    /// `∂I_D` for a closed convex `D` with nonempty interior.
    pub fn indicator(set: ConvexSet) -> Self {
        MonotoneOperator {
            kind: Kind::Indicator,
            domain: set,
        }
    }

    /// `∂I_{[0,∞)}` on the real line.
    pub fn indicator_halfline() -> Self {
        Self::indicator(
            ConvexSet::bounded_box(Point::from_element(1, 0.0), Point::from_element(1, f64::INFINITY))
                .expect("half-line is a valid box"),
        )
    }

    /// `∂I` of `{x : ⟨a, x⟩ ≤ b}`.
    pub fn indicator_halfspace(a: Point, b: f64) -> Result<Self> {
        Ok(Self::indicator(ConvexSet::half_space(a, b)?))
    }

    pub fn indicator_box(lo: Point, hi: Point) -> Result<Self> {
        Ok(Self::indicator(ConvexSet::bounded_box(lo, hi)?))
    }

    pub fn indicator_ball(center: Point, radius: f64) -> Result<Self> {
        Ok(Self::indicator(ConvexSet::ball(center, radius)?))
    }

    pub fn indicator_polyhedron(faces: Vec<crate::convex::HalfSpace>) -> Result<Self> {
        Ok(Self::indicator(ConvexSet::polyhedron(faces)?))
    }

    /// `A(x) = Mx` with `⟨Mx, x⟩ ≥ 0`.
    pub fn linear_monotone(m: Matrix) -> Result<Self> {
        if m.nrows() != m.ncols() || m.nrows() == 0 {
            return Err(Error::invalid("linear operator needs a nonempty square matrix"));
        }
        if m.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("linear operator has non-finite entries"));
        }
        let sym = (&m + m.transpose()) * 0.5;
        let min_eig = SymmetricEigen::new(sym).eigenvalues.min();
        if min_eig < -1e-12 * (1.0 + m.norm()) {
            return Err(Error::invalid(format!(
                "matrix is not monotone: symmetric part has eigenvalue {min_eig}"
            )));
        }
        let dim = m.nrows();
        Ok(MonotoneOperator {
            kind: Kind::Linear(m),
            domain: ConvexSet::whole(dim)?,
        })
    }

    /// Subdifferential of a proper convex lsc function given by its proximal map.
    /// `domain` must be the closure of the domain of the function.
    pub fn convex_prox(domain: ConvexSet, prox: ProxKind) -> Result<Self> {
        match &prox {
            ProxKind::L1 { weight } | ProxKind::HalfSquaredNorm { weight }
                if !(*weight >= 0.0 && weight.is_finite()) =>
            {
                return Err(Error::invalid("proximal weight must be nonnegative"));
            }
            _ => {}
        }
        if !matches!(prox, ProxKind::Custom(_)) && !matches!(domain, ConvexSet::Whole { .. }) {
            return Err(Error::invalid(
                "built-in proximal maps are for functions finite on R^d; use ProxKind::Custom for restricted domains",
            ));
        }
        Ok(MonotoneOperator {
            kind: Kind::Prox(prox),
            domain,
        })
    }

    pub fn l1_norm(dim: usize, weight: f64) -> Result<Self> {
        Self::convex_prox(ConvexSet::whole(dim)?, ProxKind::L1 { weight })
    }

    pub fn dimension(&self) -> usize {
        self.domain.dimension()
    }

    /// Closure of the domain of the operator.
    pub fn domain(&self) -> &ConvexSet {
        &self.domain
    }

    pub fn is_zero(&self) -> bool {
        matches!(self.kind, Kind::Zero)
    }

    /// Whether `A = ∂I_D`, so that every resolvent is the domain projection.
    pub fn is_indicator(&self) -> bool {
        matches!(self.kind, Kind::Indicator)
    }

    /// Whether `A = ∂I_{[0,∞)}` on the real line.
    pub fn is_halfline_indicator(&self) -> bool {
        self.is_indicator()
            && matches!(&self.domain, ConvexSet::Box { lo, hi }
                if lo.len() == 1 && lo[0] == 0.0 && hi[0] == f64::INFINITY)
    }

    /// Short human-readable description.
    pub fn label(&self) -> String {
        let set = match &self.domain {
            ConvexSet::Whole { dim } => format!("R^{dim}"),
            ConvexSet::HalfSpace(_) => "halfspace".into(),
            ConvexSet::Box { .. } => "box".into(),
            ConvexSet::Ball { .. } => "ball".into(),
            ConvexSet::Polyhedron { faces, .. } => format!("polyhedron[{}]", faces.len()),
        };
        match &self.kind {
            Kind::Zero => format!("zero on {set}"),
            Kind::Indicator => format!("indicator of {set}"),
            Kind::Linear(_) => format!("linear on {set}"),
            Kind::Prox(p) => format!("prox {p:?} on {set}"),
        }
    }

    /// Whether the resolvent has a closed form (no inner iteration).
    pub fn has_closed_form_resolvent(&self) -> bool {
        !matches!(self.domain, ConvexSet::Polyhedron { .. })
    }

    /// `Π_{D̄(A)}(z)`.
    pub fn project_domain(&self, z: &Point) -> Result<Point> {
        self.domain.project(z)
    }

    /// Whether `dist(z, D̄(A)) ≤ tol`.
    pub fn contains(&self, z: &Point, tol: f64) -> Result<bool> {
        Ok(self.domain.distance(z)? <= tol)
    }

    /// One element of `A(z)`, when `A` is single-valued at `z`.
    pub fn graph_sample(&self, z: &Point) -> Option<Point> {
        match &self.kind {
            Kind::Zero => Some(Point::zeros(z.len())),
            Kind::Indicator => (self.domain.interior_margin(z) > 0.0).then(|| Point::zeros(z.len())),
            Kind::Linear(m) => Some(m * z),
            Kind::Prox(ProxKind::L1 { weight }) => {
                if z.iter().all(|v| *v != 0.0) {
                    Some(z.map(|v| weight * v.signum()))
                } else {
                    None
                }
            }
            Kind::Prox(ProxKind::HalfSquaredNorm { weight }) => Some(z * *weight),
            Kind::Prox(ProxKind::Custom(_)) => None,
        }
    }

    fn raw_resolvent(&self, lambda: f64, z: &Point) -> Result<Point> {
        match &self.kind {
            Kind::Zero => Ok(z.clone()),
            Kind::Indicator => self.domain.project(z),
            Kind::Linear(m) => {
                let d = m.nrows();
                let sys = Matrix::identity(d, d) + m * lambda;
                sys.lu()
                    .solve(z)
                    .ok_or_else(|| Error::invalid("singular resolvent system"))
            }
            Kind::Prox(ProxKind::L1 { weight }) => {
                let t = lambda * weight;
                Ok(z.map(|v| v.signum() * (v.abs() - t).max(0.0)))
            }
            Kind::Prox(ProxKind::HalfSquaredNorm { weight }) => Ok(z / (1.0 + lambda * weight)),
            Kind::Prox(ProxKind::Custom(prox)) => Ok(prox(lambda, z)),
        }
    }
}

fn check_lambda(lambda: f64) -> Result<()> {
    if lambda.is_finite() && lambda >= MIN_LAMBDA {
        Ok(())
    } else {
        Err(Error::invalid(format!(
            "resolvent parameter must be in [{MIN_LAMBDA:e}, ∞), got {lambda}"
        )))
    }
}

/// `J_λ(z) = (I + λA)^{-1}(z)`.
pub fn resolve(op: &MonotoneOperator, lambda: f64, z: &Point) -> Result<Point> {
    check_lambda(lambda)?;
    ensure_dim(z, op.dimension(), "point")?;
    ensure_finite(z, "point")?;
    op.raw_resolvent(lambda, z)
}

/// `J_n(z) = (I + A/n)^{-1}(z)`; `n` may be any positive real.
pub fn yosida_j(op: &MonotoneOperator, n: f64, z: &Point) -> Result<Point> {
    if !(n > 0.0 && n.is_finite()) {
        return Err(Error::invalid(format!("Yosida index must be positive, got {n}")));
    }
    resolve(op, 1.0 / n, z)
}

/// Yosida approximation `A_n(z) = n (z − J_n(z))`.
pub fn yosida_a(op: &MonotoneOperator, n: f64, z: &Point) -> Result<Point> {
    let j = yosida_j(op, n, z)?;
    Ok((z - j) * n)
}

/// Resolvent of the Yosida approximation, `(I + μA_n)^{-1}(x)`, via
/// `(λ/(λ+μ)) x + (μ/(λ+μ)) J_{λ+μ}(x)` with `λ = 1/n`.
pub fn yosida_resolve(op: &MonotoneOperator, n: f64, mu: f64, x: &Point) -> Result<Point> {
    if !(n > 0.0 && n.is_finite()) {
        return Err(Error::invalid(format!("Yosida index must be positive, got {n}")));
    }
    if !(mu >= 0.0 && mu.is_finite()) {
        return Err(Error::invalid(format!("step must be nonnegative, got {mu}")));
    }
    if mu == 0.0 {
        return Ok(x.clone());
    }
    let lambda = 1.0 / n;
    let s = lambda + mu;
    let j = resolve(op, s, x)?;
    Ok(x * (lambda / s) + j * (mu / s))
}

/// Constant-input Skorokhod flow `SP^{(1)}(A; α)_t`, approximated by `m`
/// implicit resolvent steps `x ← J_{t/m}(x)`. Returns all `m + 1` iterates.
pub fn flow_path(op: &MonotoneOperator, alpha: &Point, t: f64, m: usize) -> Result<Vec<Point>> {
    ensure_dim(alpha, op.dimension(), "flow start")?;
    ensure_finite(alpha, "flow start")?;
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::invalid(format!("flow time must be nonnegative, got {t}")));
    }
    if m == 0 {
        return Err(Error::invalid("flow needs at least one substep"));
    }
    let distance = op.domain.distance(alpha)?;
    if distance > MEMBERSHIP_TOL {
        return Err(Error::DomainViolation {
            distance,
            tolerance: MEMBERSHIP_TOL,
        });
    }
    if t == 0.0 {
        return Ok(vec![alpha.clone(); m + 1]);
    }
    let h = t / m as f64;
    check_lambda(h)?;
    let mut out = Vec::with_capacity(m + 1);
    out.push(alpha.clone());
    for i in 0..m {
        let next = op.raw_resolvent(h, &out[i])?;
        out.push(next);
    }
    Ok(out)
}

/// Endpoint of [`flow_path`].
pub fn flow(op: &MonotoneOperator, alpha: &Point, t: f64, m: usize) -> Result<Point> {
    if t == 0.0 {
        flow_path(op, alpha, 0.0, 1)?;
        return Ok(alpha.clone());
    }
    Ok(flow_path(op, alpha, t, m)?.pop().expect("nonempty flow path"))
}
