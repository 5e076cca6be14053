//! Numerical toolkit for Skorokhod problems and stochastic differential
//! equations with jumps driven by maximal monotone operators:
//!
//! ```text
//! X_t + K_t = H_t + ∫_0^t ⟨f(X_{s-}), dZ_s⟩,   dK_t ∈ A(X_t) dt  (between jumps)
//! ```
//!
//! Operators are represented by their resolvents `J_λ = (I + λA)^{-1}`, post-jump
//! states are selected by a generalized projection onto the closed domain, and
//! the solution is approximated by an Euler-type Skorokhod scheme, a Yosida
//! scheme and a Yosida scheme with jump projection.
//!
//! Module map:
//! - [`operators`]: maximal monotone operators, resolvents, Yosida maps, constant-input flow.
//! - [`projections`]: classical and elastic generalized projections.
//! - [`paths`]: partitions, step paths, distances, variation, CSV/JSONL I/O.
//! - [`skorokhod`]: step-input Skorokhod solver, verifier and the half-line oracle.
//! - [`drivers`]: seeded Brownian + drift + compound Poisson drivers.
//! - [`schemes`]: Euler, Yosida and modified Yosida schemes, coefficient truncation.
//! - [`harness`]: convergence studies, scheme comparison, property suite.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod convex;
pub mod drivers;
pub mod error;
pub mod harness;
pub mod operators;
pub mod paths;
pub mod projections;
pub mod rng;
pub mod schemes;
pub mod skorokhod;

pub use error::{Error, Result};

/// A point of `R^d`.
pub type Point = nalgebra::DVector<f64>;

/// A `d × d` (or general) real matrix.
pub type Matrix = nalgebra::DMatrix<f64>;

/// Default tolerance for domain membership, Euclidean norm.
pub const MEMBERSHIP_TOL: f64 = 1e-8;

/// Smallest admissible resolvent parameter.
pub const MIN_LAMBDA: f64 = 1e-15;

pub(crate) fn ensure_finite(z: &Point, what: &str) -> Result<()> {
    if z.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::invalid(format!("{what} has non-finite components")))
    }
}

pub(crate) fn ensure_dim(z: &Point, d: usize, what: &str) -> Result<()> {
    if z.len() == d {
        Ok(())
    } else {
        Err(Error::invalid(format!(
            "{what} has dimension {}, expected {d}",
            z.len()
        )))
    }
}
