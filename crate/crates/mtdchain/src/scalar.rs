//! Scalar abstraction for the numeric core.
//!
//! All probability math in this crate is generic over [`Scalar`], so the
//! same code paths run on `f32` and `f64`. Numerical tolerances are part of
//! the trait because they have to track the precision of the scalar: the
//! `f64` values are the crate's reference tolerances, the `f32` values are
//! scaled up to sit safely above single-precision rounding noise.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, NumAssignOps, ToPrimitive};

/// Floating-point scalar usable by the chain, solver, and model code.
pub trait Scalar:
    Float + NumAssignOps + FromPrimitive + ToPrimitive + Sum + Debug + Display + Send + Sync + 'static
{
    /// Simplex pivot threshold: tableau entries below this (in absolute
    /// value) are treated as zero when selecting pivots.
    fn pivot_tol() -> Self;

    /// Feasibility tolerance for constraint satisfaction checks and the
    /// phase-one zero test of the LP solver.
    fn feas_tol() -> Self;

    /// Tolerance for stochastic-vector checks: column sums of transition
    /// matrices, distribution sums, and lag-weight sums.
    fn prob_tol() -> Self;

    /// Convert a literal given as `f64`. Panics if the value is not
    /// representable, which cannot happen for the in-range constants this
    /// crate uses it for.
    fn real(x: f64) -> Self {
        Self::from_f64(x).expect("constant representable in scalar type")
    }
}

impl Scalar for f64 {
    fn pivot_tol() -> Self {
        1e-10
    }

    fn feas_tol() -> Self {
        1e-8
    }

    fn prob_tol() -> Self {
        1e-9
    }
}

impl Scalar for f32 {
    fn pivot_tol() -> Self {
        1e-6
    }

    fn feas_tol() -> Self {
        1e-4
    }

    fn prob_tol() -> Self {
        1e-4
    }
}
