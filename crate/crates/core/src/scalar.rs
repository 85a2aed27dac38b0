use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, NumAssign, ToPrimitive};

/// Floating-point scalar for all simulator math: `f32` or `f64`.
///
/// Besides the usual numeric bounds this carries the per-type tolerances used
/// by state validation, so that the same invariant checks are meaningful at
/// both precisions.
pub trait Scalar:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + NumAssign
    + Sum
    + Debug
    + Display
    + Send
    + Sync
    + 'static
{
    /// Tolerance for algebraic identities that hold up to a few rounding
    /// steps: trace, Hermiticity, state normalization.
    fn tight_tol() -> Self;

    /// Tolerance for identities degraded by chained conjugations: unitarity,
    /// positive semidefiniteness, Bell-diagonality after twirling.
    fn loose_tol() -> Self;

    /// Below this, a measurement branch probability is treated as numerically
    /// degenerate and renormalizing by it is refused.
    fn prob_floor() -> Self;

    /// Shorthand for converting literals; panics only on non-representable
    /// input, which never happens for the constants used here.
    fn real(x: f64) -> Self {
        Self::from_f64(x).expect("literal representable in scalar type")
    }
}

impl Scalar for f64 {
    fn tight_tol() -> f64 {
        1e-12
    }
    fn loose_tol() -> f64 {
        1e-10
    }
    fn prob_floor() -> f64 {
        1e-15
    }
}

impl Scalar for f32 {
    fn tight_tol() -> f32 {
        1e-5
    }
    fn loose_tol() -> f32 {
        1e-4
    }
    fn prob_floor() -> f32 {
        1e-9
    }
}
