//! Floating-point scalar abstraction shared by every numeric module.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, NumAssign, ToPrimitive};

/// Real scalar used for probabilities, distances and transport costs.
///
/// Implemented for `f64` (the default everywhere) and `f32`. The
/// associated tolerances scale the fixed thresholds used by validators so
/// that single precision does not reject its own rounding error.
pub trait Real:
    Float + FromPrimitive + ToPrimitive + NumAssign + Sum + Debug + Display + Default + Send + Sync + 'static
{
    /// Absolute tolerance for exact-identity checks (symmetry, sums to one).
    fn tolerance() -> Self;

    /// Tolerance accepted on renormalizing a near-simplex input vector.
    fn normalize_tolerance() -> Self;

    /// Converts an `f64` literal. Panics only on values a float cannot hold,
    /// which never happens for the literals used in this crate.
    #[inline]
    fn lit(v: f64) -> Self {
        Self::from_f64(v).expect("literal representable as scalar")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Real for f64 {
    #[inline]
    fn tolerance() -> f64 {
        1e-9
    }

    #[inline]
    fn normalize_tolerance() -> f64 {
        1e-6
    }
}

impl Real for f32 {
    #[inline]
    fn tolerance() -> f32 {
        1e-5
    }

    #[inline]
    fn normalize_tolerance() -> f32 {
        1e-4
    }
}
