//! Scalar abstraction.
//!
//! Everything in this crate is generic over [`Real`], implemented for `f32`
//! and `f64`. Numerical thresholds scale with the precision of the type: the
//! `f64` values are the reference ones, the `f32` values are loosened in
//! proportion to machine epsilon.

use nalgebra::RealField;
use num_traits::{FromPrimitive, ToPrimitive};

pub trait Real: RealField + Copy + FromPrimitive + ToPrimitive {
    /// Largest membership residual accepted for a group element.
    fn membership_tol() -> Self;
    /// Residual above which a valid element is silently reprojected.
    fn reproject_tol() -> Self;
    /// Angle below which closed forms switch to their series expansions.
    fn small_angle() -> Self;
    /// Relative distance to angle pi at which the logarithm is refused.
    fn log_cut() -> Self;
    /// Tolerance for ambient matrices claimed to be tangent vectors.
    fn tangency_tol() -> Self;
    /// Default step for central finite differences.
    fn fd_eps() -> Self;
    /// Values at or below this are treated as converged to zero.
    fn floor() -> Self;

    /// Converts an `f64` literal.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("literal representable in scalar type")
    }

    #[inline]
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Real for f64 {
    fn membership_tol() -> Self {
        1e-9
    }
    fn reproject_tol() -> Self {
        1e-12
    }
    fn small_angle() -> Self {
        1e-6
    }
    fn log_cut() -> Self {
        1e-9
    }
    fn tangency_tol() -> Self {
        1e-9
    }
    fn fd_eps() -> Self {
        1e-5
    }
    fn floor() -> Self {
        // (1e4 * eps)^2
        let e = 1e4 * f64::EPSILON;
        e * e
    }
}

impl Real for f32 {
    fn membership_tol() -> Self {
        1e-4
    }
    fn reproject_tol() -> Self {
        1e-6
    }
    fn small_angle() -> Self {
        1e-3
    }
    fn log_cut() -> Self {
        1e-4
    }
    fn tangency_tol() -> Self {
        1e-4
    }
    fn fd_eps() -> Self {
        1e-2
    }
    fn floor() -> Self {
        let e = 1e2 * f32::EPSILON;
        e * e
    }
}
