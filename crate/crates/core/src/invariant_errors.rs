//! Canonical invariant errors and synchrony measurement.

use crate::error::Result;
use crate::lie::{AlgebraVector, GroupElement, TangentVector};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ErrorSide {
    /// `E_r = X_hat X^{-1}`, invariant under simultaneous right translation.
    Right,
    /// `E_l = X^{-1} X_hat`, invariant under simultaneous left translation.
    Left,
}

pub fn canonical_error<T: Real>(side: ErrorSide, xhat: &GroupElement<T>, x: &GroupElement<T>) -> Result<GroupElement<T>> {
    match side {
        ErrorSide::Right => xhat.compose(&x.inverse()),
        ErrorSide::Left => x.inverse().compose(xhat),
    }
}

/// Largest drift `|log(E(t_k) E(t_0)^{-1})|` of the canonical error along a
/// pair of trajectories sampled on a common grid. Zero iff the error is
/// constant on the samples; `+inf` if the drift reaches the log cut.
pub fn synchrony_defect<T: Real>(side: ErrorSide, xhat: &[GroupElement<T>], x: &[GroupElement<T>]) -> Result<T> {
    if xhat.len() != x.len() {
        return Err(crate::Error::DimensionMismatch {
            expected: x.len(),
            got: xhat.len(),
        });
    }
    let Some((first_hat, first)) = xhat.first().zip(x.first()) else {
        return Ok(T::zero());
    };
    let e0_inv = canonical_error(side, first_hat, first)?.inverse();
    let mut worst = T::zero();
    for (a, b) in xhat.iter().zip(x) {
        let drift = canonical_error(side, a, b)?.compose(&e0_inv)?;
        match drift.log() {
            Ok(v) => worst = worst.max(v.norm()),
            Err(crate::Error::LogSingularity { .. }) => return Ok(T::lit(f64::INFINITY)),
            Err(e) => return Err(e),
        }
    }
    Ok(worst)
}

/// The left-synchronous partner field `X_hat Ad_{X_hat^{-1} X} u` of a left
/// system. It needs the true state `x`, so it is only usable for analysis and
/// is not part of the observer catalog.
pub fn left_synchronous_field<T: Real>(
    xhat: &GroupElement<T>,
    x: &GroupElement<T>,
    u: &AlgebraVector<T>,
) -> Result<TangentVector<T>> {
    let coords = xhat.inverse().compose(x)?.adjoint(u)?;
    TangentVector::body(xhat.clone(), coords)
}

/// The right-synchronous partner field `(Ad_{X_hat X^{-1}} v) X_hat` of a right
/// system. Analysis only, like [`left_synchronous_field`].
pub fn right_synchronous_field<T: Real>(
    xhat: &GroupElement<T>,
    x: &GroupElement<T>,
    v: &AlgebraVector<T>,
) -> Result<TangentVector<T>> {
    let coords = xhat.compose(&x.inverse())?.adjoint(v)?;
    TangentVector::spatial(xhat.clone(), coords)
}
