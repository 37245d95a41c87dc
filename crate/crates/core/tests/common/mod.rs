#![allow(dead_code)]

use lie_observer::groups;
use lie_observer::*;
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

/// Coordinate vectors with every component in `[-a, a]`, `a = r / sqrt(dim)`,
/// so the norm stays at most `r`.
pub fn coords(dim: usize, r: f64) -> impl Strategy<Value = Vec<f64>> {
    let a = r / (dim as f64).sqrt();
    prop::collection::vec(-a..a, dim)
}

pub fn element(group: Group, r: f64) -> impl Strategy<Value = GroupElement64> {
    coords(group.dim(), r).prop_map(move |c| GroupElement64::exp_coords(group, &c).unwrap())
}

pub fn algebra(group: Group, r: f64) -> impl Strategy<Value = AlgebraVector64> {
    coords(group.dim(), r).prop_map(|c| AlgebraVector64::from_slice(&c).unwrap())
}

/// Matrix exponential by truncated power series.
pub fn series_exp(m: &DMatrix<f64>, terms: usize) -> DMatrix<f64> {
    let n = m.nrows();
    let mut out = DMatrix::identity(n, n);
    let mut term = DMatrix::identity(n, n);
    for k in 1..terms {
        term = &term * m / k as f64;
        out += &term;
    }
    out
}

/// Series exponential with scaling and squaring, accurate for large arguments.
pub fn series_exp_scaled(m: &DMatrix<f64>) -> DMatrix<f64> {
    let s = (m.norm().max(1.0).log2().ceil() as i32 + 2).max(0);
    let mut e = series_exp(&(m / 2f64.powi(s)), 30);
    for _ in 0..s {
        e = &e * &e;
    }
    e
}

pub fn basis_hat(group: Group, i: usize) -> DMatrix<f64> {
    let mut e = DVector::zeros(group.dim());
    e[i] = 1.0;
    groups::hat(group, &e).unwrap()
}

/// Differential of `f` at `x` by central differences on the ambient matrix,
/// perturbing as `x exp(eps E_i)` (body) or `exp(eps E_i) x` (spatial).
pub fn fd_differential(
    group: Group,
    f: &dyn Fn(&DMatrix<f64>) -> f64,
    x: &DMatrix<f64>,
    frame: Frame,
    eps: f64,
) -> DVector<f64> {
    DVector::from_iterator(
        group.dim(),
        (0..group.dim()).map(|i| {
            let ep = series_exp(&(basis_hat(group, i) * eps), 30);
            let em = series_exp(&(basis_hat(group, i) * -eps), 30);
            let (xp, xm) = match frame {
                Frame::Body => (x * ep, x * em),
                Frame::Spatial => (ep * x, em * x),
            };
            (f(&xp) - f(&xm)) / (2.0 * eps)
        }),
    )
}

/// The trace-form gram matrix written out by hand.
pub fn trace_gram(group: Group) -> DMatrix<f64> {
    match group {
        Group::SO3 => DMatrix::identity(3, 3) * 2.0,
        Group::SE3 => DMatrix::from_diagonal(&DVector::from_row_slice(&[2.0, 2.0, 2.0, 1.0, 1.0, 1.0])),
    }
}

pub fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.amax()
}

/// Relative difference with an absolute floor of 1 on the reference.
pub fn rel_err(a: &DVector<f64>, b: &DVector<f64>) -> f64 {
    (a - b).norm() / b.norm().max(1.0)
}
