//! Cost functions on `G x G` and their gradients in the first argument.
//!
//! A cost may carry an analytic differential in its first argument, given as
//! a covector in a frame of its choice. Gradients are obtained by moving the
//! covector into the frame in which the metric is invariant and raising it
//! with the inverse gram matrix. Costs without a differential fall back to
//! central finite differences ([`fd_grad1`]).

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector, Matrix3, Vector3};

use crate::error::{Error, Result};
use crate::groups::{rotation_block, skew_project3, translation_block, unskew, Group};
use crate::lie::{AlgebraVector, Frame, GroupElement, Metric, TangentVector};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CostInvariance {
    None,
    /// `f(ZX, ZY) = f(X, Y)`
    Left,
    /// `f(XZ, YZ) = f(X, Y)`
    Right,
    Bi,
}

impl CostInvariance {
    pub fn is_left(self) -> bool {
        matches!(self, Self::Left | Self::Bi)
    }

    pub fn is_right(self) -> bool {
        matches!(self, Self::Right | Self::Bi)
    }

    fn mirrored(self) -> Self {
        match self {
            Self::Left => Self::Right,
            Self::Right => Self::Left,
            other => other,
        }
    }
}

/// Coordinates of a differential `df(X)` with respect to the body
/// (`X hat(e_i)`) or spatial (`hat(e_i) X`) basis of `T_X G`.
#[derive(Debug, Clone, PartialEq)]
pub struct Covector<T: Real> {
    pub frame: Frame,
    pub coords: DVector<T>,
}

impl<T: Real> Covector<T> {
    pub fn body(coords: DVector<T>) -> Self {
        Self { frame: Frame::Body, coords }
    }

    pub fn spatial(coords: DVector<T>) -> Self {
        Self {
            frame: Frame::Spatial,
            coords,
        }
    }

    /// Re-expresses the covector at base `x` in the `target` frame.
    pub fn to_frame(&self, x: &GroupElement<T>, target: Frame) -> Self {
        if self.frame == target {
            return self.clone();
        }
        // body v = Ad_{X^-1} spatial v, so the covector transforms with the transpose
        let coords = match target {
            Frame::Body => x.adjoint_matrix().transpose() * &self.coords,
            Frame::Spatial => x.inverse().adjoint_matrix().transpose() * &self.coords,
        };
        Self { frame: target, coords }
    }

    /// The gradient this differential represents under `metric`.
    pub fn raise(&self, x: &GroupElement<T>, metric: &Metric<T>) -> Result<TangentVector<T>> {
        let frame = metric.frame();
        let c = self.to_frame(x, frame);
        TangentVector::new(x.clone(), metric.raise(&c.coords), frame)
    }
}

/// `<M, H_i>_F` for every basis generator `H_i`, i.e. the body covector of
/// an ambient Euclidean gradient `G` at `X` when `M = X^T G`.
pub fn frobenius_pairing<T: Real>(group: Group, m: &DMatrix<T>) -> Result<DVector<T>> {
    group.check_matrix(m)?;
    let two = T::lit(2.0);
    let w = unskew(&skew_project3(&rotation_block(m))) * two;
    Ok(match group {
        Group::SO3 => DVector::from_column_slice(w.as_slice()),
        Group::SE3 => {
            let p = translation_block(m);
            DVector::from_column_slice(&[w[0], w[1], w[2], p[0], p[1], p[2]])
        }
    })
}

type EvalFn<T> = Arc<dyn Fn(&GroupElement<T>, &GroupElement<T>) -> T + Send + Sync>;
type DiffFn<T> = Arc<dyn Fn(&GroupElement<T>, &GroupElement<T>) -> Covector<T> + Send + Sync>;
type PointFn<T> = Arc<dyn Fn(&GroupElement<T>) -> T + Send + Sync>;
type PointDiffFn<T> = Arc<dyn Fn(&GroupElement<T>) -> Covector<T> + Send + Sync>;

/// A non-negative cost `f(X_hat, Y)` with invariance metadata.
#[derive(Clone)]
pub struct CostFunction<T: Real> {
    name: String,
    group: Group,
    invariance: CostInvariance,
    morse_bott_claimed: bool,
    evaluate: EvalFn<T>,
    differential: Option<DiffFn<T>>,
}

impl<T: Real> fmt::Debug for CostFunction<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CostFunction")
            .field("name", &self.name)
            .field("group", &self.group)
            .field("invariance", &self.invariance)
            .field("morse_bott_claimed", &self.morse_bott_claimed)
            .field("analytic", &self.differential.is_some())
            .finish()
    }
}

impl<T: Real> CostFunction<T> {
    pub fn new(
        name: impl Into<String>,
        group: Group,
        invariance: CostInvariance,
        evaluate: impl Fn(&GroupElement<T>, &GroupElement<T>) -> T + Send + Sync + 'static,
    ) -> Self {
        Self {
            name: name.into(),
            group,
            invariance,
            morse_bott_claimed: false,
            evaluate: Arc::new(evaluate),
            differential: None,
        }
    }

    /// Attaches an analytic differential in the first argument.
    pub fn with_differential(
        mut self,
        d: impl Fn(&GroupElement<T>, &GroupElement<T>) -> Covector<T> + Send + Sync + 'static,
    ) -> Self {
        self.differential = Some(Arc::new(d));
        self
    }

    pub fn claim_morse_bott(mut self, claimed: bool) -> Self {
        self.morse_bott_claimed = claimed;
        self
    }

    pub fn renamed(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn group(&self) -> Group {
        self.group
    }

    pub fn invariance(&self) -> CostInvariance {
        self.invariance
    }

    pub fn morse_bott_claimed(&self) -> bool {
        self.morse_bott_claimed
    }

    pub fn has_analytic_gradient(&self) -> bool {
        self.differential.is_some()
    }

    fn check(&self, x: &GroupElement<T>) -> Result<()> {
        if x.group() != self.group {
            return Err(Error::GroupMismatch {
                left: self.group,
                right: x.group(),
            });
        }
        Ok(())
    }

    pub fn evaluate(&self, xhat: &GroupElement<T>, y: &GroupElement<T>) -> Result<T> {
        self.check(xhat)?;
        self.check(y)?;
        Ok((self.evaluate)(xhat, y))
    }

    /// `f(E, e)`, the cost seen by an error flow.
    pub fn at_identity(&self, e: &GroupElement<T>) -> Result<T> {
        self.evaluate(e, &GroupElement::identity(self.group))
    }

    pub fn differential1(&self, xhat: &GroupElement<T>, y: &GroupElement<T>) -> Option<Result<Covector<T>>> {
        let d = self.differential.as_ref()?;
        Some(self.check(xhat).and(self.check(y)).map(|_| d(xhat, y)))
    }

    pub fn analytic_grad1(
        &self,
        xhat: &GroupElement<T>,
        y: &GroupElement<T>,
        metric: &Metric<T>,
    ) -> Option<Result<TangentVector<T>>> {
        Some(self.differential1(xhat, y)?.and_then(|c| c.raise(xhat, metric)))
    }

    /// Riemannian gradient in the first argument; analytic when available.
    pub fn grad1(&self, xhat: &GroupElement<T>, y: &GroupElement<T>, metric: &Metric<T>) -> Result<TangentVector<T>> {
        if metric.group() != self.group {
            return Err(Error::GroupMismatch {
                left: self.group,
                right: metric.group(),
            });
        }
        match self.analytic_grad1(xhat, y, metric) {
            Some(g) => g,
            None => fd_grad1(self, metric, xhat, y, T::fd_eps()),
        }
    }
}

/// Central finite-difference gradient of `f(., Y)` at `X_hat`.
///
/// Uses the chart `X_hat exp(eps e_i)` (body frame) for left- and bi-invariant
/// metrics and `exp(eps e_i) X_hat` (spatial frame) for right-invariant ones.
pub fn fd_grad1<T: Real>(
    f: &CostFunction<T>,
    metric: &Metric<T>,
    xhat: &GroupElement<T>,
    y: &GroupElement<T>,
    eps: T,
) -> Result<TangentVector<T>> {
    let lo = T::fd_eps() * T::lit(1e-3);
    let hi = T::fd_eps() * T::lit(10.0);
    if !(eps >= lo && eps <= hi) {
        return Err(Error::Usage(format!(
            "finite-difference step {:e} outside [{:e}, {:e}]",
            eps.to_f64_lossy(),
            lo.to_f64_lossy(),
            hi.to_f64_lossy()
        )));
    }
    let d = fd_differential(f, xhat, y, eps, metric.frame())?;
    d.raise(xhat, metric)
}

/// Central finite-difference differential of `f(., Y)` at `X_hat` in `frame`.
pub fn fd_differential<T: Real>(
    f: &CostFunction<T>,
    xhat: &GroupElement<T>,
    y: &GroupElement<T>,
    eps: T,
    frame: Frame,
) -> Result<Covector<T>> {
    let g = f.group();
    let n = g.dim();
    let mut d = DVector::zeros(n);
    for i in 0..n {
        let mut e = DVector::zeros(n);
        e[i] = eps;
        let plus = GroupElement::exp(g, &AlgebraVector::new(e.clone())?)?;
        let minus = GroupElement::exp(g, &AlgebraVector::new(-e)?)?;
        let (xp, xm) = match frame {
            Frame::Body => (xhat.compose(&plus)?, xhat.compose(&minus)?),
            Frame::Spatial => (plus.compose(xhat)?, minus.compose(xhat)?),
        };
        d[i] = (f.evaluate(&xp, y)? - f.evaluate(&xm, y)?) / (eps + eps);
    }
    Ok(Covector { frame, coords: d })
}

// ---------------------------------------------------------------------------
// constructions

/// `f(X, Y) = g(X Y^{-1})`, right-invariant. If `dg` (the spatial differential
/// of `g`) is given, `f` inherits it: the spatial differential of `f` at `X`
/// is that of `g` at `X Y^{-1}`.
pub fn lift_right_invariant<T: Real>(
    name: impl Into<String>,
    group: Group,
    g: impl Fn(&GroupElement<T>) -> T + Send + Sync + 'static,
    dg_spatial: Option<PointDiffFn<T>>,
) -> CostFunction<T> {
    let g: PointFn<T> = Arc::new(g);
    let ge = g.clone();
    let cost = CostFunction::new(name, group, CostInvariance::Right, move |x, y| {
        ge(&x.compose(&y.inverse()).expect("same group"))
    });
    match dg_spatial {
        Some(dg) => cost.with_differential(move |x, y| {
            let d = dg(&x.compose(&y.inverse()).expect("same group"));
            debug_assert_eq!(d.frame, Frame::Spatial);
            d
        }),
        None => cost,
    }
}

/// `f(X, Y) = g(Y^{-1} X)`, left-invariant. `dg_body` is the body differential
/// of `g`, which `f` inherits at `X`.
pub fn lift_left_invariant<T: Real>(
    name: impl Into<String>,
    group: Group,
    g: impl Fn(&GroupElement<T>) -> T + Send + Sync + 'static,
    dg_body: Option<PointDiffFn<T>>,
) -> CostFunction<T> {
    let g: PointFn<T> = Arc::new(g);
    let ge = g.clone();
    let cost = CostFunction::new(name, group, CostInvariance::Left, move |x, y| {
        ge(&y.inverse().compose(x).expect("same group"))
    });
    match dg_body {
        Some(dg) => cost.with_differential(move |x, y| {
            let d = dg(&y.inverse().compose(x).expect("same group"));
            debug_assert_eq!(d.frame, Frame::Body);
            d
        }),
        None => cost,
    }
}

/// `f~(X, Y) = f(X^{-1}, Y^{-1})`, which swaps left and right invariance.
///
/// The differential carries over: the body covector of `f~` at `X` is minus
/// the spatial covector of `f` at `X^{-1}`, and vice versa.
pub fn mirror_invariance<T: Real>(f: &CostFunction<T>) -> CostFunction<T> {
    let inner = f.clone();
    let eval = inner.evaluate.clone();
    let mut out = CostFunction::new(
        format!("mirror({})", f.name()),
        f.group(),
        f.invariance().mirrored(),
        move |x, y| eval(&x.inverse(), &y.inverse()),
    )
    .claim_morse_bott(f.morse_bott_claimed());
    if let Some(d) = inner.differential.clone() {
        out = out.with_differential(move |x, y| {
            let c = d(&x.inverse(), &y.inverse());
            let frame = match c.frame {
                Frame::Body => Frame::Spatial,
                Frame::Spatial => Frame::Body,
            };
            Covector { frame, coords: -c.coords }
        });
    }
    out
}

/// `f(R_hat, Y) = k/2 |R_hat - Y|_F^2` on SO(3). Bi-invariant.
///
/// Under the trace-form metric its gradient is `-k R_hat P(R_hat^T Y)`.
pub fn so3_frobenius_cost<T: Real>(k: T) -> Result<CostFunction<T>> {
    if !(k > T::zero() && k.is_finite()) {
        return Err(Error::Usage("frobenius gain k must be positive".into()));
    }
    let half_k = k * T::lit(0.5);
    Ok(CostFunction::new("so3_frobenius", Group::SO3, CostInvariance::Bi, move |x, y| {
        (x.matrix() - y.matrix()).norm_squared() * half_k
    })
    .with_differential(move |x, y| {
        // <k (R - Y), R hat(e_i)> = -2k vee(P(R^T Y))_i
        let m: Matrix3<T> = rotation_block(&(x.matrix().transpose() * y.matrix()));
        let w = unskew(&skew_project3(&m)) * (-(k + k));
        Covector::body(DVector::from_column_slice(w.as_slice()))
    })
    .claim_morse_bott(true))
}

fn se3_parts<T: Real>(x: &GroupElement<T>) -> (Matrix3<T>, Vector3<T>) {
    (rotation_block(x.matrix()), translation_block(x.matrix()))
}

/// `g(R, p) = (|R - I|^2 + |p|^2) / 2`, the pose cost's potential at identity.
pub fn se3_pose_potential<T: Real>(x: &GroupElement<T>) -> T {
    let (r, p) = se3_parts(x);
    (T::lit(0.5)) * ((r - Matrix3::identity()).norm_squared() + p.norm_squared())
}

/// Right-invariant pose cost `g(X Y^{-1})`, i.e.
/// `f((R,p),(Y,y)) = (|R - Y|^2 + |p - R Y^T y|^2) / 2`.
///
/// Its spatial differential pairs with the trace-form right-invariant metric
/// to give the spatial gradient `(P(R Y^T), p - R Y^T y)`.
pub fn se3_pose_cost<T: Real>() -> CostFunction<T> {
    let dg: PointDiffFn<T> = Arc::new(|z: &GroupElement<T>| {
        // z = X Y^{-1} = (R Y^T, p - R Y^T y)
        let (r, p) = se3_parts(z);
        let w = unskew(&skew_project3(&r)) * T::lit(2.0);
        Covector::spatial(DVector::from_column_slice(&[w[0], w[1], w[2], p[0], p[1], p[2]]))
    });
    lift_right_invariant("se3_pose", Group::SE3, se3_pose_potential, Some(dg)).claim_morse_bott(true)
}

/// The componentwise pose cost `(|R - Y|^2 + |p - y|^2) / 2`. Left-invariant,
/// not right-invariant; mirroring it gives [`se3_pose_cost`].
pub fn se3_natural_cost<T: Real>() -> CostFunction<T> {
    CostFunction::new("se3_natural", Group::SE3, CostInvariance::Left, |x, y| {
        (x.matrix() - y.matrix()).norm_squared() * T::lit(0.5)
    })
    .with_differential(|x, y| {
        let g = x.matrix() - y.matrix();
        let m = x.matrix().transpose() * g;
        Covector::body(frobenius_pairing(Group::SE3, &m).expect("4x4"))
    })
    .claim_morse_bott(true)
}

/// `f(X, Y) = |A (X - Y)|_F^2 / 2 + |(X - Y) B|_F^2 / 2` with diagonal weights
/// `A = diag(left)`, `B = diag(right)`. With non-scalar weights on both sides
/// it is neither left- nor right-invariant. For positive weights `Y -> f(Y, e)`
/// has a unique minimum at the identity.
pub fn weighted_frobenius_cost<T: Real>(group: Group, left: &[T], right: &[T]) -> Result<CostFunction<T>> {
    let n = group.matrix_size();
    for w in [left, right] {
        if w.len() != n {
            return Err(Error::DimensionMismatch { expected: n, got: w.len() });
        }
        if w.iter().any(|c| !(*c > T::zero() && c.is_finite())) {
            return Err(Error::Usage("weights must be positive".into()));
        }
    }
    let a = DMatrix::from_diagonal(&DVector::from_column_slice(left));
    let b = DMatrix::from_diagonal(&DVector::from_column_slice(right));
    let a2 = &a * &a;
    let b2 = &b * &b;
    let half = T::lit(0.5);
    Ok(CostFunction::new("weighted_frobenius", group, CostInvariance::None, move |x, y| {
        let d = x.matrix() - y.matrix();
        ((&a * &d).norm_squared() + (&d * &b).norm_squared()) * half
    })
    .with_differential(move |x, y| {
        let d = x.matrix() - y.matrix();
        let euclid = &a2 * &d + &d * &b2;
        let m = x.matrix().transpose() * euclid;
        Covector::body(frobenius_pairing(group, &m).expect("square"))
    })
    .claim_morse_bott(true))
}

/// `|log(X Y^{-1})|^2 / 2`, right-invariant. No analytic differential; useful
/// as a finite-difference test subject. Undefined at the log cut.
pub fn log_distance_cost<T: Real>(group: Group) -> CostFunction<T> {
    lift_right_invariant("log_distance", group, |z| z.log().map(|v| v.norm() * v.norm() * T::lit(0.5)).unwrap_or(T::lit(f64::NAN)), None)
}

/// Checks `d f(X_hat)` in the direction `v` against a central difference.
/// Exposed for diagnostics.
pub fn directional_derivative<T: Real>(
    f: &CostFunction<T>,
    xhat: &GroupElement<T>,
    y: &GroupElement<T>,
    v: &TangentVector<T>,
    eps: T,
) -> Result<T> {
    let g = f.group();
    let b = v.body_coords();
    let step = |s: T| -> Result<GroupElement<T>> {
        xhat.compose(&GroupElement::exp(g, &(&b * s))?)
    };
    Ok((f.evaluate(&step(eps)?, y)? - f.evaluate(&step(-eps)?, y)?) / (eps + eps))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::groups;
    use crate::lie::MetricInvariance;

    fn rot(c: &[f64]) -> GroupElement<f64> {
        GroupElement::exp_coords(Group::SO3, c).unwrap()
    }

    fn pose(c: &[f64]) -> GroupElement<f64> {
        GroupElement::exp_coords(Group::SE3, c).unwrap()
    }

    #[test]
    fn frobenius_examples() {
        let f = so3_frobenius_cost(1.0).unwrap();
        let r = rot(&[0.3, -0.2, 0.9]);
        assert_eq!(f.evaluate(&r, &r).unwrap(), 0.0);
        let e = GroupElement::identity(Group::SO3);
        let v = f.evaluate(&e, &rot(&[0.0, 0.0, std::f64::consts::PI])).unwrap();
        // |I - rot_z(pi)|_F^2 = 8
        assert!((v - 4.0).abs() < 1e-14);
        let m = Metric::trace_form(Group::SO3, MetricInvariance::BiInvariant).unwrap();
        let g = f.grad1(&r, &r, &m).unwrap();
        assert!(g.coords.norm() < 1e-15);
        assert!(so3_frobenius_cost(0.0).is_err());
    }

    #[test]
    fn frobenius_gradient_closed_form() {
        let k = 1.7;
        let f = so3_frobenius_cost(k).unwrap();
        let m = Metric::trace_form(Group::SO3, MetricInvariance::BiInvariant).unwrap();
        let rh = rot(&[0.4, 1.0, -0.3]);
        let y = rot(&[-0.8, 0.2, 0.5]);
        let g = f.grad1(&rh, &y, &m).unwrap();
        let p = groups::skew_project(&(rh.matrix().transpose() * y.matrix())).unwrap();
        let want = rh.matrix() * p * (-k);
        assert!((g.ambient() - want).amax() < 1e-14);
    }

    #[test]
    fn pose_cost_examples() {
        let f = se3_pose_cost::<f64>();
        let y = pose(&[0.1, 0.2, 0.3, 1.0, -1.0, 0.5]);
        assert!(f.evaluate(&y, &y).unwrap().abs() < 1e-28);
        let a = pose(&[0.0, 0.0, 0.0, 1.0, 2.0, 3.0]);
        let b = pose(&[0.0, 0.0, 0.0, -1.0, 0.0, 4.0]);
        assert!((f.evaluate(&a, &b).unwrap() - 0.5 * 9.0).abs() < 1e-14);
    }

    #[test]
    fn fd_rejects_bad_step() {
        let f = so3_frobenius_cost(1.0).unwrap();
        let m = Metric::trace_form(Group::SO3, MetricInvariance::BiInvariant).unwrap();
        let e = GroupElement::identity(Group::SO3);
        assert!(fd_grad1(&f, &m, &e, &e, 1e-2).is_err());
        assert!(fd_grad1(&f, &m, &e, &e, 1e-9).is_err());
    }

    #[test]
    fn fd_of_constant_is_zero() {
        let f = CostFunction::new("const", Group::SE3, CostInvariance::Bi, |_, _| 3.0);
        let m = Metric::trace_form(Group::SE3, MetricInvariance::RightInvariant).unwrap();
        let x = pose(&[0.3, 0.1, 0.2, 1.0, 1.0, 1.0]);
        let g = fd_grad1(&f, &m, &x, &x, 1e-5).unwrap();
        assert!(g.coords.norm() < 1e-8);
        assert_eq!(g.frame, Frame::Spatial);
    }

    #[test]
    fn log_distance_gradient_near_minimum() {
        let f = log_distance_cost::<f64>(Group::SO3);
        let m = Metric::euclidean(Group::SO3, MetricInvariance::RightInvariant).unwrap();
        let y = rot(&[0.5, -0.4, 1.0]);
        let v = [3e-3, -5e-3, 7e-3];
        let x = rot(&v).compose(&y).unwrap();
        let g = f.grad1(&x, &y, &m).unwrap();
        assert_eq!(g.frame, Frame::Spatial);
        for i in 0..3 {
            assert!((g.coords.as_slice()[i] - v[i]).abs() < 1e-8);
        }
    }

    #[test]
    fn weighted_cost_validation() {
        assert!(weighted_frobenius_cost::<f64>(Group::SO3, &[1.0, 1.0], &[1.0; 3]).is_err());
        assert!(weighted_frobenius_cost::<f64>(Group::SO3, &[1.0, -1.0, 1.0], &[1.0; 3]).is_err());
    }

    #[test]
    fn group_mismatch_is_reported() {
        let f = so3_frobenius_cost(1.0).unwrap();
        let x = pose(&[0.0; 6]);
        assert!(matches!(f.evaluate(&x, &x), Err(Error::GroupMismatch { .. })));
    }
}
