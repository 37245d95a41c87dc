//! Observer catalog: gradient, gradient-like, synchronous and custom fields.
//!
//! A left observer (for `X' = X u`) has field `X_hat hat(w) + alpha`, a right
//! observer (for `X' = v X`) has `hat(w) X_hat + alpha`. `alpha` is the
//! innovation.

use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;

use crate::costs::CostFunction;
use crate::error::{Error, Result};
use crate::groups::Group;
use crate::invariant_errors::ErrorSide;
use crate::lie::{AlgebraVector, GroupElement, Metric, TangentVector};
use crate::scalar::Real;
use crate::systems::Handedness;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ObserverKind {
    GradientLeft,
    GradientRight,
    GradientLikeLeft,
    GradientLikeRight,
    SynchronousOnly,
    Custom,
}

impl ObserverKind {
    pub fn name(self) -> &'static str {
        match self {
            Self::GradientLeft => "gradient_left",
            Self::GradientRight => "gradient_right",
            Self::GradientLikeLeft => "gradient_like_left",
            Self::GradientLikeRight => "gradient_like_right",
            Self::SynchronousOnly => "synchronous",
            Self::Custom => "custom",
        }
    }
}

type CustomFn<T> =
    Arc<dyn Fn(&GroupElement<T>, &GroupElement<T>, &AlgebraVector<T>, T) -> DMatrix<T> + Send + Sync>;

/// An observer vector field `(X_hat, Y, w, t) -> T_{X_hat} G`. Immutable.
#[derive(Clone)]
pub struct Observer<T: Real> {
    kind: ObserverKind,
    group: Group,
    handedness: Handedness,
    cost: Option<CostFunction<T>>,
    metric: Option<Metric<T>>,
    custom: Option<CustomFn<T>>,
}

impl<T: Real> fmt::Debug for Observer<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Observer")
            .field("kind", &self.kind)
            .field("group", &self.group)
            .field("handedness", &self.handedness)
            .field("cost", &self.cost.as_ref().map(|c| c.name().to_owned()))
            .field("metric", &self.metric.as_ref().map(|m| m.invariance()))
            .finish()
    }
}

fn check_pair<T: Real>(cost: &CostFunction<T>, metric: &Metric<T>) -> Result<()> {
    if cost.group() != metric.group() {
        return Err(Error::GroupMismatch {
            left: cost.group(),
            right: metric.group(),
        });
    }
    Ok(())
}

/// `X_hat' = X_hat w - grad_1 f(X_hat, Y)` (left) or
/// `X_hat' = w X_hat - grad_1 f(X_hat, Y)` (right).
pub fn gradient_observer<T: Real>(handedness: Handedness, cost: CostFunction<T>, metric: Metric<T>) -> Result<Observer<T>> {
    check_pair(&cost, &metric)?;
    let kind = match handedness {
        Handedness::LeftInvariant => ObserverKind::GradientLeft,
        Handedness::RightInvariant => ObserverKind::GradientRight,
    };
    Ok(Observer {
        kind,
        group: cost.group(),
        handedness,
        cost: Some(cost),
        metric: Some(metric),
        custom: None,
    })
}

/// Left: `X_hat' = X_hat w - grad_1 f(X_hat Y^-1, e) Y`.
/// Right: `X_hat' = w X_hat - Y grad_1 f(Y^-1 X_hat, e)`.
pub fn gradient_like_observer<T: Real>(
    handedness: Handedness,
    cost: CostFunction<T>,
    metric: Metric<T>,
) -> Result<Observer<T>> {
    check_pair(&cost, &metric)?;
    let kind = match handedness {
        Handedness::LeftInvariant => ObserverKind::GradientLikeLeft,
        Handedness::RightInvariant => ObserverKind::GradientLikeRight,
    };
    Ok(Observer {
        kind,
        group: cost.group(),
        handedness,
        cost: Some(cost),
        metric: Some(metric),
        custom: None,
    })
}

/// Copies the system: `X_hat' = X_hat w` or `w X_hat`.
pub fn synchronous_observer<T: Real>(group: Group, handedness: Handedness) -> Observer<T> {
    Observer {
        kind: ObserverKind::SynchronousOnly,
        group,
        handedness,
        cost: None,
        metric: None,
        custom: None,
    }
}

/// A user-supplied field returning the ambient matrix of `X_hat'`.
///
/// The output is checked for tangency on a handful of probe points; other
/// structural properties are left to the caller.
pub fn custom_observer<T: Real>(
    group: Group,
    handedness: Handedness,
    field: impl Fn(&GroupElement<T>, &GroupElement<T>, &AlgebraVector<T>, T) -> DMatrix<T> + Send + Sync + 'static,
) -> Result<Observer<T>> {
    let obs = Observer {
        kind: ObserverKind::Custom,
        group,
        handedness,
        cost: None,
        metric: None,
        custom: Some(Arc::new(field)),
    };
    for (xh, y, w, t) in probes(group) {
        obs.field(&xh, &y, &w, t)?;
    }
    Ok(obs)
}

type Probe<T> = (GroupElement<T>, GroupElement<T>, AlgebraVector<T>, T);

fn probes<T: Real>(group: Group) -> Vec<Probe<T>> {
    let n = group.dim();
    let v = |s: f64| {
        let c: Vec<T> = (0..n).map(|i| T::lit(s * (1.0 + i as f64) / n as f64)).collect();
        AlgebraVector::from_slice(&c).expect("finite")
    };
    let g = |s: f64| GroupElement::exp(group, &v(s)).expect("finite");
    let e = GroupElement::identity(group);
    vec![
        (e.clone(), e.clone(), AlgebraVector::zeros(n), T::zero()),
        (g(0.7), e, v(0.3), T::one()),
        (g(-1.1), g(0.4), v(-2.0), T::lit(2.5)),
        (g(2.0), g(2.0), v(1.0), T::lit(-0.5)),
    ]
}

impl<T: Real> Observer<T> {
    pub fn kind(&self) -> ObserverKind {
        self.kind
    }

    pub fn group(&self) -> Group {
        self.group
    }

    pub fn handedness(&self) -> Handedness {
        self.handedness
    }

    pub fn cost(&self) -> Option<&CostFunction<T>> {
        self.cost.as_ref()
    }

    pub fn metric(&self) -> Option<&Metric<T>> {
        self.metric.as_ref()
    }

    /// The invariant error this observer is designed around: `E_r` for left
    /// observers, `E_l` for right observers.
    pub fn error_side(&self) -> ErrorSide {
        match self.handedness {
            Handedness::LeftInvariant => ErrorSide::Right,
            Handedness::RightInvariant => ErrorSide::Left,
        }
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

    fn parts(&self) -> (&CostFunction<T>, &Metric<T>) {
        (
            self.cost.as_ref().expect("cost present for gradient kinds"),
            self.metric.as_ref().expect("metric present for gradient kinds"),
        )
    }

    pub fn synchronous_term(&self, xhat: &GroupElement<T>, w: &AlgebraVector<T>) -> Result<TangentVector<T>> {
        self.check(xhat)?;
        TangentVector::new(xhat.clone(), w.clone(), self.handedness.input_frame())
    }

    pub fn field(&self, xhat: &GroupElement<T>, y: &GroupElement<T>, w: &AlgebraVector<T>, t: T) -> Result<TangentVector<T>> {
        self.check(xhat)?;
        self.check(y)?;
        if let Some(f) = &self.custom {
            let amb = f(xhat, y, w, t);
            if amb.iter().any(|c| !c.is_finite()) {
                return Err(Error::NonFinite("custom observer field"));
            }
            return TangentVector::from_ambient(xhat.clone(), &amb, self.handedness.input_frame());
        }
        let sync = self.synchronous_term(xhat, w)?;
        match self.kind {
            ObserverKind::SynchronousOnly | ObserverKind::Custom => Ok(sync),
            _ => sync.plus(&self.innovation_term(xhat, y)?),
        }
    }

    fn innovation_term(&self, xhat: &GroupElement<T>, y: &GroupElement<T>) -> Result<TangentVector<T>> {
        match self.kind {
            ObserverKind::GradientLeft | ObserverKind::GradientRight => {
                let (f, m) = self.parts();
                Ok(f.grad1(xhat, y, m)?.scale(-T::one()))
            }
            ObserverKind::GradientLikeLeft => {
                // right translation by Y keeps spatial coordinates
                let (f, m) = self.parts();
                let z = xhat.compose(&y.inverse())?;
                let g = f.grad1(&z, &GroupElement::identity(self.group), m)?;
                TangentVector::spatial(xhat.clone(), &g.spatial_coords() * (-T::one()))
            }
            ObserverKind::GradientLikeRight => {
                // left translation by Y keeps body coordinates
                let (f, m) = self.parts();
                let z = y.inverse().compose(xhat)?;
                let g = f.grad1(&z, &GroupElement::identity(self.group), m)?;
                TangentVector::body(xhat.clone(), &g.body_coords() * (-T::one()))
            }
            ObserverKind::SynchronousOnly | ObserverKind::Custom => {
                Ok(TangentVector::zero(xhat.clone(), self.handedness.input_frame()))
            }
        }
    }

    /// `alpha = field - synchronous term`.
    pub fn innovation(&self, xhat: &GroupElement<T>, y: &GroupElement<T>, w: &AlgebraVector<T>, t: T) -> Result<TangentVector<T>> {
        let field = self.field(xhat, y, w, t)?;
        let sync = self.synchronous_term(xhat, w)?;
        field.minus(&sync)
    }

    /// Predicted derivative of the observer's invariant error when the
    /// observer sees `Y` and `w = u + delta` while the true state is `X`.
    ///
    /// Left observers: spatial field at `E_r`,
    /// `Ad_{X_hat} delta - grad_1 f(E_r, Y X^-1)` (gradient) or
    /// `Ad_{X_hat} delta - grad_1 f(E_r X Y^-1, e)` (gradient-like).
    /// Right observers: body field at `E_l`,
    /// `Ad_{X_hat^-1} delta - grad_1 f(E_l, X^-1 Y)` (gradient) or
    /// `Ad_{X_hat^-1} delta - grad_1 f(Y^-1 X E_l, e)` (gradient-like).
    ///
    /// The gradient forms assume the invariance the observer is designed for.
    /// `None` for custom observers.
    pub fn noisy_error_field(
        &self,
        xhat: &GroupElement<T>,
        x: &GroupElement<T>,
        y: &GroupElement<T>,
        delta: &AlgebraVector<T>,
    ) -> Option<Result<TangentVector<T>>> {
        if self.kind == ObserverKind::Custom {
            return None;
        }
        Some(self.noisy_error_field_inner(xhat, x, y, delta))
    }

    fn noisy_error_field_inner(
        &self,
        xhat: &GroupElement<T>,
        x: &GroupElement<T>,
        y: &GroupElement<T>,
        delta: &AlgebraVector<T>,
    ) -> Result<TangentVector<T>> {
        self.check(x)?;
        let e_id = GroupElement::identity(self.group);
        match self.handedness {
            Handedness::LeftInvariant => {
                let e = xhat.compose(&x.inverse())?;
                let m = y.compose(&x.inverse())?;
                let drift = xhat.adjoint(delta)?;
                let grad = match self.kind {
                    ObserverKind::GradientLeft | ObserverKind::GradientRight => {
                        let (f, g) = self.parts();
                        Some(f.grad1(&e, &m, g)?)
                    }
                    ObserverKind::GradientLikeLeft | ObserverKind::GradientLikeRight => {
                        let (f, g) = self.parts();
                        Some(f.grad1(&e.compose(&m.inverse())?, &e_id, g)?)
                    }
                    _ => None,
                };
                let coords = match grad {
                    Some(g) => &drift - &g.spatial_coords(),
                    None => drift,
                };
                TangentVector::spatial(e, coords)
            }
            Handedness::RightInvariant => {
                let e = x.inverse().compose(xhat)?;
                let n = x.inverse().compose(y)?;
                let drift = xhat.adjoint_inv(delta)?;
                let grad = match self.kind {
                    ObserverKind::GradientLeft | ObserverKind::GradientRight => {
                        let (f, g) = self.parts();
                        Some(f.grad1(&e, &n, g)?)
                    }
                    ObserverKind::GradientLikeLeft | ObserverKind::GradientLikeRight => {
                        let (f, g) = self.parts();
                        Some(f.grad1(&n.inverse().compose(&e)?, &e_id, g)?)
                    }
                    _ => None,
                };
                let coords = match grad {
                    Some(g) => &drift - &g.body_coords(),
                    None => drift,
                };
                TangentVector::body(e, coords)
            }
        }
    }
}

pub fn innovation_of<T: Real>(
    obs: &Observer<T>,
    xhat: &GroupElement<T>,
    y: &GroupElement<T>,
    w: &AlgebraVector<T>,
    t: T,
) -> Result<TangentVector<T>> {
    obs.innovation(xhat, y, w, t)
}

/// `E' = -grad_1 f(E, e)`, the autonomous error flow of a matched observer.
/// `side` only labels which error is meant; the field is the same.
pub fn error_flow_field<T: Real>(
    _side: ErrorSide,
    cost: &CostFunction<T>,
    metric: &Metric<T>,
    e: &GroupElement<T>,
) -> Result<TangentVector<T>> {
    let id = GroupElement::identity(cost.group());
    Ok(cost.grad1(e, &id, metric)?.scale(-T::one()))
}

/// `E_l' = E hat(u) - hat(u) E - grad_1 f(E, e)`, in body coordinates.
pub fn skew_error_field<T: Real>(
    cost: &CostFunction<T>,
    metric: &Metric<T>,
    e: &GroupElement<T>,
    u: &AlgebraVector<T>,
) -> Result<TangentVector<T>> {
    let id = GroupElement::identity(cost.group());
    let grad = cost.grad1(e, &id, metric)?;
    let comm = u - &e.adjoint_inv(u)?;
    TangentVector::body(e.clone(), &comm - &grad.body_coords())
}

/// The commutator part `E hat(u) - hat(u) E` of [`skew_error_field`].
pub fn skew_commutator<T: Real>(e: &GroupElement<T>, u: &AlgebraVector<T>) -> Result<TangentVector<T>> {
    TangentVector::body(e.clone(), u - &e.adjoint_inv(u)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::costs::{se3_pose_cost, so3_frobenius_cost};
    use crate::groups;
    use crate::lie::MetricInvariance;

    fn av(xs: &[f64]) -> AlgebraVector<f64> {
        AlgebraVector::from_slice(xs).unwrap()
    }

    fn rot(c: &[f64]) -> GroupElement<f64> {
        GroupElement::exp_coords(Group::SO3, c).unwrap()
    }

    fn so3_metric() -> Metric<f64> {
        Metric::trace_form(Group::SO3, MetricInvariance::BiInvariant).unwrap()
    }

    #[test]
    fn passive_filter_field() {
        let k = 0.8;
        let rh = rot(&[0.2, -0.5, 1.1]);
        let y = rot(&[1.0, 0.3, -0.2]);
        let w = av(&[0.3, 0.1, -0.7]);
        let wh = groups::hat(Group::SO3, w.coords()).unwrap();
        let p = groups::skew_project(&(rh.matrix().transpose() * y.matrix())).unwrap();

        let obs = gradient_observer(Handedness::LeftInvariant, so3_frobenius_cost(k).unwrap(), so3_metric()).unwrap();
        let want = rh.matrix() * &wh + rh.matrix() * &p * k;
        assert!((obs.field(&rh, &y, &w, 0.0).unwrap().ambient() - want).amax() < 1e-14);

        let obs = gradient_observer(Handedness::RightInvariant, so3_frobenius_cost(k).unwrap(), so3_metric()).unwrap();
        let want = &wh * rh.matrix() + rh.matrix() * &p * k;
        assert!((obs.field(&rh, &y, &w, 0.0).unwrap().ambient() - want).amax() < 1e-14);
    }

    #[test]
    fn se3_gradient_like_translation_formula() {
        let m = Metric::trace_form(Group::SE3, MetricInvariance::RightInvariant).unwrap();
        let obs = gradient_like_observer(Handedness::LeftInvariant, se3_pose_cost(), m).unwrap();
        let xh = GroupElement::exp_coords(Group::SE3, &[0.3, -0.2, 0.5, 1.0, 2.0, -1.0]).unwrap();
        let y = GroupElement::exp_coords(Group::SE3, &[-0.4, 0.1, 0.2, 0.5, -0.3, 0.8]).unwrap();
        let w = av(&[0.1, 0.2, 0.3, 0.4, 0.5, 0.6]);
        let f = obs.field(&xh, &y, &w, 0.0).unwrap().ambient();

        let r = groups::rotation_block(xh.matrix());
        let p = groups::translation_block(xh.matrix());
        let ry = groups::rotation_block(y.matrix());
        let py = groups::translation_block(y.matrix());
        let rryt = r * ry.transpose();
        let pr = groups::skew_project3(&rryt);
        let wv = nalgebra::Vector3::new(0.4, 0.5, 0.6);
        let want_p = r * wv - (p - rryt * py) - pr * p;
        for i in 0..3 {
            assert!((f[(i, 3)] - want_p[i]).abs() < 1e-13);
        }
    }

    #[test]
    fn innovation_vanishes_on_diagonal() {
        let y = rot(&[0.9, -0.1, 0.4]);
        let w = av(&[1.0, 2.0, 3.0]);
        for obs in [
            gradient_observer(Handedness::LeftInvariant, so3_frobenius_cost(1.0).unwrap(), so3_metric()).unwrap(),
            gradient_like_observer(Handedness::RightInvariant, so3_frobenius_cost(1.0).unwrap(), so3_metric()).unwrap(),
            synchronous_observer(Group::SO3, Handedness::LeftInvariant),
        ] {
            assert!(obs.innovation(&y, &y, &w, 0.0).unwrap().coords.norm() < 1e-14);
        }
    }

    #[test]
    fn custom_observer_must_be_tangent() {
        let bad = custom_observer(Group::SO3, Handedness::LeftInvariant, |x: &GroupElement<f64>, _, _, _| {
            x.matrix().clone()
        });
        assert!(matches!(bad, Err(Error::NotTangent { .. })));
        let ok = custom_observer(Group::SO3, Handedness::LeftInvariant, |x: &GroupElement<f64>, _, w, _| {
            x.matrix() * groups::hat(Group::SO3, w.coords()).unwrap()
        });
        assert!(ok.is_ok());
    }

    #[test]
    fn error_flow_at_identity_is_zero() {
        let f = so3_frobenius_cost(1.0).unwrap();
        let e = GroupElement::identity(Group::SO3);
        assert!(error_flow_field(ErrorSide::Right, &f, &so3_metric(), &e).unwrap().coords.norm() < 1e-15);
        let s = skew_error_field(&f, &so3_metric(), &e, &av(&[1.0, 2.0, 3.0])).unwrap();
        assert!(s.coords.norm() < 1e-15);
    }

    #[test]
    fn error_flow_axis_rate() {
        // along a fixed axis theta' = -k sin(theta)
        let k = 1.3;
        let th = 0.9;
        let f = so3_frobenius_cost(k).unwrap();
        let e = rot(&[0.0, 0.0, th]);
        let v = error_flow_field(ErrorSide::Right, &f, &so3_metric(), &e).unwrap();
        let b = v.body_coords();
        assert!((b.as_slice()[2] + k * th.sin()).abs() < 1e-14);
        assert!(b.as_slice()[0].abs() < 1e-15 && b.as_slice()[1].abs() < 1e-15);
    }
}
