//! Gradient and gradient-like observers for invariant systems on SO(3) and
//! SE(3).
//!
//! Group elements are matrices ([`GroupElement`]), algebra elements are
//! coordinate vectors ([`AlgebraVector`]) in the basis `(omega; v)`. The
//! whole crate is generic over the scalar type through [`Real`]; the `*64`
//! and `*32` aliases fix it to `f64` or `f32`.
//!
//! ```
//! use lie_observer::*;
//!
//! let k = 1.0;
//! let cost = so3_frobenius_cost(k).unwrap();
//! let metric = Metric64::trace_form(Group::SO3, MetricInvariance::BiInvariant).unwrap();
//! let obs = gradient_observer(Handedness::LeftInvariant, cost, metric).unwrap();
//! let sys = InvariantSystem64::left(Group::SO3, InputSignal::zero(3)).unwrap();
//!
//! let x0 = GroupElement64::identity(Group::SO3);
//! let xhat0 = GroupElement64::exp_coords(Group::SO3, &[0.0, 0.0, 1.0]).unwrap();
//! let cfg = IntegratorConfig::new(Scheme::Rkmk4, 1e-2).unwrap();
//! let run = simulate_coupled(&sys, &obs, &MeasurementChannel::exact(), &x0, &xhat0, &cfg, 20.0).unwrap();
//! assert!(*run.diagnostics.cost.last().unwrap() < 1e-6);
//! ```

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod channel;
pub mod costs;
pub mod error;
pub mod groups;
pub mod integrators;
pub mod invariant_errors;
pub mod lie;
pub mod observers;
pub mod scalar;
pub mod systems;

pub use channel::{apply_channel, InputNoise, MeasurementChannel, StateNoise};
pub use costs::{
    fd_grad1, lift_left_invariant, lift_right_invariant, mirror_invariance, se3_natural_cost, se3_pose_cost,
    so3_frobenius_cost, weighted_frobenius_cost, CostFunction, CostInvariance, Covector,
};
pub use error::{Error, Result};
pub use groups::Group;
pub use integrators::{
    integrate, simulate_coupled, simulate_system, step, time_grid, CoupledRun, Diagnostics, IntegratorConfig, Scheme,
    Trajectory,
};
pub use invariant_errors::{canonical_error, synchrony_defect, ErrorSide};
pub use lie::{AlgebraVector, Frame, GroupElement, Metric, MetricInvariance, TangentVector};
pub use observers::{
    custom_observer, error_flow_field, gradient_like_observer, gradient_observer, innovation_of, skew_error_field,
    synchronous_observer, Observer, ObserverKind,
};
pub use scalar::Real;
pub use systems::{Handedness, InputSignal, InvariantSystem, SineTerm};

pub type AlgebraVector64 = AlgebraVector<f64>;
pub type GroupElement64 = GroupElement<f64>;
pub type TangentVector64 = TangentVector<f64>;
pub type Metric64 = Metric<f64>;
pub type CostFunction64 = CostFunction<f64>;
pub type Observer64 = Observer<f64>;
pub type InputSignal64 = InputSignal<f64>;
pub type InvariantSystem64 = InvariantSystem<f64>;
pub type MeasurementChannel64 = MeasurementChannel<f64>;
pub type Trajectory64 = Trajectory<f64>;

pub type AlgebraVector32 = AlgebraVector<f32>;
pub type GroupElement32 = GroupElement<f32>;
pub type TangentVector32 = TangentVector<f32>;
pub type Metric32 = Metric<f32>;
pub type CostFunction32 = CostFunction<f32>;
pub type Observer32 = Observer<f32>;
pub type InputSignal32 = InputSignal<f32>;
pub type InvariantSystem32 = InvariantSystem<f32>;
pub type MeasurementChannel32 = MeasurementChannel<f32>;
pub type Trajectory32 = Trajectory<f32>;
