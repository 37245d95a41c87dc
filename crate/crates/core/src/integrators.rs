//! Group-preserving integration of `X' = F(X, t)` and coupled
//! system/observer simulation.
//!
//! Both schemes work in the body chart `X = X_k exp(sigma)`. RKMK4 uses
//! `sigma' = b + [sigma, b]/2 + [sigma, [sigma, b]]/12` with `b` the body
//! coordinates of the field.

use nalgebra::DVector;

use crate::channel::MeasurementChannel;
use crate::costs::CostFunction;
use crate::error::{Error, Result};
use crate::groups::{self, Group};
use crate::invariant_errors::{canonical_error, synchrony_defect, ErrorSide};
use crate::lie::{AlgebraVector, GroupElement, TangentVector};
use crate::observers::Observer;
use crate::scalar::Real;
use crate::systems::{Handedness, InvariantSystem};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Scheme {
    LieEuler,
    #[default]
    Rkmk4,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegratorConfig<T: Real> {
    pub scheme: Scheme,
    pub step: T,
    /// Project every new state back onto the group.
    pub reproject: bool,
}

impl<T: Real> Default for IntegratorConfig<T> {
    fn default() -> Self {
        Self {
            scheme: Scheme::Rkmk4,
            step: T::lit(1e-3),
            reproject: false,
        }
    }
}

impl<T: Real> IntegratorConfig<T> {
    pub fn new(scheme: Scheme, step: T) -> Result<Self> {
        let cfg = Self {
            scheme,
            step,
            reproject: false,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.step > T::zero() && self.step.is_finite()) {
            return Err(Error::Usage("integration step must be positive".into()));
        }
        Ok(())
    }
}

/// Where in the grid a field is being evaluated.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Stage<T> {
    pub t: T,
    pub step_start: T,
    pub step_index: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory<T: Real> {
    pub times: Vec<T>,
    pub states: Vec<GroupElement<T>>,
}

impl<T: Real> Trajectory<T> {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn last(&self) -> Option<&GroupElement<T>> {
        self.states.last()
    }

    pub fn max_residual(&self) -> T {
        self.states.iter().fold(T::zero(), |m, x| m.max(x.residual()))
    }

    /// Largest pointwise `|log(a b^-1)|` between two trajectories on one grid.
    pub fn sup_distance(&self, other: &Self) -> Result<T> {
        if self.len() != other.len() {
            return Err(Error::DimensionMismatch {
                expected: self.len(),
                got: other.len(),
            });
        }
        let mut worst = T::zero();
        for (a, b) in self.states.iter().zip(&other.states) {
            worst = worst.max(a.distance(b)?);
        }
        Ok(worst)
    }
}

/// `0, h, 2h, ..., horizon` with `breakpoints` inside `(0, horizon)` inserted.
/// Grid points closer than `h * 1e-9` to a breakpoint snap onto it.
pub fn time_grid<T: Real>(horizon: T, h: T, breakpoints: &[T]) -> Result<Vec<T>> {
    if !(horizon >= T::zero() && horizon.is_finite()) {
        return Err(Error::Usage("horizon must be finite and non-negative".into()));
    }
    if !(h > T::zero() && h.is_finite()) {
        return Err(Error::Usage("integration step must be positive".into()));
    }
    let snap = h * T::lit(1e-9);
    let n = ((horizon - snap) / h).ceil().to_usize().unwrap_or(0);
    let mut grid: Vec<T> = (0..n).map(|i| h * T::from_usize(i).expect("index")).collect();
    grid.push(horizon);
    grid.extend(breakpoints.iter().copied().filter(|&b| b > snap && b < horizon));
    grid.sort_by(|a, b| a.partial_cmp(b).expect("finite grid"));
    let mut out: Vec<T> = Vec::with_capacity(grid.len());
    for t in grid {
        match out.last_mut() {
            Some(last) if t - *last <= snap => {
                if *last != T::zero() && (t == horizon || breakpoints.contains(&t)) {
                    *last = t;
                }
            }
            _ => out.push(t),
        }
    }
    Ok(out)
}

fn dexp_inv<T: Real>(g: Group, sigma: &DVector<T>, b: &DVector<T>) -> DVector<T> {
    let sb = groups::bracket(g, sigma, b).expect("algebra dimension");
    let ssb = groups::bracket(g, sigma, &sb).expect("algebra dimension");
    b + sb * T::lit(0.5) + ssb * T::lit(1.0 / 12.0)
}

fn body_of<T: Real>(v: &TangentVector<T>) -> Result<DVector<T>> {
    let b = v.body_coords().into_inner();
    if b.iter().any(|c| !c.is_finite()) {
        return Err(Error::NonFinite("vector field"));
    }
    Ok(b)
}

fn advance<T: Real>(x: &GroupElement<T>, sigma: &DVector<T>, reproject: bool) -> Result<GroupElement<T>> {
    let step = GroupElement::exp(x.group(), &AlgebraVector::new(sigma.clone())?)?;
    let next = x.compose(&step)?;
    Ok(if reproject { next.reprojected() } else { next })
}

type JointField<'a, T> = dyn FnMut(&[GroupElement<T>], Stage<T>) -> Result<Vec<TangentVector<T>>> + 'a;

/// One step for several coupled states sharing the same stage structure.
pub fn step_joint<T: Real>(
    scheme: Scheme,
    field: &mut JointField<'_, T>,
    xs: &[GroupElement<T>],
    t: T,
    h: T,
    step_index: usize,
    reproject: bool,
) -> Result<Vec<GroupElement<T>>> {
    if !(h > T::zero() && h.is_finite()) {
        return Err(Error::Usage("integration step must be positive".into()));
    }
    let stage = |s: T| Stage {
        t: s,
        step_start: t,
        step_index,
    };
    let eval = |field: &mut JointField<'_, T>, ys: &[GroupElement<T>], s: T| -> Result<Vec<DVector<T>>> {
        let v = field(ys, stage(s))?;
        if v.len() != ys.len() {
            return Err(Error::DimensionMismatch {
                expected: ys.len(),
                got: v.len(),
            });
        }
        v.iter().map(body_of).collect()
    };
    let k1 = eval(field, xs, t)?;
    match scheme {
        Scheme::LieEuler => xs.iter().zip(&k1).map(|(x, b)| advance(x, &(b * h), reproject)).collect(),
        Scheme::Rkmk4 => {
            let half = h * T::lit(0.5);
            let shifted = |sig: &[DVector<T>]| -> Result<Vec<GroupElement<T>>> {
                xs.iter().zip(sig).map(|(x, s)| advance(x, s, false)).collect()
            };
            let correct = |sig: &[DVector<T>], b: Vec<DVector<T>>| -> Vec<DVector<T>> {
                xs.iter()
                    .zip(sig.iter().zip(b))
                    .map(|(x, (s, b))| dexp_inv(x.group(), s, &b))
                    .collect()
            };
            let s2: Vec<_> = k1.iter().map(|k| k * half).collect();
            let k2 = correct(&s2, eval(field, &shifted(&s2)?, t + half)?);
            let s3: Vec<_> = k2.iter().map(|k| k * half).collect();
            let k3 = correct(&s3, eval(field, &shifted(&s3)?, t + half)?);
            let s4: Vec<_> = k3.iter().map(|k| k * h).collect();
            let k4 = correct(&s4, eval(field, &shifted(&s4)?, t + h)?);
            let sixth = h / T::lit(6.0);
            let two = T::lit(2.0);
            xs.iter()
                .enumerate()
                .map(|(i, x)| {
                    let sigma = (&k1[i] + &k2[i] * two + &k3[i] * two + &k4[i]) * sixth;
                    advance(x, &sigma, reproject)
                })
                .collect()
        }
    }
}

/// One step of `X' = field(X, t)`.
pub fn step<T: Real>(
    scheme: Scheme,
    mut field: impl FnMut(&GroupElement<T>, T) -> Result<TangentVector<T>>,
    x: &GroupElement<T>,
    t: T,
    h: T,
) -> Result<GroupElement<T>> {
    let mut joint = |xs: &[GroupElement<T>], s: Stage<T>| Ok(vec![field(&xs[0], s.t)?]);
    Ok(step_joint(scheme, &mut joint, std::slice::from_ref(x), t, h, 0, false)?.remove(0))
}

/// Integrates `X' = field(X, stage)` over `grid`.
pub fn integrate_on_grid<T: Real>(
    cfg: &IntegratorConfig<T>,
    mut field: impl FnMut(&GroupElement<T>, Stage<T>) -> Result<TangentVector<T>>,
    x0: &GroupElement<T>,
    grid: &[T],
) -> Result<Trajectory<T>> {
    let mut joint = |xs: &[GroupElement<T>], s: Stage<T>| Ok(vec![field(&xs[0], s)?]);
    let runs = integrate_joint(cfg, &mut joint, std::slice::from_ref(x0), grid)?;
    Ok(runs.into_iter().next().expect("one state"))
}

/// Integrates `X' = field(X, t)` from `0` to `horizon` with the configured step.
pub fn integrate<T: Real>(
    cfg: &IntegratorConfig<T>,
    mut field: impl FnMut(&GroupElement<T>, T) -> Result<TangentVector<T>>,
    x0: &GroupElement<T>,
    horizon: T,
) -> Result<Trajectory<T>> {
    cfg.validate()?;
    let grid = time_grid(horizon, cfg.step, &[])?;
    integrate_on_grid(cfg, |x, s| field(x, s.t), x0, &grid)
}

fn integrate_joint<T: Real>(
    cfg: &IntegratorConfig<T>,
    field: &mut JointField<'_, T>,
    x0: &[GroupElement<T>],
    grid: &[T],
) -> Result<Vec<Trajectory<T>>> {
    let mut out: Vec<Trajectory<T>> = x0
        .iter()
        .map(|x| Trajectory {
            times: vec![grid[0]],
            states: vec![x.clone()],
        })
        .collect();
    let mut xs = x0.to_vec();
    for (k, w) in grid.windows(2).enumerate() {
        xs = step_joint(cfg.scheme, field, &xs, w[0], w[1] - w[0], k, cfg.reproject)?;
        for (traj, x) in out.iter_mut().zip(&xs) {
            traj.times.push(w[1]);
            traj.states.push(x.clone());
        }
    }
    Ok(out)
}

/// Trajectory of an invariant system from `x0`.
pub fn simulate_system<T: Real>(
    sys: &InvariantSystem<T>,
    x0: &GroupElement<T>,
    cfg: &IntegratorConfig<T>,
    horizon: T,
) -> Result<Trajectory<T>> {
    cfg.validate()?;
    let grid = time_grid(horizon, cfg.step, &sys.input.breakpoints())?;
    integrate_on_grid(
        cfg,
        |x, s| TangentVector::new(x.clone(), sys.input.eval_in_step(s.t, s.step_start), sys.handedness.input_frame()),
        x0,
        &grid,
    )
}

/// Cost values above this abort a coupled simulation.
pub const DIVERGENCE_LIMIT: f64 = 1e6;

/// Increase tolerated between consecutive samples of a non-increasing series.
pub const MONOTONICITY_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct Diagnostics<T: Real> {
    /// The error the observer is built around.
    pub side: ErrorSide,
    /// Name of the cost behind `cost`; the observer's own cost when it has
    /// one, otherwise `frobenius_monitor` (`|E - I|_F^2 / 2`).
    pub cost_name: String,
    /// `f(E_side(t_k), e)` on the grid.
    pub cost: Vec<T>,
    /// The same cost evaluated on the other canonical error.
    pub other_cost: Vec<T>,
    pub monotonicity_violations: usize,
    pub other_monotonicity_violations: usize,
    pub synchrony_defect: T,
    pub max_residual: T,
    /// Largest mismatch between the realised error increments and the
    /// predicted noisy error field; `None` without noise.
    pub noise_residual: Option<T>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoupledRun<T: Real> {
    pub system: Trajectory<T>,
    pub observer: Trajectory<T>,
    pub diagnostics: Diagnostics<T>,
}

pub fn count_increases<T: Real>(series: &[T]) -> usize {
    let tol = T::lit(MONOTONICITY_TOL);
    let eps4 = T::default_epsilon() * T::lit(4.0);
    series.windows(2).filter(|w| w[1] > w[0] + tol + eps4 * w[0].abs()).count()
}

fn monitor_cost<T: Real>(e: &GroupElement<T>) -> T {
    (e.matrix() - e.group().identity_matrix::<T>()).norm_squared() * T::lit(0.5)
}

/// Simulates a system together with an observer fed through `channel`.
pub fn simulate_coupled<T: Real>(
    sys: &InvariantSystem<T>,
    obs: &Observer<T>,
    channel: &MeasurementChannel<T>,
    x0: &GroupElement<T>,
    xhat0: &GroupElement<T>,
    cfg: &IntegratorConfig<T>,
    horizon: T,
) -> Result<CoupledRun<T>> {
    cfg.validate()?;
    for g in [obs.group(), x0.group(), xhat0.group()] {
        if g != sys.group {
            return Err(Error::GroupMismatch { left: sys.group, right: g });
        }
    }
    if obs.handedness() != sys.handedness {
        return Err(Error::Usage(format!(
            "observer handedness {:?} does not match system {:?}",
            obs.handedness(),
            sys.handedness
        )));
    }
    let grid = time_grid(horizon, cfg.step, &sys.input.breakpoints())?;
    let steps = grid.len() - 1;
    if let Some(cap) = channel.capacity() {
        if cap < steps {
            return Err(Error::TraceExhausted { step: cap, len: cap });
        }
    }

    let side = obs.error_side();
    let other = match side {
        ErrorSide::Right => ErrorSide::Left,
        ErrorSide::Left => ErrorSide::Right,
    };
    let cost_of = |e: &GroupElement<T>| -> Result<T> {
        match obs.cost() {
            Some(c) => c.at_identity(e),
            None => Ok(monitor_cost(e)),
        }
    };
    let guard = |t: T, f: T| -> Result<()> {
        if !(f <= T::lit(DIVERGENCE_LIMIT)) {
            return Err(Error::Diverged {
                time: t.to_f64_lossy(),
                cost: f.to_f64_lossy(),
            });
        }
        Ok(())
    };

    let mut field = |xs: &[GroupElement<T>], s: Stage<T>| -> Result<Vec<TangentVector<T>>> {
        let u = sys.input.eval_in_step(s.t, s.step_start);
        let fx = TangentVector::new(xs[0].clone(), u.clone(), sys.handedness.input_frame())?;
        let (y, w) = channel.apply(s.step_index, &xs[0], &u)?;
        let fxh = obs.field(&xs[1], &y, &w, s.t)?;
        Ok(vec![fx, fxh])
    };

    let mut xs = vec![x0.clone(), xhat0.clone()];
    let mut sys_traj = Trajectory {
        times: vec![grid[0]],
        states: vec![x0.clone()],
    };
    let mut obs_traj = sys_traj.clone();
    obs_traj.states[0] = xhat0.clone();
    let mut cost = vec![cost_of(&canonical_error(side, xhat0, x0)?)?];
    let mut other_cost = vec![cost_of(&canonical_error(other, xhat0, x0)?)?];
    guard(grid[0], cost[0])?;
    let noisy = !channel.is_exact() && obs.noisy_error_field(xhat0, x0, x0, &AlgebraVector::zeros(sys.group.dim())).is_some();
    let mut noise_residual = T::zero();

    for (k, w) in grid.windows(2).enumerate() {
        let h = w[1] - w[0];
        let next = step_joint(cfg.scheme, &mut field, &xs, w[0], h, k, cfg.reproject)?;
        if noisy {
            let r = noise_mismatch(sys, obs, channel, k, h, (&xs[0], &xs[1]), (&next[0], &next[1]), w)?;
            noise_residual = noise_residual.max(r);
        }
        xs = next;
        let e = canonical_error(side, &xs[1], &xs[0])?;
        let f = cost_of(&e)?;
        guard(w[1], f)?;
        cost.push(f);
        other_cost.push(cost_of(&canonical_error(other, &xs[1], &xs[0])?)?);
        sys_traj.times.push(w[1]);
        sys_traj.states.push(xs[0].clone());
        obs_traj.times.push(w[1]);
        obs_traj.states.push(xs[1].clone());
    }

    let diagnostics = Diagnostics {
        side,
        cost_name: obs.cost().map_or_else(|| "frobenius_monitor".to_owned(), |c| c.name().to_owned()),
        monotonicity_violations: count_increases(&cost),
        other_monotonicity_violations: count_increases(&other_cost),
        cost,
        other_cost,
        synchrony_defect: synchrony_defect(side, &obs_traj.states, &sys_traj.states)?,
        max_residual: sys_traj.max_residual().max(obs_traj.max_residual()),
        noise_residual: noisy.then_some(noise_residual),
    };
    Ok(CoupledRun {
        system: sys_traj,
        observer: obs_traj,
        diagnostics,
    })
}

/// `|chord - trapezoid|` for one step: the realised error increment against
/// the average of the predicted noisy error field at both ends of the step.
#[allow(clippy::too_many_arguments)]
fn noise_mismatch<T: Real>(
    sys: &InvariantSystem<T>,
    obs: &Observer<T>,
    channel: &MeasurementChannel<T>,
    k: usize,
    h: T,
    start: (&GroupElement<T>, &GroupElement<T>),
    end: (&GroupElement<T>, &GroupElement<T>),
    times: &[T],
) -> Result<T> {
    let delta = channel.input_delta(k, sys.group.dim())?;
    let predicted = |x: &GroupElement<T>, xh: &GroupElement<T>, t: T| -> Result<AlgebraVector<T>> {
        let u = sys.input.eval_in_step(t, times[0]);
        let (y, _) = channel.apply(k, x, &u)?;
        let v = obs.noisy_error_field(xh, x, &y, &delta).expect("catalog observer")?;
        Ok(v.coords)
    };
    let a = predicted(start.0, start.1, times[0])?;
    let b = predicted(end.0, end.1, times[1])?;
    let avg = &(&a + &b) * T::lit(0.5);
    let e0 = canonical_error(obs.error_side(), start.1, start.0)?;
    let e1 = canonical_error(obs.error_side(), end.1, end.0)?;
    let chord = match sys.handedness {
        // spatial increments for E_r, body increments for E_l
        Handedness::LeftInvariant => e1.compose(&e0.inverse())?.log()?,
        Handedness::RightInvariant => e0.inverse().compose(&e1)?.log()?,
    };
    Ok((&(&chord * (T::one() / h)) - &avg).norm())
}

/// Integrates the error flow `E' = field(E)` from `e0`; convenience for
/// comparing coupled runs against their autonomous error dynamics.
pub fn integrate_error_flow<T: Real>(
    cost: &CostFunction<T>,
    metric: &crate::lie::Metric<T>,
    e0: &GroupElement<T>,
    cfg: &IntegratorConfig<T>,
    horizon: T,
) -> Result<Trajectory<T>> {
    integrate(
        cfg,
        |e, _| crate::observers::error_flow_field(ErrorSide::Right, cost, metric, e),
        e0,
        horizon,
    )
}
