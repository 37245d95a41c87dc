//! Invariant kinematic systems `X' = X u` and `X' = v X`.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::groups::Group;
use crate::lie::{AlgebraVector, Frame, GroupElement, TangentVector};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SineTerm<T> {
    pub amplitude: T,
    /// Angular frequency in rad/s.
    pub frequency: T,
    pub phase: T,
}

type InputFn<T> = Arc<dyn Fn(T) -> AlgebraVector<T> + Send + Sync>;

/// A time-dependent algebra-valued input signal.
#[derive(Clone)]
pub enum InputSignal<T: Real> {
    Constant(AlgebraVector<T>),
    /// `offset[i] + sum_j a_ij sin(w_ij t + phi_ij)` for coordinate `i`.
    SinusoidSum {
        offset: AlgebraVector<T>,
        terms: Vec<Vec<SineTerm<T>>>,
    },
    /// Right-continuous steps: value `u_k` on `[t_k, t_{k+1})`. Before the first
    /// breakpoint the first value holds.
    PiecewiseConstant(Vec<(T, AlgebraVector<T>)>),
    /// Programmatic signal. Not serializable.
    Custom { dim: usize, f: InputFn<T> },
}

impl<T: Real> fmt::Debug for InputSignal<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Constant(c) => f.debug_tuple("Constant").field(c).finish(),
            Self::SinusoidSum { offset, terms } => f
                .debug_struct("SinusoidSum")
                .field("offset", offset)
                .field("terms", &terms.len())
                .finish(),
            Self::PiecewiseConstant(b) => f.debug_tuple("PiecewiseConstant").field(&b.len()).finish(),
            Self::Custom { dim, .. } => f.debug_struct("Custom").field("dim", dim).finish(),
        }
    }
}

impl<T: Real> InputSignal<T> {
    pub fn constant(c: AlgebraVector<T>) -> Self {
        Self::Constant(c)
    }

    pub fn zero(dim: usize) -> Self {
        Self::Constant(AlgebraVector::zeros(dim))
    }

    pub fn sinusoid_sum(offset: AlgebraVector<T>, terms: Vec<Vec<SineTerm<T>>>) -> Result<Self> {
        if terms.len() != offset.len() {
            return Err(Error::DimensionMismatch {
                expected: offset.len(),
                got: terms.len(),
            });
        }
        let finite = terms
            .iter()
            .flatten()
            .all(|s| s.amplitude.is_finite() && s.frequency.is_finite() && s.phase.is_finite());
        if !finite {
            return Err(Error::NonFinite("sinusoid term"));
        }
        Ok(Self::SinusoidSum { offset, terms })
    }

    pub fn piecewise_constant(breakpoints: Vec<(T, AlgebraVector<T>)>) -> Result<Self> {
        let Some(first) = breakpoints.first() else {
            return Err(Error::Usage("piecewise-constant input needs at least one breakpoint".into()));
        };
        let dim = first.1.len();
        for w in breakpoints.windows(2) {
            if !(w[0].0 < w[1].0) {
                return Err(Error::Usage("breakpoint times must be strictly increasing".into()));
            }
        }
        for (t, v) in &breakpoints {
            if !t.is_finite() {
                return Err(Error::NonFinite("breakpoint time"));
            }
            if v.len() != dim {
                return Err(Error::DimensionMismatch { expected: dim, got: v.len() });
            }
        }
        Ok(Self::PiecewiseConstant(breakpoints))
    }

    pub fn custom(dim: usize, f: impl Fn(T) -> AlgebraVector<T> + Send + Sync + 'static) -> Self {
        Self::Custom { dim, f: Arc::new(f) }
    }

    pub fn dim(&self) -> usize {
        match self {
            Self::Constant(c) => c.len(),
            Self::SinusoidSum { offset, .. } => offset.len(),
            Self::PiecewiseConstant(b) => b[0].1.len(),
            Self::Custom { dim, .. } => *dim,
        }
    }

    pub fn eval(&self, t: T) -> AlgebraVector<T> {
        match self {
            Self::Constant(c) => c.clone(),
            Self::SinusoidSum { offset, terms } => {
                let mut out = offset.coords().clone();
                for (i, coord_terms) in terms.iter().enumerate() {
                    for s in coord_terms {
                        out[i] += s.amplitude * (s.frequency * t + s.phase).sin();
                    }
                }
                AlgebraVector::from_raw(out)
            }
            Self::PiecewiseConstant(b) => {
                let idx = b.partition_point(|(tk, _)| *tk <= t);
                b[idx.saturating_sub(1)].1.clone()
            }
            Self::Custom { f, .. } => f(t),
        }
    }

    /// Evaluation at a stage time `t` of an integration step starting at
    /// `step_start`. Steps never straddle a breakpoint, so a piecewise-constant
    /// signal takes the value of the interval the step lies in.
    pub fn eval_in_step(&self, t: T, step_start: T) -> AlgebraVector<T> {
        match self {
            Self::PiecewiseConstant(_) => self.eval(step_start),
            _ => self.eval(t),
        }
    }

    /// Discontinuity times the integration grid must hit exactly.
    pub fn breakpoints(&self) -> Vec<T> {
        match self {
            Self::PiecewiseConstant(b) => b.iter().map(|(t, _)| *t).collect(),
            _ => Vec::new(),
        }
    }
}

pub fn eval_input<T: Real>(s: &InputSignal<T>, t: T) -> AlgebraVector<T> {
    s.eval(t)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Handedness {
    /// `X' = X u`, input in the body frame.
    LeftInvariant,
    /// `X' = v X`, input in the spatial frame.
    RightInvariant,
}

impl Handedness {
    /// The frame in which the input of a system with this handedness lives.
    pub fn input_frame(self) -> Frame {
        match self {
            Handedness::LeftInvariant => Frame::Body,
            Handedness::RightInvariant => Frame::Spatial,
        }
    }
}

#[derive(Debug, Clone)]
pub struct InvariantSystem<T: Real> {
    pub group: Group,
    pub handedness: Handedness,
    pub input: InputSignal<T>,
}

impl<T: Real> InvariantSystem<T> {
    pub fn new(group: Group, handedness: Handedness, input: InputSignal<T>) -> Result<Self> {
        if input.dim() != group.dim() {
            return Err(Error::DimensionMismatch {
                expected: group.dim(),
                got: input.dim(),
            });
        }
        Ok(Self {
            group,
            handedness,
            input,
        })
    }

    pub fn left(group: Group, input: InputSignal<T>) -> Result<Self> {
        Self::new(group, Handedness::LeftInvariant, input)
    }

    pub fn right(group: Group, input: InputSignal<T>) -> Result<Self> {
        Self::new(group, Handedness::RightInvariant, input)
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

    pub fn vector_field(&self, x: &GroupElement<T>, t: T) -> Result<TangentVector<T>> {
        self.check(x)?;
        TangentVector::new(x.clone(), self.input.eval(t), self.handedness.input_frame())
    }

    /// The input of the equivalent representation with the other handedness:
    /// `Ad_X u` for a left system, `Ad_{X^{-1}} v` for a right system.
    pub fn convert_input(&self, x: &GroupElement<T>, t: T) -> Result<AlgebraVector<T>> {
        self.check(x)?;
        let w = self.input.eval(t);
        match self.handedness {
            Handedness::LeftInvariant => x.adjoint(&w),
            Handedness::RightInvariant => x.adjoint_inv(&w),
        }
    }
}

pub fn vector_field<T: Real>(sys: &InvariantSystem<T>, x: &GroupElement<T>, t: T) -> Result<TangentVector<T>> {
    sys.vector_field(x, t)
}

pub fn convert_input<T: Real>(sys: &InvariantSystem<T>, x: &GroupElement<T>, t: T) -> Result<AlgebraVector<T>> {
    sys.convert_input(x, t)
}
