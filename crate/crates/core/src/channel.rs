//! Measurement channels with replayable noise traces.
//!
//! Noise sample `k` is held over the integration step `[t_k, t_{k+1})`. The
//! measurement itself is formed from the current state at every stage, so an
//! exact channel reports the true state exactly.

use crate::error::{Error, Result};
use crate::lie::{AlgebraVector, GroupElement};
use crate::scalar::Real;

#[derive(Debug, Clone, PartialEq)]
pub enum StateNoise<T: Real> {
    None,
    /// `Y = N_l X`
    LeftMultiplicative(Vec<GroupElement<T>>),
    /// `Y = X N_r`
    RightMultiplicative(Vec<GroupElement<T>>),
}

#[derive(Debug, Clone, PartialEq)]
pub enum InputNoise<T: Real> {
    None,
    /// `w = u + delta`
    Additive(Vec<AlgebraVector<T>>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementChannel<T: Real> {
    pub state_noise: StateNoise<T>,
    pub input_noise: InputNoise<T>,
}

impl<T: Real> Default for MeasurementChannel<T> {
    fn default() -> Self {
        Self::exact()
    }
}

impl<T: Real> MeasurementChannel<T> {
    pub fn exact() -> Self {
        Self {
            state_noise: StateNoise::None,
            input_noise: InputNoise::None,
        }
    }

    pub fn new(state_noise: StateNoise<T>, input_noise: InputNoise<T>) -> Self {
        Self {
            state_noise,
            input_noise,
        }
    }

    pub fn is_exact(&self) -> bool {
        matches!(self.state_noise, StateNoise::None) && matches!(self.input_noise, InputNoise::None)
    }

    /// Number of steps the traces cover; `None` when unbounded.
    pub fn capacity(&self) -> Option<usize> {
        let s = match &self.state_noise {
            StateNoise::None => None,
            StateNoise::LeftMultiplicative(v) | StateNoise::RightMultiplicative(v) => Some(v.len()),
        };
        let i = match &self.input_noise {
            InputNoise::None => None,
            InputNoise::Additive(v) => Some(v.len()),
        };
        match (s, i) {
            (Some(a), Some(b)) => Some(a.min(b)),
            (a, b) => a.or(b),
        }
    }

    /// Measurement `(Y, w)` of `(X, u)` during step `k`.
    pub fn apply(&self, k: usize, x: &GroupElement<T>, u: &AlgebraVector<T>) -> Result<(GroupElement<T>, AlgebraVector<T>)> {
        let y = match &self.state_noise {
            StateNoise::None => x.clone(),
            StateNoise::LeftMultiplicative(tr) => sample(tr, k)?.compose(x)?,
            StateNoise::RightMultiplicative(tr) => x.compose(sample(tr, k)?)?,
        };
        let w = match &self.input_noise {
            InputNoise::None => u.clone(),
            InputNoise::Additive(tr) => {
                let d = sample(tr, k)?;
                if d.len() != u.len() {
                    return Err(Error::DimensionMismatch {
                        expected: u.len(),
                        got: d.len(),
                    });
                }
                u + d
            }
        };
        Ok((y, w))
    }

    /// The additive input noise of step `k` (zero without input noise).
    pub fn input_delta(&self, k: usize, dim: usize) -> Result<AlgebraVector<T>> {
        match &self.input_noise {
            InputNoise::None => Ok(AlgebraVector::zeros(dim)),
            InputNoise::Additive(tr) => sample(tr, k).cloned(),
        }
    }
}

fn sample<S>(trace: &[S], k: usize) -> Result<&S> {
    trace.get(k).ok_or(Error::TraceExhausted { step: k, len: trace.len() })
}

pub fn apply_channel<T: Real>(
    ch: &MeasurementChannel<T>,
    k: usize,
    x: &GroupElement<T>,
    u: &AlgebraVector<T>,
) -> Result<(GroupElement<T>, AlgebraVector<T>)> {
    ch.apply(k, x, u)
}
