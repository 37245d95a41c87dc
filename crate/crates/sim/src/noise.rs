//! Deterministic noise generation.
//!
//! The generator is SplitMix64 (64-bit state, seeded directly with the
//! seed). Uniforms take the top 53 bits; normals come from the Marsaglia
//! polar method. The output depends only on the seed, so traces are
//! reproducible across platforms.

use lie_observer::{AlgebraVector64, Group, GroupElement64};
use rand_core::{RngCore, SeedableRng};

#[derive(Debug, Clone)]
pub struct SplitMix64 {
    inner: rand_xoshiro::SplitMix64,
    spare: Option<f64>,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        Self {
            inner: rand_xoshiro::SplitMix64::from_seed(seed.to_le_bytes()),
            spare: None,
        }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    /// Uniform on `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform on `[lo, hi)`.
    pub fn uniform_in(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.uniform()
    }

    /// Standard normal.
    pub fn normal(&mut self) -> f64 {
        if let Some(z) = self.spare.take() {
            return z;
        }
        loop {
            let u = 2.0 * self.uniform() - 1.0;
            let v = 2.0 * self.uniform() - 1.0;
            let s = u * u + v * v;
            if s > 0.0 && s < 1.0 {
                let f = (-2.0 * s.ln() / s).sqrt();
                self.spare = Some(v * f);
                return u * f;
            }
        }
    }

    /// Uniformly distributed direction in `R^n` scaled to a norm drawn
    /// uniformly from `[0, r]`.
    pub fn ball_vector(&mut self, n: usize, r: f64) -> Vec<f64> {
        let mut v: Vec<f64> = (0..n).map(|_| self.normal()).collect();
        let norm = v.iter().map(|c| c * c).sum::<f64>().sqrt();
        let scale = if norm > 0.0 { r * self.uniform() / norm } else { 0.0 };
        v.iter_mut().for_each(|c| *c *= scale);
        v
    }
}

/// A Gaussian vector with per-coordinate deviation `amplitude / 3`, radially
/// clipped to norm `amplitude`.
pub fn bounded_sample(rng: &mut SplitMix64, dim: usize, amplitude: f64) -> Vec<f64> {
    let mut v: Vec<f64> = (0..dim).map(|_| rng.normal() * amplitude / 3.0).collect();
    let norm = v.iter().map(|c| c * c).sum::<f64>().sqrt();
    if norm > amplitude {
        // shrink by a few ulps so rounding cannot push the norm past the bound
        let scale = amplitude / norm * (1.0 - 4.0 * f64::EPSILON);
        v.iter_mut().for_each(|c| *c *= scale);
    }
    v
}

/// `steps` samples of algebra coordinates.
pub fn coordinate_trace(rng: &mut SplitMix64, dim: usize, amplitude: f64, steps: usize) -> Vec<Vec<f64>> {
    (0..steps).map(|_| bounded_sample(rng, dim, amplitude)).collect()
}

pub fn to_elements(group: Group, trace: &[Vec<f64>]) -> lie_observer::Result<Vec<GroupElement64>> {
    trace.iter().map(|c| GroupElement64::exp_coords(group, c)).collect()
}

pub fn to_vectors(trace: &[Vec<f64>]) -> lie_observer::Result<Vec<AlgebraVector64>> {
    trace.iter().map(|c| AlgebraVector64::from_slice(c)).collect()
}
