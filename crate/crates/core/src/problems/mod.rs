//! Smooth objectives `f = (1/n) Σ f_i` (or a streaming expectation), separable
//! regularizers with metric proximal maps, and seeded instance generators.

mod io;
mod quadratic;
mod regularizer;
mod sigmoid;
mod streaming;
mod variance;

use std::ops::Range;

use crate::block::BlockPartition;

pub use io::{read_instance, write_instance, Instance};
pub use quadratic::QuadraticFiniteSum;
pub use regularizer::Regularizer;
pub use sigmoid::{SigmoidClassification, SIGMOID_CURVATURE_BOUND};
pub use streaming::{StreamFamily, StreamingObjective};
pub use variance::{estimate_sigma_sq, sample_sigma_sq, SigmaEstimate, SigmaMethod};

/// Number of components in the sum.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Components {
    Finite(usize),
    /// i.i.d. components drawn from a generator (`n = ∞`).
    Streaming,
}

impl Components {
    pub fn finite(self) -> Option<usize> {
        match self {
            Components::Finite(n) => Some(n),
            Components::Streaming => None,
        }
    }
}

/// A smooth objective with per-component, per-coordinate-range gradients.
///
/// For streaming objectives the component index is an opaque sample key,
/// and `value`/`grad_range` are fixed large-sample surrogates
/// (`is_exact() == false`).
pub trait Objective: Sync {
    fn partition(&self) -> &BlockPartition;

    fn components(&self) -> Components;

    fn value(&self, x: &[f64]) -> f64;

    /// Writes the slice `range` of `∇f(x)` into `out`.
    fn grad_range(&self, range: Range<usize>, x: &[f64], out: &mut [f64]);

    fn component_value(&self, i: usize, x: &[f64]) -> f64;

    /// Writes the slice `range` of `∇f_i(x)` into `out`.
    fn component_grad_range(&self, i: usize, range: Range<usize>, x: &[f64], out: &mut [f64]);

    fn is_exact(&self) -> bool {
        true
    }

    fn dim(&self) -> usize {
        self.partition().dim()
    }

    fn full_grad(&self, x: &[f64]) -> Vec<f64> {
        let mut g = vec![0.0; self.dim()];
        self.grad_range(0..self.dim(), x, &mut g);
        g
    }

    fn block_grad(&self, j: usize, x: &[f64]) -> Vec<f64> {
        let range = self.partition().range(j);
        let mut g = vec![0.0; range.len()];
        self.grad_range(range, x, &mut g);
        g
    }

    fn component_block_grad(&self, i: usize, j: usize, x: &[f64]) -> Vec<f64> {
        let range = self.partition().range(j);
        let mut g = vec![0.0; range.len()];
        self.component_grad_range(i, range, x, &mut g);
        g
    }

    /// `(1/|B|) Σ_{i∈B} ∇f_i(x)` restricted to `range`. A batch that is the
    /// whole index set in order is the exact gradient.
    fn minibatch_grad_range(&self, batch: &[usize], range: Range<usize>, x: &[f64], out: &mut [f64]) {
        if is_full_batch(self.components(), batch) {
            self.grad_range(range, x, out);
            return;
        }
        let mut scratch = vec![0.0; range.len()];
        out.fill(0.0);
        for &i in batch {
            self.component_grad_range(i, range.clone(), x, &mut scratch);
            for (o, s) in out.iter_mut().zip(&scratch) {
                *o += s;
            }
        }
        let inv = 1.0 / batch.len() as f64;
        out.iter_mut().for_each(|o| *o *= inv);
    }

    /// `(1/|B|) Σ_{i∈B} (∇f_i(x) − ∇f_i(y))` restricted to `range`.
    fn minibatch_diff_range(&self, batch: &[usize], range: Range<usize>, x: &[f64], y: &[f64], out: &mut [f64]) {
        let mut gy = vec![0.0; range.len()];
        if is_full_batch(self.components(), batch) {
            self.grad_range(range.clone(), x, out);
            self.grad_range(range, y, &mut gy);
            out.iter_mut().zip(&gy).for_each(|(o, g)| *o -= g);
            return;
        }
        let mut gx = vec![0.0; range.len()];
        out.fill(0.0);
        for &i in batch {
            self.component_grad_range(i, range.clone(), x, &mut gx);
            self.component_grad_range(i, range.clone(), y, &mut gy);
            for ((o, a), b) in out.iter_mut().zip(&gx).zip(&gy) {
                *o += a - b;
            }
        }
        let inv = 1.0 / batch.len() as f64;
        out.iter_mut().for_each(|o| *o *= inv);
    }
}

/// True when `batch` is `[0, 1, ..., n-1]` for a finite sum of `n` components.
pub fn is_full_batch(components: Components, batch: &[usize]) -> bool {
    match components {
        Components::Finite(n) => batch.len() == n && batch.iter().enumerate().all(|(k, &i)| k == i),
        Components::Streaming => false,
    }
}

#[cfg(test)]
pub(crate) mod test_support {
    /// Central finite difference of `f` along coordinate `t`.
    pub fn central_diff(f: impl Fn(&[f64]) -> f64, x: &[f64], t: usize, h: f64) -> f64 {
        let mut xp = x.to_vec();
        let mut xm = x.to_vec();
        xp[t] += h;
        xm[t] -= h;
        (f(&xp) - f(&xm)) / (2.0 * h)
    }
}
