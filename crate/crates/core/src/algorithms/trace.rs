use std::time::Instant;

use rand::Rng;

use crate::block::weighted_norm_sq;
use crate::error::{Error, Result};
use crate::problems::{Objective, Regularizer};
use crate::sampling::{RngStream, StreamId};
use crate::DiagonalMetric;

/// Per-cycle record. Row `k = 0` describes the starting point.
#[derive(Clone, Debug, PartialEq)]
pub struct TraceRow {
    pub k: usize,
    /// `F(x_k) = f(x_k) + r(x_k)`.
    pub objective: f64,
    /// `s_k`, the squared dual norm of the cycle's subgradient at `x_k`.
    pub stationarity: Option<f64>,
    /// `v_k = ‖x_k − x_{k−1}‖²_Λ`.
    pub step_sq: f64,
    /// `u_k`, the estimator error of the gradients used in cycle `k`
    /// (diagnostics only).
    pub estimator_error: Option<f64>,
    /// `Σ_j ‖∇ʲf(x_{k−1,j}) + r′ʲ‖²_{Λ_j⁻¹}` (needs exact block gradients).
    pub inner_residual: Option<f64>,
    /// Cumulative component-gradient evaluations.
    pub samples: u64,
    /// Cumulative component-gradient evaluations weighted by the number of
    /// coordinates they were evaluated on.
    pub work: u64,
    /// Cumulative wall time; zero unless timing was requested.
    pub wall_ns: u64,
}

#[derive(Clone, Debug, Default)]
pub struct RunTrace {
    pub rows: Vec<TraceRow>,
    /// Set when `F` and `s_k` come from a large-sample surrogate.
    pub approximate: bool,
}

impl RunTrace {
    /// Number of cycles recorded (excluding the start row).
    pub fn cycles(&self) -> usize {
        self.rows.len().saturating_sub(1)
    }

    pub fn objective(&self, k: usize) -> f64 {
        self.rows[k].objective
    }

    pub fn step_sq(&self, k: usize) -> f64 {
        self.rows[k].step_sq
    }

    /// `s_k` for `k ≥ 1`.
    pub fn stationarity(&self, k: usize) -> f64 {
        self.rows[k].stationarity.expect("stationarity is recorded for k >= 1")
    }

    pub fn objectives(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.objective).collect()
    }
}

/// Result of an optimizer run.
#[derive(Clone, Debug)]
pub struct RunOutput {
    /// The returned iterate.
    pub x: Vec<f64>,
    /// Which `x_k` was returned.
    pub output_index: usize,
    /// Final iterate `x_K`.
    pub last: Vec<f64>,
    pub trace: RunTrace,
    /// Metric in force at the end of the run (changes only under backtracking).
    pub metric: DiagonalMetric,
    /// `x_0..x_K` when iterate recording is on, otherwise empty.
    pub iterates: Vec<Vec<f64>>,
}

/// Receives each trace row as soon as it is produced.
pub type TraceSink<'a> = &'a mut dyn FnMut(&TraceRow) -> Result<()>;

/// Uniform draw from `1..=iterations` on the run's output stream.
pub fn output_index(seed: u64, iterations: usize) -> usize {
    RngStream::new(seed, StreamId::Output).rng().random_range(1..=iterations)
}

/// `(1/η) Λ_j (old − new) − g`, the subgradient of `r` picked out by the prox step.
#[inline]
pub(crate) fn prox_residual(old: &[f64], new: &[f64], weights: &[f64], eta: f64, g: &[f64], out: &mut [f64]) {
    for t in 0..out.len() {
        out[t] = weights[t] * (old[t] - new[t]) / eta - g[t];
    }
}

#[inline]
pub(crate) fn sum_norm_sq(a: &[f64], b: &[f64], weights: &[f64], sign: f64) -> f64 {
    let mut total = 0.0;
    for t in 0..a.len() {
        let v = a[t] + sign * b[t];
        total += v * v / weights[t];
    }
    total
}

/// `Σ_j ‖∇ʲf(x) + r′ʲ‖²_{Λ_j⁻¹}` for the prox-induced subgradients `residuals`.
pub fn stationarity_sq<O: Objective + ?Sized>(
    prob: &O,
    x: &[f64],
    residuals: &[f64],
    metric: &DiagonalMetric,
) -> Result<f64> {
    prob.partition().check_len(x)?;
    if residuals.len() != x.len() {
        return Err(Error::DimensionMismatch { expected: x.len(), got: residuals.len() });
    }
    metric.partition().check_len(x)?;
    let g = prob.full_grad(x);
    Ok(sum_norm_sq(&g, residuals, metric.diag(), 1.0))
}

/// `F(x) = f(x) + r(x)`.
pub fn composite_value<O: Objective + ?Sized>(prob: &O, reg: &Regularizer, x: &[f64]) -> f64 {
    prob.value(x) + reg.value(x, prob.partition())
}

pub(crate) fn step_norm_sq(x: &[f64], prev: &[f64], weights: &[f64]) -> f64 {
    let delta: Vec<f64> = x.iter().zip(prev).map(|(a, b)| a - b).collect();
    weighted_norm_sq(&delta, weights, false)
}

pub(crate) struct Clock(Option<Instant>);

impl Clock {
    pub fn new(enabled: bool) -> Self {
        Clock(enabled.then(Instant::now))
    }

    pub fn elapsed_ns(&self) -> u64 {
        self.0.map_or(0, |t| t.elapsed().as_nanos() as u64)
    }
}
