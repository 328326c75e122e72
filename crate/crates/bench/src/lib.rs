//! Fixtures shared by the criterion benches in `benches/`.

use ccd_core::problems::QuadraticFiniteSum;
use ccd_core::smoothness::compute_l_constants;
use ccd_core::{BlockPartition, DiagonalMetric, Matrix, Result};

/// A convex quadratic finite sum with its exact block metric and constants.
pub struct QuadraticFixture {
    pub problem: QuadraticFiniteSum,
    pub metric: DiagonalMetric,
    pub l_hat: f64,
    pub l_tilde: f64,
    pub x0: Vec<f64>,
}

impl QuadraticFixture {
    pub fn new(n: usize, d: usize, m: usize, seed: u64) -> Result<Self> {
        let partition = BlockPartition::uniform(d, m)?;
        let problem = QuadraticFiniteSum::generate(seed, n, partition.clone(), 10.0, true)?;
        let metric = problem.block_lipschitz_metric()?;
        let q_list = problem.exact_q_list(&metric)?;
        let (l_hat, l_tilde) = compute_l_constants(&q_list, &metric, &partition)?;
        let x0 = (0..d).map(|i| ((i * 7919 % 13) as f64 - 6.0) / 3.0).collect();
        Ok(QuadraticFixture { problem, metric, l_hat, l_tilde, x0 })
    }
}

/// Symmetric `d × d` test matrix with a spread spectrum.
pub fn symmetric_matrix(d: usize) -> Matrix {
    Matrix::from_fn(d, d, |i, j| {
        let base = 1.0 / (1.0 + i.abs_diff(j) as f64);
        if i == j {
            base + i as f64 / d as f64
        } else {
            base
        }
    })
}
