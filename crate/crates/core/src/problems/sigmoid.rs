use std::ops::Range;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::{Components, Objective};
use crate::block::{BlockPartition, DiagonalMetric};
use crate::error::{invalid, Error, Result};
use crate::linalg::{dot, symmetric_eigenvalues, Matrix};

/// `max_z |σ''(z)|` for the logistic function, `1/(6√3)`.
pub const SIGMOID_CURVATURE_BOUND: f64 = 0.096_225_044_864_937_63;

/// Sigmoid loss `f_i(x) = 1 / (1 + exp(y_i a_iᵀx))`: smooth, nonconvex, in `(0, 1)`.
#[derive(Clone, Debug)]
pub struct SigmoidClassification {
    partition: BlockPartition,
    rows: Matrix,
    labels: Vec<f64>,
}

#[inline]
fn loss(t: f64) -> f64 {
    1.0 / (1.0 + t.exp())
}

impl SigmoidClassification {
    pub fn new(partition: BlockPartition, rows: Matrix, labels: Vec<f64>) -> Result<Self> {
        if rows.rows() == 0 {
            return Err(invalid("at least one data row is required"));
        }
        if rows.cols() != partition.dim() {
            return Err(Error::DimensionMismatch { expected: partition.dim(), got: rows.cols() });
        }
        if labels.len() != rows.rows() {
            return Err(Error::DimensionMismatch { expected: rows.rows(), got: labels.len() });
        }
        if let Some(y) = labels.iter().find(|y| **y != 1.0 && **y != -1.0) {
            return Err(invalid(format!("label {y} is not ±1")));
        }
        Ok(SigmoidClassification { partition, rows, labels })
    }

    /// Gaussian rows labelled by a planted hyperplane; the label noise has
    /// standard deviation `1 / margin` relative to the unit-norm hyperplane.
    pub fn generate(seed: u64, n: usize, partition: BlockPartition, margin: f64) -> Result<Self> {
        if n == 0 {
            return Err(invalid("n must be at least 1"));
        }
        if !(margin > 0.0) {
            return Err(invalid(format!("margin {margin} must be > 0")));
        }
        let d = partition.dim();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut w: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
        let norm = dot(&w, &w).sqrt().max(f64::MIN_POSITIVE);
        w.iter_mut().for_each(|v| *v /= norm);
        let mut data = Vec::with_capacity(n * d);
        let mut labels = Vec::with_capacity(n);
        for _ in 0..n {
            let row: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
            let noise: f64 = rng.sample(StandardNormal);
            labels.push(if dot(&row, &w) + noise / margin >= 0.0 { 1.0 } else { -1.0 });
            data.extend(row);
        }
        SigmoidClassification::new(partition, Matrix::from_row_major(n, d, data)?, labels)
    }

    pub fn n(&self) -> usize {
        self.labels.len()
    }

    pub fn rows(&self) -> &Matrix {
        &self.rows
    }

    pub fn labels(&self) -> &[f64] {
        &self.labels
    }

    pub fn with_partition(&self, partition: BlockPartition) -> Result<Self> {
        SigmoidClassification::new(partition, self.rows.clone(), self.labels.clone())
    }

    fn margin(&self, i: usize, x: &[f64]) -> f64 {
        self.labels[i] * dot(self.rows.row(i), x)
    }

    /// `SIGMOID_CURVATURE_BOUND · ‖(1/n) Σ_i a_i^j a_i^jᵀ‖`, an upper bound on
    /// the block curvature of `f`.
    pub fn block_curvature_bound(&self, j: usize) -> Result<f64> {
        self.partition.check_block(j)?;
        let r = self.partition.range(j);
        let dj = r.len();
        let mut gram = Matrix::zeros(dj, dj);
        for i in 0..self.n() {
            let a = &self.rows.row(i)[r.clone()];
            for s in 0..dj {
                for t in 0..dj {
                    gram[(s, t)] += a[s] * a[t];
                }
            }
        }
        gram.scale(1.0 / self.n() as f64);
        let eig = symmetric_eigenvalues(&gram)?;
        Ok(SIGMOID_CURVATURE_BOUND * eig[dj - 1].max(0.0))
    }

    /// `Λ_j = L_j · I` from [`block_curvature_bound`](Self::block_curvature_bound).
    pub fn curvature_metric(&self) -> Result<DiagonalMetric> {
        let scalars = (0..self.partition.num_blocks())
            .map(|j| self.block_curvature_bound(j).map(|l| if l > 0.0 { l } else { 1.0 }))
            .collect::<Result<Vec<_>>>()?;
        DiagonalMetric::from_block_scalars(self.partition.clone(), &scalars)
    }
}

impl Objective for SigmoidClassification {
    fn partition(&self) -> &BlockPartition {
        &self.partition
    }

    fn components(&self) -> Components {
        Components::Finite(self.n())
    }

    fn value(&self, x: &[f64]) -> f64 {
        (0..self.n()).map(|i| self.component_value(i, x)).sum::<f64>() / self.n() as f64
    }

    fn grad_range(&self, range: Range<usize>, x: &[f64], out: &mut [f64]) {
        out.fill(0.0);
        for i in 0..self.n() {
            let f = loss(self.margin(i, x));
            let coef = -f * (1.0 - f) * self.labels[i];
            for (o, a) in out.iter_mut().zip(&self.rows.row(i)[range.clone()]) {
                *o += coef * a;
            }
        }
        let inv = 1.0 / self.n() as f64;
        out.iter_mut().for_each(|o| *o *= inv);
    }

    fn component_value(&self, i: usize, x: &[f64]) -> f64 {
        loss(self.margin(i, x))
    }

    fn component_grad_range(&self, i: usize, range: Range<usize>, x: &[f64], out: &mut [f64]) {
        let f = loss(self.margin(i, x));
        let coef = -f * (1.0 - f) * self.labels[i];
        for (o, a) in out.iter_mut().zip(&self.rows.row(i)[range]) {
            *o = coef * a;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::test_support::central_diff;

    #[test]
    fn curvature_constant() {
        assert!((SIGMOID_CURVATURE_BOUND - 1.0 / (6.0 * 3f64.sqrt())).abs() < 1e-17);
    }

    #[test]
    fn half_at_origin_and_bounded() {
        let p = BlockPartition::uniform(6, 2).unwrap();
        let s = SigmoidClassification::generate(4, 20, p, 2.0).unwrap();
        let zero = vec![0.0; 6];
        for i in 0..20 {
            assert_eq!(s.component_value(i, &zero), 0.5);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..50 {
            let x: Vec<f64> = (0..6).map(|_| 10.0 * rng.sample::<f64, _>(StandardNormal)).collect();
            let v = s.value(&x);
            assert!((0.0..=1.0).contains(&v));
        }
    }

    #[test]
    fn component_gradient_matches_finite_differences() {
        let p = BlockPartition::uniform(5, 3).unwrap();
        let s = SigmoidClassification::generate(2, 8, p, 1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..20 {
            let x: Vec<f64> = (0..5).map(|_| 0.5 * rng.sample::<f64, _>(StandardNormal)).collect();
            let i = rng.random_range(0..8);
            for j in 0..3 {
                let g = s.component_block_grad(i, j, &x);
                for (t, gt) in s.partition().range(j).zip(&g) {
                    let fd = central_diff(|z| s.component_value(i, z), &x, t, 1e-6);
                    assert!((fd - gt).abs() <= 1e-6 * gt.abs().max(1e-3), "{fd} vs {gt}");
                }
            }
        }
    }

    #[test]
    fn deterministic_per_seed() {
        let p = BlockPartition::uniform(4, 2).unwrap();
        let a = SigmoidClassification::generate(3, 10, p.clone(), 1.0).unwrap();
        let b = SigmoidClassification::generate(3, 10, p, 1.0).unwrap();
        assert_eq!(a.rows(), b.rows());
        assert_eq!(a.labels(), b.labels());
    }
}
