use std::ops::Range;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::{Components, Objective, SigmoidClassification};
use crate::block::BlockPartition;
use crate::error::{invalid, Result};
use crate::linalg::{dot, Matrix};

/// Distribution of the i.i.d. components of a streaming objective.
#[derive(Clone, Debug)]
pub enum StreamFamily {
    /// `f_ξ(x) = ½xᵀAx + (b̄ + noise·ξ)ᵀx` with `ξ ~ N(0, I)`.
    Quadratic { a: Matrix, mean_b: Vec<f64>, noise: f64 },
    /// Sigmoid loss on a Gaussian row labelled by the planted unit vector `w`.
    Sigmoid { w: Vec<f64>, margin: f64 },
}

#[derive(Clone, Debug)]
enum Surrogate {
    Quadratic { b: Vec<f64> },
    Sigmoid(SigmoidClassification),
}

/// `f(x) = E_ξ f_ξ(x)`. Component keys index an infinite seeded stream; the
/// full value and gradient are replaced by a fixed large-sample average over
/// keys `0..surrogate_size`, so they are approximate.
#[derive(Clone, Debug)]
pub struct StreamingObjective {
    partition: BlockPartition,
    family: StreamFamily,
    seed: u64,
    surrogate: Surrogate,
}

impl StreamingObjective {
    pub fn new(partition: BlockPartition, family: StreamFamily, seed: u64, surrogate_size: usize) -> Result<Self> {
        if surrogate_size == 0 {
            return Err(invalid("surrogate sample size must be positive"));
        }
        let d = partition.dim();
        match &family {
            StreamFamily::Quadratic { a, mean_b, noise } => {
                a.check_symmetric()?;
                partition.check_len(mean_b)?;
                if a.rows() != d || !(*noise >= 0.0) {
                    return Err(invalid("streaming quadratic needs a d×d matrix and noise >= 0"));
                }
            }
            StreamFamily::Sigmoid { w, margin } => {
                partition.check_len(w)?;
                if !(*margin > 0.0) {
                    return Err(invalid("margin must be > 0"));
                }
            }
        }
        let mut obj = StreamingObjective {
            partition: partition.clone(),
            family,
            seed,
            surrogate: Surrogate::Quadratic { b: Vec::new() },
        };
        obj.surrogate = match &obj.family {
            StreamFamily::Quadratic { .. } => {
                let mut b = vec![0.0; d];
                for key in 0..surrogate_size {
                    let bk = obj.quadratic_linear(key);
                    b.iter_mut().zip(&bk).for_each(|(s, v)| *s += v);
                }
                b.iter_mut().for_each(|s| *s /= surrogate_size as f64);
                Surrogate::Quadratic { b }
            }
            StreamFamily::Sigmoid { .. } => {
                let mut data = Vec::with_capacity(surrogate_size * d);
                let mut labels = Vec::with_capacity(surrogate_size);
                for key in 0..surrogate_size {
                    let (row, y) = obj.sigmoid_row(key);
                    data.extend(row);
                    labels.push(y);
                }
                Surrogate::Sigmoid(SigmoidClassification::new(
                    partition,
                    Matrix::from_row_major(surrogate_size, d, data)?,
                    labels,
                )?)
            }
        };
        Ok(obj)
    }

    /// Streaming strongly convex quadratic with spectrum in `[1, condition_number]`.
    pub fn generate_quadratic(
        seed: u64,
        partition: BlockPartition,
        condition_number: f64,
        noise: f64,
        surrogate_size: usize,
    ) -> Result<Self> {
        if !(condition_number >= 1.0) {
            return Err(invalid("condition number must be >= 1"));
        }
        let d = partition.dim();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut spectrum: Vec<f64> = (0..d).map(|_| rng.random_range(1.0..=condition_number)).collect();
        spectrum[0] = 1.0;
        if d > 1 {
            spectrum[d - 1] = condition_number;
        }
        let g = DMatrix::from_fn(d, d, |_, _| rng.sample::<f64, _>(StandardNormal));
        let u = g.qr().q();
        let m = &u * DMatrix::from_diagonal(&DVector::from_vec(spectrum)) * u.transpose();
        let a = Matrix::from_fn(d, d, |r, c| 0.5 * (m[(r, c)] + m[(c, r)]));
        let mean_b = (0..d).map(|_| rng.sample(StandardNormal)).collect();
        StreamingObjective::new(partition, StreamFamily::Quadratic { a, mean_b, noise }, seed, surrogate_size)
    }

    pub fn generate_sigmoid(seed: u64, partition: BlockPartition, margin: f64, surrogate_size: usize) -> Result<Self> {
        let d = partition.dim();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut w: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
        let norm = dot(&w, &w).sqrt().max(f64::MIN_POSITIVE);
        w.iter_mut().for_each(|v| *v /= norm);
        StreamingObjective::new(partition, StreamFamily::Sigmoid { w, margin }, seed, surrogate_size)
    }

    pub fn family(&self) -> &StreamFamily {
        &self.family
    }

    fn key_rng(&self, key: usize) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(key as u64);
        rng
    }

    fn quadratic_linear(&self, key: usize) -> Vec<f64> {
        let StreamFamily::Quadratic { mean_b, noise, .. } = &self.family else {
            unreachable!("quadratic component requested from a sigmoid stream")
        };
        let mut rng = self.key_rng(key);
        mean_b.iter().map(|m| m + noise * rng.sample::<f64, _>(StandardNormal)).collect()
    }

    fn sigmoid_row(&self, key: usize) -> (Vec<f64>, f64) {
        let StreamFamily::Sigmoid { w, margin } = &self.family else {
            unreachable!("sigmoid component requested from a quadratic stream")
        };
        let mut rng = self.key_rng(key);
        let row: Vec<f64> = (0..w.len()).map(|_| rng.sample(StandardNormal)).collect();
        let noise: f64 = rng.sample(StandardNormal);
        let y = if dot(&row, w) + noise / margin >= 0.0 { 1.0 } else { -1.0 };
        (row, y)
    }
}

impl Objective for StreamingObjective {
    fn partition(&self) -> &BlockPartition {
        &self.partition
    }

    fn components(&self) -> Components {
        Components::Streaming
    }

    fn is_exact(&self) -> bool {
        false
    }

    fn value(&self, x: &[f64]) -> f64 {
        match (&self.family, &self.surrogate) {
            (StreamFamily::Quadratic { a, .. }, Surrogate::Quadratic { b }) => 0.5 * a.quadratic_form(x) + dot(b, x),
            (_, Surrogate::Sigmoid(s)) => s.value(x),
            _ => unreachable!(),
        }
    }

    fn grad_range(&self, range: Range<usize>, x: &[f64], out: &mut [f64]) {
        match (&self.family, &self.surrogate) {
            (StreamFamily::Quadratic { a, .. }, Surrogate::Quadratic { b }) => {
                a.mul_rows_into(range.start, x, out);
                out.iter_mut().zip(&b[range]).for_each(|(o, v)| *o += v);
            }
            (_, Surrogate::Sigmoid(s)) => s.grad_range(range, x, out),
            _ => unreachable!(),
        }
    }

    fn component_value(&self, i: usize, x: &[f64]) -> f64 {
        match &self.family {
            StreamFamily::Quadratic { a, .. } => 0.5 * a.quadratic_form(x) + dot(&self.quadratic_linear(i), x),
            StreamFamily::Sigmoid { .. } => {
                let (row, y) = self.sigmoid_row(i);
                1.0 / (1.0 + (y * dot(&row, x)).exp())
            }
        }
    }

    fn component_grad_range(&self, i: usize, range: Range<usize>, x: &[f64], out: &mut [f64]) {
        match &self.family {
            StreamFamily::Quadratic { a, .. } => {
                a.mul_rows_into(range.start, x, out);
                let b = self.quadratic_linear(i);
                out.iter_mut().zip(&b[range]).for_each(|(o, v)| *o += v);
            }
            StreamFamily::Sigmoid { .. } => {
                let (row, y) = self.sigmoid_row(i);
                let f = 1.0 / (1.0 + (y * dot(&row, x)).exp());
                let coef = -f * (1.0 - f) * y;
                for (o, a) in out.iter_mut().zip(&row[range]) {
                    *o = coef * a;
                }
            }
        }
    }
}
