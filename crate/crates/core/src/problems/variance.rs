use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{Components, Objective};
use crate::block::{weighted_norm_sq, DiagonalMetric};
use crate::error::{invalid, Error, Result};

/// How a `σ²` value was obtained.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SigmaMethod {
    /// Full enumeration over all components.
    Exact,
    /// Mean over this many sampled components.
    SampleMean(usize),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SigmaEstimate {
    pub value: f64,
    pub method: SigmaMethod,
    /// Index of the probe point that attained the maximum.
    pub argmax: usize,
}

impl SigmaEstimate {
    pub fn label(&self) -> String {
        match self.method {
            SigmaMethod::Exact => "exact".into(),
            SigmaMethod::SampleMean(s) => format!("sample_mean({s})"),
        }
    }
}

fn check_inputs<O: Objective + ?Sized>(prob: &O, metric: &DiagonalMetric, probes: &[Vec<f64>]) -> Result<()> {
    if probes.is_empty() {
        return Err(invalid("at least one probe point is required"));
    }
    if metric.partition() != prob.partition() {
        return Err(Error::InvalidMetric("metric partition differs from the objective's".into()));
    }
    probes.iter().try_for_each(|x| prob.partition().check_len(x))
}

/// `max_x E_i‖∇f_i(x) − ∇f(x)‖²_{Λ⁻¹}` over `probes`, enumerating every
/// component. Streaming objectives are rejected; use [`sample_sigma_sq`].
pub fn estimate_sigma_sq<O: Objective + ?Sized>(
    prob: &O,
    metric: &DiagonalMetric,
    probes: &[Vec<f64>],
) -> Result<SigmaEstimate> {
    check_inputs(prob, metric, probes)?;
    let Components::Finite(n) = prob.components() else {
        return Err(Error::RequiresFiniteSum);
    };
    let d = prob.dim();
    let mut best = SigmaEstimate { value: 0.0, method: SigmaMethod::Exact, argmax: 0 };
    let mut gi = vec![0.0; d];
    for (p, x) in probes.iter().enumerate() {
        let g = prob.full_grad(x);
        let mut total = 0.0;
        for i in 0..n {
            prob.component_grad_range(i, 0..d, x, &mut gi);
            gi.iter_mut().zip(&g).for_each(|(a, b)| *a -= b);
            total += weighted_norm_sq(&gi, metric.diag(), true);
        }
        let v = total / n as f64;
        if v > best.value {
            best.value = v;
            best.argmax = p;
        }
    }
    Ok(best)
}

/// Like [`estimate_sigma_sq`], but averages over `samples` component indices
/// drawn with replacement (seeded). Works for streaming objectives, where
/// `∇f` is the objective's surrogate gradient.
pub fn sample_sigma_sq<O: Objective + ?Sized>(
    prob: &O,
    metric: &DiagonalMetric,
    probes: &[Vec<f64>],
    samples: usize,
    seed: u64,
) -> Result<SigmaEstimate> {
    check_inputs(prob, metric, probes)?;
    if samples == 0 {
        return Err(invalid("sample count must be positive"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d = prob.dim();
    let mut best = SigmaEstimate { value: 0.0, method: SigmaMethod::SampleMean(samples), argmax: 0 };
    let mut gi = vec![0.0; d];
    for (p, x) in probes.iter().enumerate() {
        let g = prob.full_grad(x);
        let mut total = 0.0;
        for _ in 0..samples {
            let i = match prob.components() {
                Components::Finite(n) => rng.random_range(0..n),
                Components::Streaming => rng.random::<u32>() as usize,
            };
            prob.component_grad_range(i, 0..d, x, &mut gi);
            gi.iter_mut().zip(&g).for_each(|(a, b)| *a -= b);
            total += weighted_norm_sq(&gi, metric.diag(), true);
        }
        let v = total / samples as f64;
        if v > best.value {
            best.value = v;
            best.argmax = p;
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::block::BlockPartition;
    use crate::linalg::Matrix;
    use crate::problems::{QuadraticFiniteSum, StreamingObjective};

    #[test]
    fn two_component_hand_example() {
        let part = BlockPartition::uniform(2, 1).unwrap();
        let q = QuadraticFiniteSum::new(
            part.clone(),
            vec![Matrix::identity(2), Matrix::identity(2)],
            vec![vec![1.0, 0.0], vec![-1.0, 0.0]],
            vec![0.0, 0.0],
        )
        .unwrap();
        let est = estimate_sigma_sq(&q, &DiagonalMetric::identity(part), &[vec![0.0, 0.0]]).unwrap();
        assert_eq!(est.value, 1.0);
        assert_eq!(est.method, SigmaMethod::Exact);
    }

    #[test]
    fn single_or_identical_components_have_zero_variance() {
        let part = BlockPartition::uniform(3, 3).unwrap();
        let one = QuadraticFiniteSum::generate(3, 1, part.clone(), 4.0, true).unwrap();
        let metric = DiagonalMetric::identity(part.clone());
        assert_eq!(estimate_sigma_sq(&one, &metric, &[vec![0.3, -1.0, 2.0]]).unwrap().value, 0.0);
        let a = one.component_matrix(0).clone();
        let b = one.component_linear(0).to_vec();
        let same = QuadraticFiniteSum::new(part, vec![a.clone(), a], vec![b.clone(), b], vec![0.0; 2]).unwrap();
        assert!(estimate_sigma_sq(&same, &metric, &[vec![1.0, 1.0, 1.0]]).unwrap().value < 1e-24);
    }

    #[test]
    fn streaming_requires_sampling() {
        let part = BlockPartition::uniform(3, 1).unwrap();
        let s = StreamingObjective::generate_quadratic(1, part.clone(), 3.0, 0.5, 2000).unwrap();
        let metric = DiagonalMetric::identity(part);
        assert!(matches!(estimate_sigma_sq(&s, &metric, &[vec![0.0; 3]]), Err(Error::RequiresFiniteSum)));
        // noise 0.5 on each of 3 coordinates gives σ² ≈ 0.75
        let est = sample_sigma_sq(&s, &metric, &[vec![0.0; 3]], 4000, 9).unwrap();
        assert!((est.value - 0.75).abs() < 0.08, "{}", est.value);
        assert_eq!(est.label(), "sample_mean(4000)");
    }
}
