//! Seeded randomness: named RNG streams, minibatches, the estimator switch,
//! and an exhaustive check of the without-replacement variance identity.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::block::{weighted_norm_sq, DiagonalMetric};
use crate::error::{invalid, Error, Result};
use crate::problems::{Components, Objective};

/// Independent random streams derived from one run seed.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum StreamId {
    Switch,
    Batch,
    Output,
}

impl StreamId {
    fn number(self) -> u64 {
        match self {
            StreamId::Switch => 1,
            StreamId::Batch => 2,
            StreamId::Output => 3,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            StreamId::Switch => "switch",
            StreamId::Batch => "batch",
            StreamId::Output => "output",
        }
    }
}

/// A reproducible ChaCha8 stream keyed by `(seed, id)`.
#[derive(Clone, Debug)]
pub struct RngStream {
    seed: u64,
    id: StreamId,
    rng: ChaCha8Rng,
}

impl RngStream {
    pub fn new(seed: u64, id: StreamId) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(id.number());
        RngStream { seed, id, rng }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn id(&self) -> StreamId {
        self.id
    }

    pub fn rng(&mut self) -> &mut ChaCha8Rng {
        &mut self.rng
    }
}

/// `b` distinct indices from `0..n`, uniform over subsets, returned sorted.
/// `b == n` returns `0..n` without consuming randomness.
pub fn draw_minibatch<R: Rng + ?Sized>(rng: &mut R, n: usize, b: usize) -> Result<Vec<usize>> {
    if b == 0 || b > n {
        return Err(invalid(format!("batch size {b} must lie in [1, {n}]")));
    }
    let mut idx: Vec<usize> = (0..n).collect();
    if b == n {
        return Ok(idx);
    }
    let (chosen, _) = idx.partial_shuffle(rng, b);
    let mut batch = chosen.to_vec();
    batch.sort_unstable();
    Ok(batch)
}

/// `b` i.i.d. component keys for a streaming objective.
pub fn draw_stream_keys<R: Rng + ?Sized>(rng: &mut R, b: usize) -> Result<Vec<usize>> {
    if b == 0 {
        return Err(invalid("batch size must be at least 1"));
    }
    Ok((0..b).map(|_| rng.random::<u64>() as usize).collect())
}

/// Minibatch for either kind of objective.
pub fn draw_batch<R: Rng + ?Sized>(rng: &mut R, components: Components, b: usize) -> Result<Vec<usize>> {
    match components {
        Components::Finite(n) => draw_minibatch(rng, n, b),
        Components::Streaming => draw_stream_keys(rng, b),
    }
}

/// Outcome of the estimator coin.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Branch {
    FullBatch,
    Recursive,
}

/// `FullBatch` with probability `p`. Always consumes exactly one draw.
pub fn bernoulli_switch<R: Rng + ?Sized>(rng: &mut R, p: f64) -> Result<Branch> {
    if !(0.0..=1.0).contains(&p) {
        return Err(invalid(format!("switch probability {p} must lie in [0, 1]")));
    }
    Ok(if rng.random::<f64>() < p { Branch::FullBatch } else { Branch::Recursive })
}

/// `(n − b) / (b(n − 1))`, with the limit `1/b` for a streaming objective.
pub fn variance_factor(components: Components, b: usize) -> f64 {
    match components {
        Components::Finite(n) if b >= n => 0.0,
        Components::Finite(n) => (n - b) as f64 / (b as f64 * (n - 1) as f64),
        Components::Streaming => 1.0 / b as f64,
    }
}

/// Largest `n` accepted by [`lemma1_enumeration_check`].
pub const MAX_ENUMERATION_N: usize = 10;

/// Exhaustive check of the minibatch variance identity on block `j`.
///
/// Returns `(lhs, rhs)` where `lhs` averages
/// `‖(1/b) Σ_{i∈B} ∇ʲf_i(x) − ∇ʲf(x)‖²_{Λ_j⁻¹}` over every size-`b` subset
/// and `rhs = variance_factor(n, b) · E_i‖∇ʲf_i(x) − ∇ʲf(x)‖²_{Λ_j⁻¹}`.
pub fn lemma1_enumeration_check<O: Objective + ?Sized>(
    prob: &O,
    metric: &DiagonalMetric,
    x: &[f64],
    j: usize,
    b: usize,
) -> Result<(f64, f64)> {
    let Components::Finite(n) = prob.components() else {
        return Err(Error::RequiresFiniteSum);
    };
    if n > MAX_ENUMERATION_N {
        return Err(invalid(format!("enumeration needs n <= {MAX_ENUMERATION_N}, got {n}")));
    }
    if b == 0 || b > n {
        return Err(invalid(format!("batch size {b} must lie in [1, {n}]")));
    }
    prob.partition().check_block(j)?;
    prob.partition().check_len(x)?;
    let weights = metric.block(j);
    let mean = prob.block_grad(j, x);
    let dev: Vec<Vec<f64>> =
        (0..n).map(|i| prob.component_block_grad(i, j, x).iter().zip(&mean).map(|(g, m)| g - m).collect()).collect();
    let spread = dev.iter().map(|v| weighted_norm_sq(v, weights, true)).sum::<f64>() / n as f64;

    let mut total = 0.0;
    let mut subsets = 0usize;
    let mut acc = vec![0.0; mean.len()];
    for mask in 0u32..(1 << n) {
        if mask.count_ones() as usize != b {
            continue;
        }
        acc.fill(0.0);
        for (i, v) in dev.iter().enumerate() {
            if mask & (1 << i) != 0 {
                acc.iter_mut().zip(v).for_each(|(a, d)| *a += d);
            }
        }
        acc.iter_mut().for_each(|a| *a /= b as f64);
        total += weighted_norm_sq(&acc, weights, true);
        subsets += 1;
    }
    Ok((total / subsets as f64, variance_factor(Components::Finite(n), b) * spread))
}
