//! Smoothness constants: spectral norms, the aggregated masked constants
//! `L̂`/`L̃`, admissible step sizes, and backtracking estimates of `Λ_j`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::block::{mask_materialize, BlockPartition, DiagonalMetric, MaskKind};
use crate::error::{invalid, Error, Result};
use crate::linalg::{dot, norm_sq, symmetric_eigenvalues, Matrix};
use crate::problems::{Components, Objective, Regularizer};
use crate::sampling::variance_factor;

pub const SPECTRAL_TOL: f64 = 1e-10;
pub const SPECTRAL_MAX_ITER: usize = 10_000;

const PERTURBATION_SEED: u64 = 0x5eed_1e55;

/// Power iteration on `M²`, which is PSD even when `M` is indefinite, so
/// eigenvalues `±λ` merge. Stops on the residual: with `θ = xᵀM²x` and
/// `‖M²x − θx‖ ≤ tol·θ`, `θ` is within `tol` (relative) of an eigenvalue of
/// `M²`, and `√θ` within `tol/2` of the matching singular value.
fn power_iteration(m: &Matrix, start: Vec<f64>, tol: f64, max_iter: usize) -> Result<f64> {
    let mut x = start;
    let norm = norm_sq(&x).sqrt();
    x.iter_mut().for_each(|v| *v /= norm);
    let mut theta = 0.0f64;
    for _ in 0..max_iter {
        let y = m.matvec(&m.matvec(&x));
        let len = norm_sq(&y).sqrt();
        if len == 0.0 {
            return Ok(0.0);
        }
        theta = dot(&x, &y);
        let residual: f64 = y.iter().zip(&x).map(|(a, b)| (a - theta * b).powi(2)).sum::<f64>().sqrt();
        if residual <= tol * theta {
            return Ok(theta.sqrt());
        }
        x = y.into_iter().map(|v| v / len).collect();
    }
    Err(Error::NoConvergence { iterations: max_iter, estimate: theta.max(0.0).sqrt() })
}

/// `‖M‖₂` of a symmetric matrix by power iteration.
///
/// Runs from the all-ones vector and again from a fixed-seed perturbation of
/// it, so a start orthogonal to the top eigenvector cannot stall the result.
pub fn spectral_norm(m: &Matrix, tol: f64, max_iter: usize) -> Result<f64> {
    let m = m.symmetrized()?;
    let d = m.rows();
    if d == 0 || m.max_abs() == 0.0 {
        return Ok(0.0);
    }
    let first = power_iteration(&m, vec![1.0; d], tol, max_iter)?;
    let mut rng = ChaCha8Rng::seed_from_u64(PERTURBATION_SEED);
    let start = (0..d).map(|_| 1.0 + rng.random_range(-0.5..0.5)).collect();
    let second = power_iteration(&m, start, tol, max_iter)?;
    Ok(first.max(second))
}

fn masked_sum(q_list: &[Matrix], mask: MaskKind, partition: &BlockPartition) -> Result<Matrix> {
    let d = partition.dim();
    let mut sum = Matrix::zeros(d, d);
    for (j, q) in q_list.iter().enumerate() {
        sum.add_assign(&mask_materialize(q, mask, j, partition)?);
    }
    Ok(sum)
}

/// `(L̂, L̃)`: spectral norms of `Λ^{-1/2}(Σ_j Q̂ʲ)Λ^{-1/2}` and
/// `Λ^{-1/2}(Σ_j Q̃ʲ)Λ^{-1/2}`.
pub fn compute_l_constants(
    q_list: &[Matrix],
    metric: &DiagonalMetric,
    partition: &BlockPartition,
) -> Result<(f64, f64)> {
    if q_list.len() != partition.num_blocks() {
        return Err(Error::DimensionMismatch { expected: partition.num_blocks(), got: q_list.len() });
    }
    if metric.partition().dim() != partition.dim() {
        return Err(Error::DimensionMismatch { expected: partition.dim(), got: metric.partition().dim() });
    }
    let hat = metric.congruence_inverse_sqrt(&masked_sum(q_list, MaskKind::Hat, partition)?);
    let tilde = metric.congruence_inverse_sqrt(&masked_sum(q_list, MaskKind::Tilde, partition)?);
    Ok((operator_norm(&hat)?, operator_norm(&tilde)?))
}

/// Power iteration, or the dense eigensolver when a nearly repeated top
/// eigenvalue keeps power iteration from converging.
fn operator_norm(m: &Matrix) -> Result<f64> {
    match spectral_norm(m, SPECTRAL_TOL, SPECTRAL_MAX_ITER) {
        Err(Error::NoConvergence { .. }) => {
            let eig = symmetric_eigenvalues(&m.symmetrized()?)?;
            Ok(eig.iter().fold(0.0f64, |acc, v| acc.max(v.abs())))
        }
        other => other,
    }
}

/// Metric plus the constants derived from it.
#[derive(Clone, Debug)]
pub struct SmoothnessProfile {
    pub metric: DiagonalMetric,
    pub q_list: Option<Vec<Matrix>>,
    pub l_hat: f64,
    pub l_tilde: f64,
}

impl SmoothnessProfile {
    pub fn from_q_list(metric: DiagonalMetric, q_list: Vec<Matrix>) -> Result<Self> {
        let partition = metric.partition().clone();
        let (l_hat, l_tilde) = compute_l_constants(&q_list, &metric, &partition)?;
        Ok(SmoothnessProfile { metric, q_list: Some(q_list), l_hat, l_tilde })
    }

    /// Constants given by the caller rather than computed.
    pub fn supplied(metric: DiagonalMetric, l_hat: f64, l_tilde: f64) -> Result<Self> {
        if !(l_hat >= 0.0 && l_tilde >= 0.0 && l_hat.is_finite() && l_tilde.is_finite()) {
            return Err(invalid("supplied smoothness constants must be finite and >= 0"));
        }
        Ok(SmoothnessProfile { metric, q_list: None, l_hat, l_tilde })
    }

    pub fn is_supplied(&self) -> bool {
        self.q_list.is_none()
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum StepSizeMode {
    /// General nonconvex rule.
    Theorem3,
    /// Rule under the PŁ condition with constant `mu`.
    Pl { mu: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EstimatorParams {
    pub p: f64,
    pub b: usize,
    pub bprime: usize,
    pub components: Components,
}

impl EstimatorParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.p > 0.0 && self.p <= 1.0) {
            return Err(invalid(format!("p = {} must lie in (0, 1]", self.p)));
        }
        if self.bprime == 0 || self.bprime > self.b {
            return Err(invalid(format!("need 1 <= b' <= b, got b' = {}, b = {}", self.bprime, self.b)));
        }
        if let Components::Finite(n) = self.components {
            if self.b > n {
                return Err(invalid(format!("need b <= n, got b = {}, n = {n}", self.b)));
            }
        }
        Ok(())
    }

    pub fn variance_factor(&self) -> f64 {
        variance_factor(self.components, self.b)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepSizePlan {
    /// The largest admissible step.
    pub eta: f64,
    pub c0: f64,
    /// `(−1 + √(1 + 4c0)) / (2c0)`, the root of `c0η² + η − 1`.
    pub eta_root: f64,
    pub mode: StepSizeMode,
    pub params: EstimatorParams,
}

/// Positive root of `c0·η² + η − 1 = 0`, written to avoid cancellation;
/// `c0 = 0` gives 1.
pub fn eta_root(c0: f64) -> f64 {
    2.0 / (1.0 + (1.0 + 4.0 * c0).sqrt())
}

pub fn theorem3_c0(l_hat: f64, l_tilde: f64, params: &EstimatorParams) -> f64 {
    let p = params.p;
    let bp = params.bprime as f64;
    2.0 * (1.0 - p) * l_hat / (p * bp) + l_hat + 2.0 * (p * params.variance_factor() + (1.0 - p) / bp) * l_tilde / p
}

pub fn pl_c0(l_hat: f64, l_tilde: f64, params: &EstimatorParams) -> f64 {
    let p = params.p;
    let bp = params.bprime as f64;
    l_hat + 4.0 * l_hat / (p * bp) + (4.0 * l_tilde / p) * (p * params.variance_factor() + (1.0 - p) / bp)
}

pub fn step_size(l_hat: f64, l_tilde: f64, params: EstimatorParams, mode: StepSizeMode) -> Result<StepSizePlan> {
    params.validate()?;
    let (c0, eta) = match mode {
        StepSizeMode::Theorem3 => {
            let c0 = theorem3_c0(l_hat, l_tilde, &params);
            (c0, eta_root(c0))
        }
        StepSizeMode::Pl { mu } => {
            if !(mu > 0.0) {
                return Err(invalid(format!("PŁ constant {mu} must be > 0")));
            }
            let c0 = pl_c0(l_hat, l_tilde, &params);
            let cap = if params.p < 1.0 { params.p / (mu * (1.0 - params.p)) } else { f64::INFINITY };
            (c0, eta_root(c0).min(cap))
        }
    };
    Ok(StepSizePlan { eta, c0, eta_root: eta_root(c0), mode, params })
}

/// Step size from a profile.
pub fn profile_step_size(
    profile: &SmoothnessProfile,
    params: EstimatorParams,
    mode: StepSizeMode,
) -> Result<StepSizePlan> {
    step_size(profile.l_hat, profile.l_tilde, params, mode)
}

pub const MAX_DOUBLINGS: usize = 200;

/// Per-block backtracking estimates for `Λ_j = L_j·I`.
///
/// Estimates only ever grow within a run; [`reset`](Self::reset) starts over.
#[derive(Clone, Debug)]
pub struct BlockBacktracker {
    growth: f64,
    init: f64,
    estimates: Vec<f64>,
}

impl BlockBacktracker {
    pub fn new(num_blocks: usize, growth: f64, init: f64) -> Result<Self> {
        if !(growth > 1.0 && growth.is_finite()) {
            return Err(invalid(format!("growth factor {growth} must be > 1")));
        }
        if !(init > 0.0 && init.is_finite()) {
            return Err(invalid(format!("initial estimate {init} must be > 0")));
        }
        Ok(BlockBacktracker { growth, init, estimates: vec![init; num_blocks] })
    }

    pub fn estimate(&self, j: usize) -> f64 {
        self.estimates[j]
    }

    pub fn estimates(&self) -> &[f64] {
        &self.estimates
    }

    pub fn reset(&mut self) {
        self.estimates.fill(self.init);
    }

    /// Finds the block-`j` step from `x` under `Λ_j = L_j·I`, raising `L_j`
    /// until the block descent inequality holds for that step. Returns the
    /// new block and leaves `x` untouched.
    pub fn step<O: Objective + ?Sized>(
        &mut self,
        prob: &O,
        reg: &Regularizer,
        j: usize,
        x: &[f64],
        grad_j: &[f64],
    ) -> Result<Vec<f64>> {
        let range = prob.partition().range(j);
        let f_old = prob.value(x);
        let mut trial = x.to_vec();
        let mut block = vec![0.0; range.len()];
        let mut weights = vec![0.0; range.len()];
        for _ in 0..=MAX_DOUBLINGS {
            let l = self.estimates[j];
            weights.fill(l);
            reg.prox_into(j, &x[range.clone()], grad_j, 1.0, &weights, &mut block);
            trial[range.clone()].copy_from_slice(&block);
            let delta: Vec<f64> = block.iter().zip(&x[range.clone()]).map(|(a, b)| a - b).collect();
            let f_new = prob.value(&trial);
            let model = f_old + dot(grad_j, &delta) + 0.5 * l * norm_sq(&delta);
            let slack = 4.0 * f64::EPSILON * f_old.abs().max(f_new.abs());
            if f_new <= model + slack {
                return Ok(block);
            }
            self.estimates[j] = l * self.growth;
            if !self.estimates[j].is_finite() {
                break;
            }
        }
        Err(Error::BacktrackOverflow(MAX_DOUBLINGS))
    }
}

/// Smallest `init·growth^t` for which the gradient step on block `j` from `x`
/// satisfies `f(x + Δ) ≤ f(x) + ⟨∇ʲf(x), Δ⟩ + (L/2)‖Δ‖²`.
pub fn backtrack_lambda<O: Objective + ?Sized>(prob: &O, j: usize, x: &[f64], growth: f64, init: f64) -> Result<f64> {
    prob.partition().check_block(j)?;
    prob.partition().check_len(x)?;
    let mut bt = BlockBacktracker::new(prob.partition().num_blocks(), growth, init)?;
    let g = prob.block_grad(j, x);
    bt.step(prob, &Regularizer::Zero, j, x, &g)?;
    Ok(bt.estimate(j))
}
