use std::ops::Range;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::{Components, Objective};
use crate::block::{BlockPartition, DiagonalMetric};
use crate::error::{invalid, Error, Result};
use crate::linalg::{dot, symmetric_eigenvalues, Matrix};

/// `f(x) = (1/n) Σ_i ½xᵀA_i x + b_iᵀx + c_i` with symmetric `A_i`.
#[derive(Clone, Debug)]
pub struct QuadraticFiniteSum {
    partition: BlockPartition,
    a: Vec<Matrix>,
    b: Vec<Vec<f64>>,
    c: Vec<f64>,
    mean_a: Matrix,
    mean_b: Vec<f64>,
    mean_c: f64,
    box_recommended: bool,
}

impl QuadraticFiniteSum {
    pub fn new(partition: BlockPartition, a: Vec<Matrix>, b: Vec<Vec<f64>>, c: Vec<f64>) -> Result<Self> {
        let n = a.len();
        if n == 0 {
            return Err(invalid("a finite sum needs at least one component"));
        }
        if b.len() != n || c.len() != n {
            return Err(Error::DimensionMismatch { expected: n, got: b.len().min(c.len()) });
        }
        let d = partition.dim();
        let mut sym = Vec::with_capacity(n);
        for ai in &a {
            if ai.rows() != d || ai.cols() != d {
                return Err(Error::DimensionMismatch { expected: d, got: ai.rows() });
            }
            sym.push(ai.symmetrized()?);
        }
        for bi in &b {
            partition.check_len(bi)?;
        }
        let inv_n = 1.0 / n as f64;
        let mut mean_a = Matrix::zeros(d, d);
        for ai in &sym {
            mean_a.add_assign(ai);
        }
        mean_a.scale(inv_n);
        let mut mean_b = vec![0.0; d];
        for bi in &b {
            mean_b.iter_mut().zip(bi).for_each(|(m, v)| *m += v);
        }
        mean_b.iter_mut().for_each(|m| *m *= inv_n);
        let mean_c = c.iter().sum::<f64>() * inv_n;
        Ok(QuadraticFiniteSum { partition, a: sym, b, c, mean_a, mean_b, mean_c, box_recommended: false })
    }

    /// Seeded random instance. With `convex`, every `A_i = U_i diag(λ) U_iᵀ`
    /// has spectrum in `[1, condition_number]`; otherwise the spectrum has
    /// magnitudes in that range with mixed signs and the instance carries a
    /// box-regularizer recommendation so that `F` stays bounded below.
    pub fn generate(
        seed: u64,
        n: usize,
        partition: BlockPartition,
        condition_number: f64,
        convex: bool,
    ) -> Result<Self> {
        if n == 0 {
            return Err(invalid("n must be at least 1"));
        }
        if !(condition_number >= 1.0 && condition_number.is_finite()) {
            return Err(invalid(format!("condition number {condition_number} must be >= 1")));
        }
        let d = partition.dim();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut a = Vec::with_capacity(n);
        let mut b = Vec::with_capacity(n);
        for _ in 0..n {
            let mut spectrum: Vec<f64> = (0..d).map(|_| rng.random_range(1.0..=condition_number)).collect();
            spectrum[0] = 1.0;
            if d > 1 {
                spectrum[d - 1] = condition_number;
            }
            if !convex {
                for (t, s) in spectrum.iter_mut().enumerate() {
                    let negative = match t {
                        0 => true,
                        1 => false,
                        _ => rng.random_bool(0.5),
                    };
                    if negative {
                        *s = -*s;
                    }
                }
            }
            let g = DMatrix::from_fn(d, d, |_, _| rng.sample::<f64, _>(StandardNormal));
            let u = g.qr().q();
            let m = &u * DMatrix::from_diagonal(&DVector::from_vec(spectrum)) * u.transpose();
            let m = Matrix::from_fn(d, d, |r, c| 0.5 * (m[(r, c)] + m[(c, r)]));
            a.push(m);
            b.push((0..d).map(|_| rng.sample::<f64, _>(StandardNormal)).collect());
        }
        let mut q = QuadraticFiniteSum::new(partition, a, b, vec![0.0; n])?;
        q.box_recommended = !convex;
        Ok(q)
    }

    pub fn n(&self) -> usize {
        self.a.len()
    }

    pub fn component_matrix(&self, i: usize) -> &Matrix {
        &self.a[i]
    }

    pub fn component_linear(&self, i: usize) -> &[f64] {
        &self.b[i]
    }

    pub fn component_constant(&self, i: usize) -> f64 {
        self.c[i]
    }

    pub fn mean_matrix(&self) -> &Matrix {
        &self.mean_a
    }

    pub fn mean_linear(&self) -> &[f64] {
        &self.mean_b
    }

    /// Set for nonconvex instances: pair them with a box regularizer.
    pub fn box_recommended(&self) -> bool {
        self.box_recommended
    }

    pub fn with_partition(&self, partition: BlockPartition) -> Result<Self> {
        if partition.dim() != self.partition.dim() {
            return Err(Error::DimensionMismatch { expected: self.partition.dim(), got: partition.dim() });
        }
        let mut q = self.clone();
        q.partition = partition;
        Ok(q)
    }

    /// `Qʲ = (1/n) Σ_i A_{i,S_j,:}ᵀ Λ_j⁻¹ A_{i,S_j,:}`, so that
    /// `E_i‖∇ʲf_i(x) − ∇ʲf_i(y)‖²_{Λ_j⁻¹} = ‖x − y‖²_{Qʲ}` exactly.
    pub fn exact_q(&self, j: usize, metric: &DiagonalMetric) -> Result<Matrix> {
        self.partition.check_block(j)?;
        if metric.partition() != &self.partition {
            return Err(Error::InvalidMetric("metric partition differs from the objective's".into()));
        }
        let d = self.dim();
        let range = self.partition.range(j);
        let lam = metric.diag();
        let mut q = Matrix::zeros(d, d);
        for ai in &self.a {
            for t in range.clone() {
                let row = ai.row(t);
                let w = 1.0 / lam[t];
                for r in 0..d {
                    let s = w * row[r];
                    if s == 0.0 {
                        continue;
                    }
                    for c in 0..d {
                        q[(r, c)] += s * row[c];
                    }
                }
            }
        }
        q.scale(1.0 / self.n() as f64);
        Ok(q)
    }

    /// `[Q⁰, ..., Q^{m-1}]` from [`exact_q`](Self::exact_q).
    pub fn exact_q_list(&self, metric: &DiagonalMetric) -> Result<Vec<Matrix>> {
        (0..self.partition.num_blocks()).map(|j| self.exact_q(j, metric)).collect()
    }

    /// `max_i ‖A_{i,S_j,S_j}‖₂`: a block Lipschitz constant valid for `f` and,
    /// in expectation, for every component.
    pub fn block_lipschitz(&self, j: usize) -> Result<f64> {
        self.partition.check_block(j)?;
        let r = self.partition.range(j);
        let mut worst = 0.0f64;
        for ai in &self.a {
            let sub = ai.submatrix(r.start, r.end, r.start, r.end);
            let eig = symmetric_eigenvalues(&sub)?;
            worst = worst.max(eig[0].abs()).max(eig[eig.len() - 1].abs());
        }
        Ok(worst)
    }

    /// `Λ_j = L_j · I` with `L_j` from [`block_lipschitz`](Self::block_lipschitz);
    /// a block with zero curvature gets `Λ_j = I`.
    pub fn block_lipschitz_metric(&self) -> Result<DiagonalMetric> {
        let scalars = (0..self.partition.num_blocks())
            .map(|j| self.block_lipschitz(j).map(|l| if l > 0.0 { l } else { 1.0 }))
            .collect::<Result<Vec<_>>>()?;
        DiagonalMetric::from_block_scalars(self.partition.clone(), &scalars)
    }

    /// `λ_min(Λ^{-1/2} Ā Λ^{-1/2})`: the PŁ constant w.r.t. `‖·‖_Λ` when `r = 0`.
    pub fn pl_constant(&self, metric: &DiagonalMetric) -> Result<f64> {
        let scaled = metric.congruence_inverse_sqrt(&self.mean_a);
        Ok(symmetric_eigenvalues(&scaled)?[0])
    }

    /// Smallest eigenvalue of `Ā` (Euclidean strong-convexity modulus when positive).
    pub fn min_eigenvalue(&self) -> Result<f64> {
        Ok(symmetric_eigenvalues(&self.mean_a)?[0])
    }

    /// Unconstrained minimizer `−Ā⁻¹b̄`; requires `Ā ≻ 0`.
    pub fn minimizer(&self) -> Result<Vec<f64>> {
        let chol =
            self.mean_a.to_nalgebra().cholesky().ok_or_else(|| invalid("mean matrix is not positive definite"))?;
        let rhs = DVector::from_iterator(self.dim(), self.mean_b.iter().map(|v| -v));
        Ok(chol.solve(&rhs).iter().copied().collect())
    }

    /// `f(x) − f(x★) = ½(x − x★)ᵀĀ(x − x★)`, evaluated without cancellation.
    pub fn optimality_gap(&self, x: &[f64], minimizer: &[f64]) -> f64 {
        let e: Vec<f64> = x.iter().zip(minimizer).map(|(a, b)| a - b).collect();
        0.5 * self.mean_a.quadratic_form(&e)
    }

    pub fn optimal_value(&self) -> Result<f64> {
        let xs = self.minimizer()?;
        Ok(0.5 * dot(&self.mean_b, &xs) + self.mean_c)
    }
}

impl Objective for QuadraticFiniteSum {
    fn partition(&self) -> &BlockPartition {
        &self.partition
    }

    fn components(&self) -> Components {
        Components::Finite(self.n())
    }

    fn value(&self, x: &[f64]) -> f64 {
        0.5 * self.mean_a.quadratic_form(x) + dot(&self.mean_b, x) + self.mean_c
    }

    fn grad_range(&self, range: Range<usize>, x: &[f64], out: &mut [f64]) {
        self.mean_a.mul_rows_into(range.start, x, out);
        out.iter_mut().zip(&self.mean_b[range]).for_each(|(o, b)| *o += b);
    }

    fn component_value(&self, i: usize, x: &[f64]) -> f64 {
        0.5 * self.a[i].quadratic_form(x) + dot(&self.b[i], x) + self.c[i]
    }

    fn component_grad_range(&self, i: usize, range: Range<usize>, x: &[f64], out: &mut [f64]) {
        self.a[i].mul_rows_into(range.start, x, out);
        out.iter_mut().zip(&self.b[i][range]).for_each(|(o, b)| *o += b);
    }
}
