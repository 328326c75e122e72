//! Block partitions, diagonal metrics and masked quadratic forms.
//!
//! Blocks are contiguous, ordered coordinate ranges `S_0, ..., S_{m-1}`.
//! Block indices are zero-based throughout the crate: "the blocks before
//! block `j`" are blocks `0..j`.

use std::ops::Range;

use crate::error::{Error, Result};
use crate::linalg::Matrix;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BlockPartition {
    /// `offsets[j]` is the first coordinate of block `j`; `offsets[m] = d`.
    offsets: Vec<usize>,
}

impl BlockPartition {
    pub fn new(block_sizes: &[usize]) -> Result<Self> {
        if block_sizes.is_empty() {
            return Err(Error::InvalidPartition("at least one block is required".into()));
        }
        if let Some(j) = block_sizes.iter().position(|&s| s == 0) {
            return Err(Error::InvalidPartition(format!("block {j} is empty")));
        }
        let mut offsets = Vec::with_capacity(block_sizes.len() + 1);
        offsets.push(0);
        for &s in block_sizes {
            offsets.push(offsets.last().unwrap() + s);
        }
        Ok(BlockPartition { offsets })
    }

    /// Splits `d` coordinates into `m` blocks whose sizes differ by at most one
    /// (the first `d % m` blocks get the extra coordinate).
    pub fn uniform(d: usize, m: usize) -> Result<Self> {
        if m == 0 || m > d {
            return Err(Error::InvalidPartition(format!("cannot split {d} coordinates into {m} blocks")));
        }
        let sizes: Vec<usize> = (0..m).map(|j| d / m + usize::from(j < d % m)).collect();
        BlockPartition::new(&sizes)
    }

    /// The trivial partition with a single block covering every coordinate.
    pub fn single(d: usize) -> Result<Self> {
        BlockPartition::new(&[d])
    }

    pub fn num_blocks(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn dim(&self) -> usize {
        *self.offsets.last().unwrap()
    }

    pub fn offsets(&self) -> &[usize] {
        &self.offsets
    }

    pub fn offset(&self, j: usize) -> usize {
        self.offsets[j]
    }

    pub fn range(&self, j: usize) -> Range<usize> {
        self.offsets[j]..self.offsets[j + 1]
    }

    pub fn size(&self, j: usize) -> usize {
        self.offsets[j + 1] - self.offsets[j]
    }

    pub fn sizes(&self) -> Vec<usize> {
        self.offsets.windows(2).map(|w| w[1] - w[0]).collect()
    }

    pub fn ranges(&self) -> impl Iterator<Item = Range<usize>> + '_ {
        self.offsets.windows(2).map(|w| w[0]..w[1])
    }

    /// Block containing coordinate `i`.
    pub fn block_of(&self, i: usize) -> Option<usize> {
        if i >= self.dim() {
            return None;
        }
        Some(self.offsets.partition_point(|&o| o <= i) - 1)
    }

    pub fn check_block(&self, j: usize) -> Result<()> {
        if j >= self.num_blocks() {
            return Err(Error::BlockIndex { index: j, blocks: self.num_blocks() });
        }
        Ok(())
    }

    pub fn check_len(&self, v: &[f64]) -> Result<()> {
        if v.len() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: v.len() });
        }
        Ok(())
    }
}

/// The diagonal matrix `Λ = diag(Λ_0, ..., Λ_{m-1})` with strictly positive entries.
#[derive(Clone, Debug, PartialEq)]
pub struct DiagonalMetric {
    diag: Vec<f64>,
    partition: BlockPartition,
}

impl DiagonalMetric {
    pub fn new(diag: Vec<f64>, partition: BlockPartition) -> Result<Self> {
        partition.check_len(&diag)?;
        if let Some((i, v)) = diag.iter().enumerate().find(|(_, v)| !(v.is_finite() && **v > 0.0)) {
            return Err(Error::InvalidMetric(format!("entry {i} is {v}; entries must be finite and > 0")));
        }
        Ok(DiagonalMetric { diag, partition })
    }

    pub fn identity(partition: BlockPartition) -> Self {
        DiagonalMetric { diag: vec![1.0; partition.dim()], partition }
    }

    /// `Λ_j = scalars[j] · I`.
    pub fn from_block_scalars(partition: BlockPartition, scalars: &[f64]) -> Result<Self> {
        if scalars.len() != partition.num_blocks() {
            return Err(Error::DimensionMismatch { expected: partition.num_blocks(), got: scalars.len() });
        }
        let mut diag = Vec::with_capacity(partition.dim());
        for (j, &s) in scalars.iter().enumerate() {
            diag.extend(std::iter::repeat_n(s, partition.size(j)));
        }
        DiagonalMetric::new(diag, partition)
    }

    pub fn diag(&self) -> &[f64] {
        &self.diag
    }

    pub fn partition(&self) -> &BlockPartition {
        &self.partition
    }

    pub fn block(&self, j: usize) -> &[f64] {
        &self.diag[self.partition.range(j)]
    }

    /// Same diagonal viewed through another partition of the same dimension.
    pub fn with_partition(&self, partition: BlockPartition) -> Result<Self> {
        DiagonalMetric::new(self.diag.clone(), partition)
    }

    /// Replaces block `j` with `scale · I`.
    pub fn set_block_scalar(&mut self, j: usize, scale: f64) -> Result<()> {
        if !(scale.is_finite() && scale > 0.0) {
            return Err(Error::InvalidMetric(format!("block scale {scale} must be finite and > 0")));
        }
        let range = self.partition.range(j);
        self.diag[range].fill(scale);
        Ok(())
    }

    pub fn norm_sq(&self, v: &[f64], inverted: bool) -> Result<f64> {
        self.partition.check_len(v)?;
        Ok(weighted_norm_sq(v, &self.diag, inverted))
    }

    /// `Λ^{-1/2} M Λ^{-1/2}`.
    pub fn congruence_inverse_sqrt(&self, m: &Matrix) -> Matrix {
        let s: Vec<f64> = self.diag.iter().map(|l| 1.0 / l.sqrt()).collect();
        Matrix::from_fn(m.rows(), m.cols(), |r, c| s[r] * m[(r, c)] * s[c])
    }
}

/// `Σ λ_i v_i²`, or `Σ v_i² / λ_i` when `inverted`.
#[inline]
pub fn weighted_norm_sq(v: &[f64], weights: &[f64], inverted: bool) -> f64 {
    if inverted {
        v.iter().zip(weights).map(|(x, l)| x * x / l).sum()
    } else {
        v.iter().zip(weights).map(|(x, l)| l * x * x).sum()
    }
}

/// `‖v‖²_Λ` or `‖v‖²_{Λ^{-1}}`.
pub fn metric_norm_sq(v: &[f64], metric: &DiagonalMetric, inverted: bool) -> Result<f64> {
    metric.norm_sq(v, inverted)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MaskKind {
    /// Rows and columns of blocks `0..j` set to zero (`Q̂ʲ`).
    Hat,
    /// Everything except rows and columns of blocks `0..j` set to zero (`Q̃ʲ`).
    Tilde,
}

fn kept_range(mask: MaskKind, j: usize, partition: &BlockPartition) -> Result<Range<usize>> {
    partition.check_block(j)?;
    let cut = partition.offset(j);
    Ok(match mask {
        MaskKind::Hat => cut..partition.dim(),
        MaskKind::Tilde => 0..cut,
    })
}

fn check_square(q: &Matrix, partition: &BlockPartition) -> Result<()> {
    if q.rows() != partition.dim() || q.cols() != partition.dim() {
        return Err(Error::DimensionMismatch { expected: partition.dim(), got: q.rows().max(q.cols()) });
    }
    q.check_symmetric()
}

/// `uᵀ M u` where `M` is the hat- or tilde-masked `Q` for block `j`, without
/// materializing `M`.
pub fn masked_quadratic_form(
    q: &Matrix,
    mask: MaskKind,
    j: usize,
    u: &[f64],
    partition: &BlockPartition,
) -> Result<f64> {
    check_square(q, partition)?;
    partition.check_len(u)?;
    let kept = kept_range(mask, j, partition)?;
    let mut total = 0.0;
    for r in kept.clone() {
        let row = &q.row(r)[kept.clone()];
        let inner: f64 = row.iter().zip(&u[kept.clone()]).map(|(a, b)| a * b).sum();
        total += u[r] * inner;
    }
    Ok(total)
}

/// The explicit masked matrix.
pub fn mask_materialize(q: &Matrix, mask: MaskKind, j: usize, partition: &BlockPartition) -> Result<Matrix> {
    check_square(q, partition)?;
    let kept = kept_range(mask, j, partition)?;
    Ok(Matrix::from_fn(q.rows(), q.cols(), |r, c| if kept.contains(&r) && kept.contains(&c) { q[(r, c)] } else { 0.0 }))
}
