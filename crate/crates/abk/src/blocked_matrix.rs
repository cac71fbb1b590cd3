//! The system matrix `A` partitioned into contiguous row blocks.
//!
//! A [`BlockedMatrix`] caches, per block, the spectral norm `||A_(i)||_2`
//! and the sampling weight `p_i = ||A_(i)||_2^2 / ||A||_sq^2`, where
//! `||A||_sq = (sum_i ||A_(i)||_2^2)^(1/2)` is the blockwise mixture of the
//! spectral and Frobenius norms: it equals `||A||_2` for a single block and
//! `||A||_F` when every row is its own block.

use ndarray::{s, Array1, Array2, ArrayView2};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

/// Smallest admissible block spectral norm; anything below is degenerate.
pub const DEGENERATE_NORM_CUTOFF: f64 = 1e-14;

const POWER_MAX_ITERS: usize = 1000;
const POWER_REL_TOL: f64 = 1e-10;

#[derive(Debug, Error)]
pub enum BlockError {
    #[error("block sizes must be positive and sum to {rows} rows, got sum {sum}")]
    SizeMismatch { sum: usize, rows: usize },
    #[error("block {index} has spectral norm {norm:.3e}, below the {DEGENERATE_NORM_CUTOFF:.0e} cutoff")]
    DegenerateBlock { index: usize, norm: f64 },
    #[error("block index {index} out of range for {blocks} blocks")]
    IndexOutOfRange { index: usize, blocks: usize },
}

/// Dense `m x n` matrix with a contiguous row-block partition and the
/// cached norms and sampling distribution the solver needs.
///
/// Immutable after construction; safe to share across threads.
#[derive(Debug, Clone)]
pub struct BlockedMatrix {
    data: Array2<f64>,
    /// `M + 1` strictly increasing offsets; block `i` spans rows
    /// `offsets[i]..offsets[i+1]`.
    block_offsets: Vec<usize>,
    block_spec_norms: Vec<f64>,
    square_norm: f64,
    probabilities: Vec<f64>,
    /// Prefix sums of `probabilities` for inversion sampling.
    cumulative: Vec<f64>,
}

impl BlockedMatrix {
    /// Partitions `matrix` into blocks of the given row counts and computes
    /// all cached quantities. Spectral norms come from power iteration on
    /// the per-block Gram matrix.
    pub fn partition(matrix: Array2<f64>, block_sizes: &[usize]) -> Result<Self, BlockError> {
        let m = matrix.nrows();
        let sum: usize = block_sizes.iter().sum();
        if sum != m || m == 0 || matrix.ncols() == 0 || block_sizes.contains(&0) {
            return Err(BlockError::SizeMismatch { sum, rows: m });
        }

        let mut block_offsets = Vec::with_capacity(block_sizes.len() + 1);
        block_offsets.push(0);
        for &size in block_sizes {
            block_offsets.push(block_offsets.last().unwrap() + size);
        }

        let mut block_spec_norms = Vec::with_capacity(block_sizes.len());
        for i in 0..block_sizes.len() {
            let view = matrix.slice(s![block_offsets[i]..block_offsets[i + 1], ..]);
            let norm = spectral_norm(&view, i as u64);
            if !norm.is_finite() || norm <= DEGENERATE_NORM_CUTOFF {
                return Err(BlockError::DegenerateBlock { index: i, norm });
            }
            block_spec_norms.push(norm);
        }

        let square_norm2: f64 = block_spec_norms.iter().map(|&s| s * s).sum();
        let probabilities: Vec<f64> = block_spec_norms
            .iter()
            .map(|&s| s * s / square_norm2)
            .collect();
        let mut cumulative = Vec::with_capacity(probabilities.len());
        let mut acc = 0.0;
        for &p in &probabilities {
            acc += p;
            cumulative.push(acc);
        }

        Ok(Self {
            data: matrix,
            block_offsets,
            block_spec_norms,
            square_norm: square_norm2.sqrt(),
            probabilities,
            cumulative,
        })
    }

    /// Single-block partition (the whole matrix as one block).
    pub fn single_block(matrix: Array2<f64>) -> Result<Self, BlockError> {
        let m = matrix.nrows();
        Self::partition(matrix, &[m])
    }

    pub fn nrows(&self) -> usize {
        self.data.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.data.ncols()
    }

    pub fn num_blocks(&self) -> usize {
        self.block_spec_norms.len()
    }

    pub fn data(&self) -> &Array2<f64> {
        &self.data
    }

    pub fn block_offsets(&self) -> &[usize] {
        &self.block_offsets
    }

    /// Row range of block `i`. Panics on an out-of-range index.
    pub fn block_range(&self, i: usize) -> std::ops::Range<usize> {
        self.block_offsets[i]..self.block_offsets[i + 1]
    }

    pub fn block_size(&self, i: usize) -> usize {
        self.block_offsets[i + 1] - self.block_offsets[i]
    }

    /// View of block `i`'s rows. Panics on an out-of-range index.
    pub fn block(&self, i: usize) -> ArrayView2<'_, f64> {
        self.data.slice(s![self.block_range(i), ..])
    }

    pub fn block_spec_norms(&self) -> &[f64] {
        &self.block_spec_norms
    }

    pub fn block_spec_norm(&self, i: usize) -> f64 {
        self.block_spec_norms[i]
    }

    /// `||A||_sq`, the root of the summed squared block spectral norms.
    pub fn square_norm(&self) -> f64 {
        self.square_norm
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probabilities
    }

    /// Draws a block index with probability `p_i` by inversion on the
    /// prefix-sum array.
    pub fn sample_block<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let u: f64 = rng.random();
        let idx = self.cumulative.partition_point(|&c| c <= u);
        // Rounding in the prefix sums can leave the last entry a hair
        // under 1; clamp instead of panicking on u above it.
        idx.min(self.num_blocks() - 1)
    }

    /// `A_(i) x`.
    pub fn block_apply(&self, i: usize, x: &Array1<f64>) -> Result<Array1<f64>, BlockError> {
        self.check_index(i)?;
        debug_assert_eq!(x.len(), self.ncols());
        Ok(self.block(i).dot(x))
    }

    /// `A_(i)^T r` scattered back to a full `n`-vector.
    pub fn block_apply_transpose(
        &self,
        i: usize,
        r: &Array1<f64>,
    ) -> Result<Array1<f64>, BlockError> {
        self.check_index(i)?;
        debug_assert_eq!(r.len(), self.block_size(i));
        Ok(self.block(i).t().dot(r))
    }

    /// Full matrix-vector product `A x`.
    pub fn apply(&self, x: &Array1<f64>) -> Array1<f64> {
        self.data.dot(x)
    }

    fn check_index(&self, i: usize) -> Result<(), BlockError> {
        if i >= self.num_blocks() {
            return Err(BlockError::IndexOutOfRange {
                index: i,
                blocks: self.num_blocks(),
            });
        }
        Ok(())
    }
}

/// Spectral norm of a block by power iteration on `B^T B`.
///
/// The start vector is drawn from a stream seeded with the block index, so
/// construction is deterministic. 1000 iterations cap, 1e-10 relative
/// change tolerance; blocks here are small enough that the cost is noise.
fn spectral_norm(block: &ArrayView2<'_, f64>, seed: u64) -> f64 {
    let n = block.ncols();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut v = Array1::from_shape_fn(n, |_| rng.random::<f64>() - 0.5);
    let norm_v = norm2(&v);
    if norm_v == 0.0 {
        return 0.0;
    }
    v.mapv_inplace(|t| t / norm_v);

    let mut lambda_prev = 0.0;
    for _ in 0..POWER_MAX_ITERS {
        let w = block.dot(&v);
        let z = block.t().dot(&w);
        let lambda = norm2(&z);
        if lambda == 0.0 {
            return 0.0;
        }
        v = z / lambda;
        if (lambda - lambda_prev).abs() <= POWER_REL_TOL * lambda {
            return lambda.sqrt();
        }
        lambda_prev = lambda;
    }
    lambda_prev.sqrt()
}

fn norm2(v: &Array1<f64>) -> f64 {
    v.iter().map(|&t| t * t).sum::<f64>().sqrt()
}
