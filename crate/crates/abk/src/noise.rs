//! The independent-noise measurement oracle.
//!
//! Every query of block `i` returns `b_(i)` plus a fresh zero-mean random
//! vector whose squared norm has expectation `sigma_i^2`. Queries never
//! reuse noise: conceptually each one is a new physical measurement of the
//! same block.

use crate::blocked_matrix::{BlockError, BlockedMatrix};
use ndarray::Array1;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

/// Component-level realization of the per-block noise vector.
///
/// Only the first two moments of the noise norm are prescribed by the
/// model; i.i.d. Gaussian components are the default realization. `Zero`
/// is the noiseless case (all `sigma_i = 0`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum NoiseDistribution {
    Gaussian,
    Zero,
}

/// Per-block noise levels `sigma_i` with `E||eps_(i)||^2 = sigma_i^2`,
/// plus the total level `sigma = (sum_i sigma_i^2)^(1/2)`.
///
/// Immutable; random streams are owned by the caller, one per trial.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseModel {
    sigmas: Vec<f64>,
    total_sigma: f64,
    distribution: NoiseDistribution,
}

impl NoiseModel {
    /// Gaussian model with explicit per-block levels.
    ///
    /// Panics on negative entries; a noise level is a model parameter.
    pub fn gaussian(sigmas: Vec<f64>) -> Self {
        assert!(sigmas.iter().all(|&s| s.is_finite() && s >= 0.0));
        let total_sigma = sigmas.iter().map(|&s| s * s).sum::<f64>().sqrt();
        if total_sigma == 0.0 {
            return Self::zero(sigmas.len());
        }
        Self {
            sigmas,
            total_sigma,
            distribution: NoiseDistribution::Gaussian,
        }
    }

    /// Noiseless model over `blocks` blocks.
    pub fn zero(blocks: usize) -> Self {
        Self {
            sigmas: vec![0.0; blocks],
            total_sigma: 0.0,
            distribution: NoiseDistribution::Zero,
        }
    }

    /// Splits a total level uniformly: `sigma_i = sigma / sqrt(M)`.
    pub fn uniform_split(sigma_total: f64, blocks: usize) -> Self {
        assert!(blocks >= 1, "need at least one block");
        assert!(sigma_total.is_finite() && sigma_total >= 0.0);
        if sigma_total == 0.0 {
            return Self::zero(blocks);
        }
        let per = sigma_total / (blocks as f64).sqrt();
        Self {
            sigmas: vec![per; blocks],
            total_sigma: sigma_total,
            distribution: NoiseDistribution::Gaussian,
        }
    }

    pub fn sigmas(&self) -> &[f64] {
        &self.sigmas
    }

    pub fn sigma(&self, i: usize) -> f64 {
        self.sigmas[i]
    }

    pub fn total_sigma(&self) -> f64 {
        self.total_sigma
    }

    pub fn distribution(&self) -> NoiseDistribution {
        self.distribution
    }

    pub fn num_blocks(&self) -> usize {
        self.sigmas.len()
    }

    pub fn is_zero(&self) -> bool {
        self.distribution == NoiseDistribution::Zero
    }

    /// One fresh noisy measurement of block `i`: `b_(i) + eps` with
    /// `eps_j ~ N(0, sigma_i^2 / m_i)`, so that `E||eps||^2 = sigma_i^2`.
    ///
    /// The `Zero` distribution returns `b_(i)` without touching the stream.
    pub fn query_block<R: Rng + ?Sized>(
        &self,
        b: &Array1<f64>,
        blocks: &BlockedMatrix,
        i: usize,
        rng: &mut R,
    ) -> Result<Array1<f64>, BlockError> {
        if i >= self.sigmas.len() || i >= blocks.num_blocks() {
            return Err(BlockError::IndexOutOfRange {
                index: i,
                blocks: self.sigmas.len().min(blocks.num_blocks()),
            });
        }
        let range = blocks.block_range(i);
        let clean = b.slice(ndarray::s![range]);
        match self.distribution {
            NoiseDistribution::Zero => Ok(clean.to_owned()),
            NoiseDistribution::Gaussian => {
                let m_i = clean.len();
                let comp_sigma = self.sigmas[i] / (m_i as f64).sqrt();
                let mut out = clean.to_owned();
                for v in out.iter_mut() {
                    let e: f64 = rng.sample(StandardNormal);
                    *v += comp_sigma * e;
                }
                Ok(out)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::blocked_matrix::BlockedMatrix;
    use approx::assert_relative_eq;
    use ndarray::{Array1, Array2};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn identity_blocks(m: usize, sizes: &[usize]) -> BlockedMatrix {
        BlockedMatrix::partition(Array2::eye(m), sizes).unwrap()
    }

    #[test]
    fn uniform_split_examples() {
        let nm = NoiseModel::uniform_split(0.0, 5);
        assert!(nm.is_zero());
        assert_eq!(nm.total_sigma(), 0.0);

        let nm = NoiseModel::uniform_split(0.05, 200);
        assert_relative_eq!(nm.sigma(0), 0.05 / 200f64.sqrt(), max_relative = 1e-12);
        assert_relative_eq!(nm.sigma(0), 3.5355e-3, max_relative = 1e-3);
        assert_relative_eq!(nm.total_sigma(), 0.05);
        let sum_sq: f64 = nm.sigmas().iter().map(|&s| s * s).sum();
        assert_relative_eq!(sum_sq, 0.05 * 0.05, max_relative = 1e-12);

        let nm = NoiseModel::uniform_split(1.0, 1);
        assert_eq!(nm.sigma(0), 1.0);
    }

    #[test]
    fn zero_distribution_returns_clean_block() {
        let blocks = identity_blocks(4, &[2, 2]);
        let b = Array1::from_vec(vec![1.0, 2.0, 3.0, 4.0]);
        let nm = NoiseModel::zero(2);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let q = nm.query_block(&b, &blocks, 1, &mut rng).unwrap();
        assert_eq!(q, Array1::from_vec(vec![3.0, 4.0]));
    }

    #[test]
    fn out_of_range_block_is_an_error() {
        let blocks = identity_blocks(2, &[1, 1]);
        let b = Array1::zeros(2);
        let nm = NoiseModel::zero(2);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(nm.query_block(&b, &blocks, 2, &mut rng).is_err());
    }

    #[test]
    fn noise_norm_second_moment_matches_sigma() {
        // sigma_i = 1, m_i = 50: the sample mean of ||eps||^2 over 1e4
        // queries concentrates in [0.94, 1.06].
        let m_i = 50;
        let blocks = identity_blocks(m_i, &[m_i]);
        let b = Array1::zeros(m_i);
        let nm = NoiseModel::gaussian(vec![1.0]);
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let n_q = 10_000;
        let mut acc = 0.0;
        for _ in 0..n_q {
            let q = nm.query_block(&b, &blocks, 0, &mut rng).unwrap();
            acc += q.iter().map(|&t| t * t).sum::<f64>();
        }
        let mean = acc / n_q as f64;
        assert!((0.94..=1.06).contains(&mean), "mean ||eps||^2 = {mean}");
    }

    #[test]
    fn noise_components_have_zero_mean() {
        let m_i = 8;
        let blocks = identity_blocks(m_i, &[m_i]);
        let b = Array1::zeros(m_i);
        let nm = NoiseModel::gaussian(vec![1.0]);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let n_q = 10_000usize;
        let mut sums = vec![0.0; m_i];
        for _ in 0..n_q {
            let q = nm.query_block(&b, &blocks, 0, &mut rng).unwrap();
            for (s, &v) in sums.iter_mut().zip(q.iter()) {
                *s += v;
            }
        }
        // Component std is sigma/sqrt(m_i); mean of n_q draws shrinks by
        // another sqrt(n_q). 4-sigma band.
        let bound = 4.0 / ((m_i as f64).sqrt() * (n_q as f64).sqrt());
        for (j, s) in sums.iter().enumerate() {
            let mean = s / n_q as f64;
            assert!(mean.abs() <= bound, "component {j} mean {mean}");
        }
    }

    #[test]
    fn successive_draws_are_uncorrelated() {
        let blocks = identity_blocks(1, &[1]);
        let b = Array1::zeros(1);
        let nm = NoiseModel::gaussian(vec![1.0]);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n = 10_000usize;
        let draws: Vec<f64> = (0..=n)
            .map(|_| nm.query_block(&b, &blocks, 0, &mut rng).unwrap()[0])
            .collect();
        let mean = draws.iter().sum::<f64>() / draws.len() as f64;
        let var = draws.iter().map(|&d| (d - mean) * (d - mean)).sum::<f64>() / n as f64;
        let cov = (0..n)
            .map(|k| (draws[k] - mean) * (draws[k + 1] - mean))
            .sum::<f64>()
            / n as f64;
        let corr = cov / var;
        assert!(corr.abs() < 0.05, "lag-1 correlation {corr}");
    }

    #[test]
    fn same_seed_replays_the_noise_sequence() {
        let blocks = identity_blocks(3, &[3]);
        let b = Array1::from_vec(vec![1.0, -1.0, 0.5]);
        let nm = NoiseModel::gaussian(vec![0.3]);
        let mut a = ChaCha8Rng::seed_from_u64(99);
        let mut c = ChaCha8Rng::seed_from_u64(99);
        for _ in 0..20 {
            let qa = nm.query_block(&b, &blocks, 0, &mut a).unwrap();
            let qc = nm.query_block(&b, &blocks, 0, &mut c).unwrap();
            assert_eq!(qa, qc);
        }
    }
}
