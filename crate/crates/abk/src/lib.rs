//! Block Bregman-Kaczmarz solvers with adaptive stepsizes.
//!
//! This crate solves consistent linear systems `Ax = b` for the minimum-f
//! solution of `f(x) = lambda*||x||_1 + 0.5*||x||_2^2` when the right-hand
//! side is only available through noisy block queries: every time block `i`
//! of `b` is requested, a fresh zero-mean perturbation is added. Under this
//! *independent noise* model a constant stepsize stalls at a noise floor,
//! while the adaptive schedule implemented here keeps converging to the
//! noise-free solution.
//!
//! The pieces:
//!
//! * [`blocked_matrix`] — the system matrix with a row-block partition,
//!   per-block spectral norms and the induced sampling distribution.
//! * [`objective`] — the sparsity objective, soft shrinkage and Bregman
//!   distances.
//! * [`noise`] — the per-block measurement oracle.
//! * [`stepsize`] — constant and adaptive stepsize schedules.
//! * [`bounds`] — closed-form convergence envelopes (Lambert-W based).
//! * [`solver`] — the iteration loop and per-run trace records.
//! * [`heuristics`] — hyperparameter estimation from a pilot run.
//! * [`problems`] — synthetic Gaussian and tomography test problems.
//! * [`harness`] — experiment orchestration and CSV output for the CLI.
//!
//! A quick end-to-end run:
//!
//! ```
//! use abk::problems::{gaussian_problem, NoiseSpec};
//! use abk::objective::SparseObjective;
//! use abk::solver::{run, RunConfig};
//! use abk::stepsize::StepsizeSchedule;
//!
//! let p = gaussian_problem(120, 30, 4, 12, NoiseSpec::Absolute(0.0), 7).unwrap();
//! let obj = SparseObjective::new(0.05);
//! let schedule = StepsizeSchedule::constant(1.0).unwrap();
//! let cfg = RunConfig {
//!     max_iters: 600,
//!     record_stride: 12,
//!     reference: Some(p.xhat.clone()),
//! };
//! let record = run(&p.matrix, &p.b_clean, &p.noise, schedule, &obj, &cfg, 1).unwrap();
//! assert!(record.samples.last().unwrap().rel_residual < 1e-6);
//! ```

pub mod blocked_matrix;
pub mod bounds;
pub mod harness;
pub mod heuristics;
pub mod io;
pub mod noise;
pub mod objective;
pub mod problems;
pub mod solver;
pub mod stepsize;

pub mod guide;

pub use blocked_matrix::{BlockError, BlockedMatrix};
pub use bounds::{BoundParams, BoundsError};
pub use noise::{NoiseDistribution, NoiseModel};
pub use objective::SparseObjective;
pub use solver::{RunConfig, RunRecord, SolverState, StepInfo};
pub use stepsize::{ScheduleError, StepsizeSchedule};

/// Derives a decorrelated stream seed from `seed` and a salt.
///
/// Used wherever one logical seed has to feed several independent random
/// streams (a pilot run and the adaptive run that follows it, for example).
/// SplitMix64 finalizer; deterministic across platforms.
pub fn derive_seed(seed: u64, salt: u64) -> u64 {
    let mut z = seed ^ salt.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}
