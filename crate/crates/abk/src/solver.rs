//! The block Bregman-Kaczmarz iteration.
//!
//! Each step samples a block `i` with probability `p_i`, makes a fresh
//! noisy query of `b_(i)`, and updates the dual/primal pair
//!
//! ```text
//! x*_{k+1} = x*_k - eta_k * A_(i)^T (A_(i) x_k - b~_(i)) / ||A_(i)||_2^2
//! x_{k+1}  = S_lambda(x*_{k+1})
//! ```
//!
//! The stepsize comes from a [`StepsizeSchedule`], which is advanced exactly
//! once per step so the `(eta_k, beta_k)` coupling cannot drift. A run is
//! strictly sequential; concurrency lives one level up (independent trials
//! with independent streams).

use crate::blocked_matrix::{BlockError, BlockedMatrix};
use crate::noise::NoiseModel;
use crate::objective::SparseObjective;
use crate::stepsize::{ScheduleError, StepsizeSchedule};
use ndarray::{s, Array1};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::time::{Duration, Instant};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SolveError {
    #[error(transparent)]
    Block(#[from] BlockError),
    #[error(transparent)]
    Schedule(#[from] ScheduleError),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("a run needs max_iters >= 1")]
    NoIterations,
}

/// The primal/dual iterate pair. `x` is always `S_lambda(x*)`.
#[derive(Debug, Clone)]
pub struct SolverState {
    pub xstar: Array1<f64>,
    pub x: Array1<f64>,
    pub k: usize,
}

impl SolverState {
    /// Starts from a dual point: `x_0 = S_lambda(x*_0)`, `k = 0`.
    pub fn init(xstar0: Array1<f64>, objective: &SparseObjective) -> Self {
        let x = objective.soft_shrinkage(&xstar0);
        Self {
            xstar: xstar0,
            x,
            k: 0,
        }
    }

    /// The usual zero start.
    pub fn zeros(n: usize) -> Self {
        Self {
            xstar: Array1::zeros(n),
            x: Array1::zeros(n),
            k: 0,
        }
    }
}

/// What one step consumed, for instrumentation and the pathwise descent
/// check: the sampled block, the stepsize, the `beta_k` it was derived
/// from, and the realized noise draw.
#[derive(Debug, Clone)]
pub struct StepInfo {
    pub block: usize,
    pub eta: f64,
    pub beta: Option<f64>,
    pub noise: Array1<f64>,
}

/// One iteration of the method. Mutates `state` in place and returns the
/// consumed randomness/stepsize.
pub fn step<R: Rng + ?Sized>(
    state: &mut SolverState,
    mat: &BlockedMatrix,
    b: &Array1<f64>,
    noise: &NoiseModel,
    schedule: &mut StepsizeSchedule,
    objective: &SparseObjective,
    rng: &mut R,
) -> Result<StepInfo, SolveError> {
    let i = mat.sample_block(rng);
    let noisy = noise.query_block(b, mat, i, rng)?;
    let clean = b.slice(s![mat.block_range(i)]);
    let eps = &noisy - &clean;

    let beta = schedule.beta();
    let eta = schedule.advance()?;

    // r = A_(i) x_k - b~_(i)
    let mut r = mat.block(i).dot(&state.x);
    r -= &noisy;

    let norm2 = mat.block_spec_norm(i).powi(2);
    let grad = mat.block(i).t().dot(&r);
    let scale = eta / norm2;
    for (xs, &g) in state.xstar.iter_mut().zip(grad.iter()) {
        *xs -= scale * g;
    }
    objective.soft_shrinkage_into(&state.xstar, &mut state.x);
    state.k += 1;

    Ok(StepInfo {
        block: i,
        eta,
        beta,
        noise: eps,
    })
}

/// Pathwise descent test: verifies the one-step inequality
///
/// ```text
/// D_{k+1} <= D_k - eta*(2-eta)/2 * ||A_(i)x_k - b_(i)||^2 / ||A_(i)||^2
///               + eta^2/2        * ||eps||^2              / ||A_(i)||^2
///               + eta*(1-eta)    * <eps, A_(i)x_k - b_(i)> / ||A_(i)||^2
/// ```
///
/// where `D` is the Bregman distance to `xhat` and `eps` the realized noise
/// of the step, within `1e-8` absolute slack. The linear noise term
/// vanishes for full steps (`eta = 1`); with zero noise the inequality is
/// plain monotone descent.
pub fn descent_check(
    objective: &SparseObjective,
    mat: &BlockedMatrix,
    b: &Array1<f64>,
    xhat: &Array1<f64>,
    before: &SolverState,
    after: &SolverState,
    info: &StepInfo,
) -> bool {
    let d_before = objective.bregman_distance(&before.xstar, xhat);
    let d_after = objective.bregman_distance(&after.xstar, xhat);

    let clean = b.slice(s![mat.block_range(info.block)]);
    let mut r_clean = mat.block(info.block).dot(&before.x);
    r_clean -= &clean;

    let a2 = mat.block_spec_norm(info.block).powi(2);
    let r2: f64 = r_clean.iter().map(|&t| t * t).sum();
    let e2: f64 = info.noise.iter().map(|&t| t * t).sum();
    let cross: f64 = info
        .noise
        .iter()
        .zip(r_clean.iter())
        .map(|(&e, &r)| e * r)
        .sum();

    let eta = info.eta;
    let rhs = d_before - 0.5 * eta * (2.0 - eta) * r2 / a2
        + 0.5 * eta * eta * e2 / a2
        + eta * (1.0 - eta) * cross / a2;
    d_after <= rhs + 1e-8
}

/// Run configuration: iteration budget, trace stride and the optional
/// reference solution for error metrics.
#[derive(Debug, Clone, Default)]
pub struct RunConfig {
    pub max_iters: usize,
    /// Record a sample every this many iterations; `0` means one record
    /// per expected pass over the matrix (`M` iterations).
    pub record_stride: usize,
    /// Ground truth for relative-error and Bregman-distance columns.
    pub reference: Option<Array1<f64>>,
}

/// One point of the per-run trace.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceSample {
    pub k: usize,
    /// The stepsize the next iteration will use (`eta_k`).
    pub eta: f64,
    /// Current `beta_k` for adaptive schedules.
    pub beta: Option<f64>,
    /// `||A x_k - b|| / ||b||` against the right-hand side given to the run.
    pub rel_residual: f64,
    /// `||x_k - xhat|| / ||xhat||`, when a reference is known.
    pub rel_error: Option<f64>,
    /// `D_f^{x*_k}(x_k, xhat)`, when a reference is known.
    pub bregman: Option<f64>,
}

/// Everything a run produced: the subsampled trace, the final iterate and
/// timing.
#[derive(Debug, Clone)]
pub struct RunRecord {
    pub samples: Vec<TraceSample>,
    pub final_x: Array1<f64>,
    pub iterations: usize,
    pub wall_time: Duration,
}

impl RunRecord {
    pub fn final_sample(&self) -> &TraceSample {
        self.samples.last().expect("a run records at least one sample")
    }
}

/// Runs the method for a fixed iteration budget from the zero start,
/// recording metrics at `k = 0`, every stride, and at the final iterate.
///
/// The budget is the only stopping criterion: the residual is noisy, so
/// residual-based stops would react to noise, not progress. Identical
/// seeds give bit-identical records.
pub fn run(
    mat: &BlockedMatrix,
    b: &Array1<f64>,
    noise: &NoiseModel,
    schedule: StepsizeSchedule,
    objective: &SparseObjective,
    cfg: &RunConfig,
    seed: u64,
) -> Result<RunRecord, SolveError> {
    run_from(
        SolverState::zeros(mat.ncols()),
        mat,
        b,
        noise,
        schedule,
        objective,
        cfg,
        seed,
    )
}

/// [`run`] from an explicit starting state.
#[allow(clippy::too_many_arguments)]
pub fn run_from(
    mut state: SolverState,
    mat: &BlockedMatrix,
    b: &Array1<f64>,
    noise: &NoiseModel,
    mut schedule: StepsizeSchedule,
    objective: &SparseObjective,
    cfg: &RunConfig,
    seed: u64,
) -> Result<RunRecord, SolveError> {
    if cfg.max_iters == 0 {
        return Err(SolveError::NoIterations);
    }
    check_dims(mat, b, noise, cfg)?;
    let stride = if cfg.record_stride == 0 {
        mat.num_blocks()
    } else {
        cfg.record_stride
    };

    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let b_norm = norm2(b);
    let ref_norm = cfg.reference.as_ref().map(norm2);

    let mut samples = Vec::with_capacity(cfg.max_iters / stride + 2);
    samples.push(measure(&state, mat, b, b_norm, &schedule, objective, cfg, ref_norm));

    for k in 1..=cfg.max_iters {
        step(&mut state, mat, b, noise, &mut schedule, objective, &mut rng)?;
        if k % stride == 0 || k == cfg.max_iters {
            samples.push(measure(
                &state, mat, b, b_norm, &schedule, objective, cfg, ref_norm,
            ));
        }
    }

    Ok(RunRecord {
        samples,
        final_x: state.x,
        iterations: cfg.max_iters,
        wall_time: start.elapsed(),
    })
}

fn check_dims(
    mat: &BlockedMatrix,
    b: &Array1<f64>,
    noise: &NoiseModel,
    cfg: &RunConfig,
) -> Result<(), SolveError> {
    if b.len() != mat.nrows() {
        return Err(SolveError::DimensionMismatch(format!(
            "rhs has {} entries, matrix has {} rows",
            b.len(),
            mat.nrows()
        )));
    }
    if noise.num_blocks() != mat.num_blocks() {
        return Err(SolveError::DimensionMismatch(format!(
            "noise model covers {} blocks, matrix has {}",
            noise.num_blocks(),
            mat.num_blocks()
        )));
    }
    if let Some(r) = &cfg.reference {
        if r.len() != mat.ncols() {
            return Err(SolveError::DimensionMismatch(format!(
                "reference has {} entries, matrix has {} columns",
                r.len(),
                mat.ncols()
            )));
        }
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn measure(
    state: &SolverState,
    mat: &BlockedMatrix,
    b: &Array1<f64>,
    b_norm: f64,
    schedule: &StepsizeSchedule,
    objective: &SparseObjective,
    cfg: &RunConfig,
    ref_norm: Option<f64>,
) -> TraceSample {
    let mut residual = mat.apply(&state.x);
    residual -= b;
    let res = norm2(&residual);
    let rel_residual = if b_norm > 0.0 { res / b_norm } else { res };

    let (rel_error, bregman) = match (&cfg.reference, ref_norm) {
        (Some(xhat), Some(xn)) => {
            let mut diff = state.x.clone();
            diff -= xhat;
            let err = norm2(&diff);
            let rel = if xn > 0.0 { err / xn } else { err };
            (Some(rel), Some(objective.bregman_distance(&state.xstar, xhat)))
        }
        _ => (None, None),
    };

    TraceSample {
        k: state.k,
        eta: schedule.next_eta(),
        beta: schedule.beta(),
        rel_residual,
        rel_error,
        bregman,
    }
}

fn norm2(v: &Array1<f64>) -> f64 {
    v.iter().map(|&t| t * t).sum::<f64>().sqrt()
}
