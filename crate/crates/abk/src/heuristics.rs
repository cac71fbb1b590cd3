//! Hyperparameter estimation for the adaptive schedule.
//!
//! One extra run of the full-step method (`eta = 1`) is enough to estimate
//! both schedule parameters from data alone. With `D_j` the Bregman
//! distance from iterate `j` to the pilot's final iterate:
//!
//! * the rate constant, from the early linear-decay regime:
//!   `gamma~ = 2 * (1 - mean_{j<=N0} D_j / D_{j-1})`;
//! * the initial signal-to-noise ratio, from the stagnation regime:
//!   `beta0~ = [ (gamma~/N1) * sum_{j=N-N1}^{N-1} D_j / D_0 ]^{-1}`.
//!
//! Both are pure functions of the recorded trace: no hidden randomness, no
//! access to the ground truth.

use crate::blocked_matrix::BlockedMatrix;
use crate::noise::NoiseModel;
use crate::objective::SparseObjective;
use crate::solver::{step, SolveError, SolverState};
use crate::stepsize::StepsizeSchedule;
use ndarray::Array1;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum TraceError {
    #[error("degenerate pilot trace: {0}")]
    DegenerateTrace(String),
    #[error("{param} = {value} is out of range for a trace of {len} entries")]
    InvalidWindow {
        param: &'static str,
        value: usize,
        len: usize,
    },
    #[error("trace csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("trace csv: {0}")]
    Io(#[from] std::io::Error),
    #[error("trace csv: {0}")]
    Malformed(String),
}

/// Bregman distances from each pilot iterate to the pilot's final iterate.
///
/// Entry `r` holds `D_f^{x*_j}(x_j, x_N)` for `j = iteration_index[r]`;
/// with a thinning stride of 1 that is simply `j = r` for `j = 0..N-1`.
/// The estimation windows `N0`/`N1` are interpreted on this (possibly
/// thinned) grid.
#[derive(Debug, Clone, PartialEq)]
pub struct PilotTrace {
    pub iteration_index: Vec<usize>,
    pub bregman_to_final: Vec<f64>,
    /// Total pilot iterations `N` (the final iterate's index).
    pub pilot_iters: usize,
}

impl PilotTrace {
    pub fn len(&self) -> usize {
        self.bregman_to_final.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bregman_to_final.is_empty()
    }
}

/// Result of the rate estimate, with its clamping diagnostics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GammaEstimate {
    pub value: f64,
    /// The raw estimate fell outside `(1e-8, 2 - 1e-8)` and was clamped.
    pub clamped: bool,
    pub used_ratios: usize,
    pub skipped_ratios: usize,
}

/// Runs the `eta = 1` method for `iters` steps and returns the Bregman
/// distances of every (stride-thinned) iterate to the final one.
///
/// The final iterate only exists after the run, so the pilot keeps the
/// thinned dual iterates in memory and computes distances in a second
/// pass; streaming against a moving reference would change the estimator.
pub fn collect_pilot(
    mat: &BlockedMatrix,
    b: &Array1<f64>,
    noise: &NoiseModel,
    objective: &SparseObjective,
    iters: usize,
    thin_stride: usize,
    seed: u64,
) -> Result<PilotTrace, SolveError> {
    assert!(iters >= 2, "a pilot needs at least 2 iterations");
    let stride = thin_stride.max(1);
    let mut schedule = StepsizeSchedule::constant(1.0).expect("1.0 is a valid stepsize");
    let mut state = SolverState::zeros(mat.ncols());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mut duals: Vec<(usize, Array1<f64>)> = Vec::with_capacity(iters / stride + 1);
    for k in 0..iters {
        if k % stride == 0 {
            duals.push((k, state.xstar.clone()));
        }
        step(&mut state, mat, b, noise, &mut schedule, objective, &mut rng)?;
    }
    let x_final = state.x;

    let mut iteration_index = Vec::with_capacity(duals.len());
    let mut bregman_to_final = Vec::with_capacity(duals.len());
    for (j, xstar) in duals {
        iteration_index.push(j);
        bregman_to_final.push(objective.bregman_distance(&xstar, &x_final));
    }
    Ok(PilotTrace {
        iteration_index,
        bregman_to_final,
        pilot_iters: iters,
    })
}

/// Estimates the rate constant from the first `n0` distance ratios.
///
/// Ratios with a nonpositive denominator are skipped (they can appear in a
/// noiseless tail where the distance hits zero); the mean runs over the
/// valid ones. The estimate is clamped into `(1e-8, 2 - 1e-8)` with the
/// clamp flagged, since the schedule cannot accept values outside it.
pub fn estimate_gamma(trace: &PilotTrace, n0: usize) -> Result<GammaEstimate, TraceError> {
    let len = trace.len();
    if n0 < 1 || n0 >= len {
        return Err(TraceError::InvalidWindow {
            param: "n0",
            value: n0,
            len,
        });
    }
    let d = &trace.bregman_to_final;
    let mut sum = 0.0;
    let mut used = 0usize;
    let mut skipped = 0usize;
    for j in 1..=n0 {
        if d[j - 1] > 0.0 {
            sum += d[j] / d[j - 1];
            used += 1;
        } else {
            skipped += 1;
        }
    }
    if skipped > 0 {
        log::warn!("gamma estimate skipped {skipped} ratios with zero denominator");
    }
    if used * 2 < n0 || used == 0 {
        return Err(TraceError::DegenerateTrace(format!(
            "only {used} of {n0} ratios had positive denominators"
        )));
    }
    let raw = 2.0 * (1.0 - sum / used as f64);
    let (lo, hi) = (1e-8, 2.0 - 1e-8);
    let value = raw.clamp(lo, hi);
    let clamped = value != raw;
    if clamped {
        log::warn!("gamma estimate {raw:.3e} outside (0, 2); clamped to {value:.3e}");
    }
    Ok(GammaEstimate {
        value,
        clamped,
        used_ratios: used,
        skipped_ratios: skipped,
    })
}

/// Estimates the initial ratio `beta0` from the last `n1` trace entries,
/// given a rate estimate.
pub fn estimate_beta0(trace: &PilotTrace, gamma: f64, n1: usize) -> Result<f64, TraceError> {
    let len = trace.len();
    if n1 < 1 || n1 >= len {
        return Err(TraceError::InvalidWindow {
            param: "n1",
            value: n1,
            len,
        });
    }
    if gamma.is_nan() || gamma <= 0.0 {
        return Err(TraceError::DegenerateTrace(format!(
            "beta0 estimate needs a positive gamma, got {gamma}"
        )));
    }
    let d = &trace.bregman_to_final;
    let d0 = d[0];
    if d0.is_nan() || d0 <= 0.0 {
        return Err(TraceError::DegenerateTrace(
            "initial Bregman distance is zero".into(),
        ));
    }
    let tail_mean: f64 = d[len - n1..].iter().sum::<f64>() / n1 as f64;
    if tail_mean.is_nan() || tail_mean <= 0.0 {
        return Err(TraceError::DegenerateTrace(
            "tail distances average to zero".into(),
        ));
    }
    Ok(d0 / (gamma * tail_mean))
}

/// Writes a trace as CSV with columns `j,bregman_to_final`.
pub fn write_trace_csv<P: AsRef<Path>>(path: P, trace: &PilotTrace) -> Result<(), TraceError> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["j", "bregman_to_final"])?;
    for (j, d) in trace.iteration_index.iter().zip(&trace.bregman_to_final) {
        w.write_record([j.to_string(), format!("{d}")])?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a trace written by [`write_trace_csv`] (or any CSV with the same
/// two columns). The pilot length is taken as `last j + stride`.
pub fn read_trace_csv<P: AsRef<Path>>(path: P) -> Result<PilotTrace, TraceError> {
    let mut r = csv::Reader::from_path(path)?;
    let mut iteration_index = Vec::new();
    let mut bregman_to_final = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        if rec.len() < 2 {
            return Err(TraceError::Malformed("expected two columns".into()));
        }
        let j: usize = rec[0]
            .trim()
            .parse()
            .map_err(|e| TraceError::Malformed(format!("bad index {:?}: {e}", &rec[0])))?;
        let d: f64 = rec[1]
            .trim()
            .parse()
            .map_err(|e| TraceError::Malformed(format!("bad value {:?}: {e}", &rec[1])))?;
        if let Some(&prev) = iteration_index.last() {
            if j <= prev {
                return Err(TraceError::Malformed(format!(
                    "iteration indices must increase, got {prev} then {j}"
                )));
            }
        }
        iteration_index.push(j);
        bregman_to_final.push(d);
    }
    if iteration_index.len() < 2 {
        return Err(TraceError::Malformed(
            "a trace needs at least two entries".into(),
        ));
    }
    let stride = iteration_index[1] - iteration_index[0];
    let pilot_iters = iteration_index.last().unwrap() + stride.max(1);
    Ok(PilotTrace {
        iteration_index,
        bregman_to_final,
        pilot_iters,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::{gaussian_problem, NoiseSpec};
    use approx::assert_relative_eq;

    fn geometric_trace(gamma: f64, d0: f64, n: usize) -> PilotTrace {
        let rate = 1.0 - gamma / 2.0;
        let d: Vec<f64> = (0..n).map(|j| d0 * rate.powi(j as i32)).collect();
        PilotTrace {
            iteration_index: (0..n).collect(),
            bregman_to_final: d,
            pilot_iters: n,
        }
    }

    #[test]
    fn gamma_exact_on_geometric_trace() {
        let trace = geometric_trace(0.1, 3.0, 200);
        let est = estimate_gamma(&trace, 100).unwrap();
        assert_relative_eq!(est.value, 0.1, max_relative = 1e-10);
        assert!(!est.clamped);
        assert_eq!(est.used_ratios, 100);
    }

    #[test]
    fn gamma_clamped_on_constant_trace() {
        let trace = PilotTrace {
            iteration_index: (0..50).collect(),
            bregman_to_final: vec![2.0; 50],
            pilot_iters: 50,
        };
        let est = estimate_gamma(&trace, 20).unwrap();
        assert_eq!(est.value, 1e-8);
        assert!(est.clamped);
    }

    #[test]
    fn gamma_window_validation() {
        let trace = geometric_trace(0.2, 1.0, 10);
        assert!(matches!(
            estimate_gamma(&trace, 0),
            Err(TraceError::InvalidWindow { .. })
        ));
        assert!(matches!(
            estimate_gamma(&trace, 10),
            Err(TraceError::InvalidWindow { .. })
        ));
    }

    #[test]
    fn gamma_degenerate_when_most_denominators_vanish() {
        let mut d = vec![0.0; 30];
        d[0] = 1.0;
        let trace = PilotTrace {
            iteration_index: (0..30).collect(),
            bregman_to_final: d,
            pilot_iters: 30,
        };
        assert!(matches!(
            estimate_gamma(&trace, 20),
            Err(TraceError::DegenerateTrace(_))
        ));
    }

    #[test]
    fn beta0_direct_substitution() {
        // D0 = 100, constant tail 0.01, gamma 0.1, n1 = 10 -> 1e5.
        let mut d = vec![100.0];
        d.extend(std::iter::repeat_n(0.01, 30));
        let trace = PilotTrace {
            iteration_index: (0..d.len()).collect(),
            bregman_to_final: d,
            pilot_iters: 31,
        };
        let b = estimate_beta0(&trace, 0.1, 10).unwrap();
        assert_relative_eq!(b, 1e5, max_relative = 1e-12);
    }

    #[test]
    fn beta0_flat_trace_gives_inverse_gamma() {
        let trace = PilotTrace {
            iteration_index: (0..40).collect(),
            bregman_to_final: vec![7.0; 40],
            pilot_iters: 40,
        };
        let b = estimate_beta0(&trace, 0.25, 10).unwrap();
        assert_relative_eq!(b, 4.0, max_relative = 1e-12);
    }

    #[test]
    fn recovery_on_decay_plus_plateau() {
        let gamma = 0.08f64;
        let d0 = 50.0;
        let plateau = 1e-4;
        let rate: f64 = 1.0 - gamma / 2.0;
        let d: Vec<f64> = (0..2000)
            .map(|j| (d0 * rate.powi(j)).max(plateau))
            .collect();
        let trace = PilotTrace {
            iteration_index: (0..2000).collect(),
            bregman_to_final: d,
            pilot_iters: 2000,
        };
        // Decay lasts until d0*rate^j = plateau, around j = 320.
        let est = estimate_gamma(&trace, 300).unwrap();
        assert_relative_eq!(est.value, gamma, max_relative = 1e-10);
        let b = estimate_beta0(&trace, est.value, 100).unwrap();
        assert_relative_eq!(b, d0 / (est.value * plateau), max_relative = 1e-10);
    }

    #[test]
    fn beta0_degenerate_cases() {
        let trace = PilotTrace {
            iteration_index: (0..10).collect(),
            bregman_to_final: vec![0.0; 10],
            pilot_iters: 10,
        };
        assert!(matches!(
            estimate_beta0(&trace, 0.1, 5),
            Err(TraceError::DegenerateTrace(_))
        ));
        let mut d = vec![1.0];
        d.extend(vec![0.0; 9]);
        let trace = PilotTrace {
            iteration_index: (0..10).collect(),
            bregman_to_final: d,
            pilot_iters: 10,
        };
        assert!(matches!(
            estimate_beta0(&trace, 0.1, 5),
            Err(TraceError::DegenerateTrace(_))
        ));
    }

    #[test]
    fn pilot_on_noiseless_problem_decays() {
        let p = gaussian_problem(60, 12, 3, 6, NoiseSpec::Absolute(0.0), 5).unwrap();
        let obj = SparseObjective::new(0.05);
        let trace =
            collect_pilot(&p.matrix, &p.b_clean, &p.noise, &obj, 600, 1, 9).unwrap();
        assert_eq!(trace.len(), 600);
        assert!(trace.bregman_to_final[0] > 0.0);
        let tail = trace.bregman_to_final[599];
        assert!(
            tail < 1e-8 * trace.bregman_to_final[0],
            "tail {tail} did not decay"
        );
    }

    #[test]
    fn pilot_with_noise_plateaus_above_zero() {
        let p = gaussian_problem(60, 12, 3, 6, NoiseSpec::Absolute(0.1), 5).unwrap();
        let obj = SparseObjective::new(0.05);
        let trace =
            collect_pilot(&p.matrix, &p.b_clean, &p.noise, &obj, 800, 1, 9).unwrap();
        // Mean over a late window stays positive and well above the
        // noiseless tail.
        let late: f64 =
            trace.bregman_to_final[600..700].iter().sum::<f64>() / 100.0;
        assert!(late > 1e-10, "late mean {late}");
    }

    #[test]
    fn pilot_minimum_length() {
        let p = gaussian_problem(20, 5, 2, 4, NoiseSpec::Absolute(0.01), 1).unwrap();
        let obj = SparseObjective::new(0.0);
        let trace = collect_pilot(&p.matrix, &p.b_clean, &p.noise, &obj, 2, 1, 3).unwrap();
        assert_eq!(trace.len(), 2);
        assert!(trace.bregman_to_final.iter().all(|d| d.is_finite()));
    }

    #[test]
    fn thinned_pilot_keeps_every_strideth_iterate() {
        let p = gaussian_problem(40, 8, 2, 4, NoiseSpec::Absolute(0.05), 2).unwrap();
        let obj = SparseObjective::new(0.02);
        let trace = collect_pilot(&p.matrix, &p.b_clean, &p.noise, &obj, 100, 10, 3).unwrap();
        assert_eq!(trace.iteration_index, (0..10).map(|r| r * 10).collect::<Vec<_>>());
        assert_eq!(trace.pilot_iters, 100);
    }

    #[test]
    fn csv_round_trip() {
        let trace = geometric_trace(0.3, 2.0, 25);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("trace.csv");
        write_trace_csv(&path, &trace).unwrap();
        let back = read_trace_csv(&path).unwrap();
        assert_eq!(back.iteration_index, trace.iteration_index);
        for (a, b) in back
            .bregman_to_final
            .iter()
            .zip(&trace.bregman_to_final)
        {
            assert_eq!(a, b);
        }
        assert_eq!(back.pilot_iters, 25);
    }
}
