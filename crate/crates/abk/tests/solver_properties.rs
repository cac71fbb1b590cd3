//! Run-level behavior of the solver on noisy problems: the constant-step
//! plateau and the paired comparison against the adaptive schedule.

use abk::objective::SparseObjective;
use abk::problems::{gaussian_problem, NoiseSpec};
use abk::solver::{run, RunConfig};
use abk::stepsize::StepsizeSchedule;

#[test]
fn constant_step_error_plateaus_under_noise() {
    let p = gaussian_problem(500, 50, 5, 50, NoiseSpec::Absolute(0.05), 21).unwrap();
    let objective = SparseObjective::new(0.05);
    let cfg = RunConfig {
        max_iters: 40 * 50,
        record_stride: 50,
        reference: Some(p.xhat.clone()),
    };
    let rec = run(
        &p.matrix,
        &p.b_clean,
        &p.noise,
        StepsizeSchedule::constant(1.0).unwrap(),
        &objective,
        &cfg,
        5,
    )
    .unwrap();

    let errs: Vec<f64> = rec
        .samples
        .iter()
        .map(|s| s.rel_error.unwrap())
        .collect();
    // Stagnation: the error stops improving once the noise floor is hit.
    // The minimum over the last tenth stays within a factor 2 of the
    // mid-run level.
    let mid = errs[errs.len() / 2];
    let tail_min = errs[errs.len() - errs.len() / 10..]
        .iter()
        .cloned()
        .fold(f64::INFINITY, f64::min);
    assert!(
        tail_min >= 0.5 * mid,
        "tail min {tail_min} fell below half the mid-run error {mid}"
    );
}

#[test]
fn adaptive_schedule_beats_the_plateau_on_the_same_seed() {
    let p = gaussian_problem(500, 50, 5, 50, NoiseSpec::Absolute(0.05), 21).unwrap();
    let objective = SparseObjective::new(0.05);
    let cfg = RunConfig {
        max_iters: 40 * 50,
        record_stride: 50,
        reference: Some(p.xhat.clone()),
    };
    let seed = 5;

    let constant = run(
        &p.matrix,
        &p.b_clean,
        &p.noise,
        StepsizeSchedule::constant(1.0).unwrap(),
        &objective,
        &cfg,
        seed,
    )
    .unwrap();
    let beta0 = p.exact_beta0(&objective).unwrap();
    let adaptive = run(
        &p.matrix,
        &p.b_clean,
        &p.noise,
        StepsizeSchedule::adaptive(0.05, beta0).unwrap(),
        &objective,
        &cfg,
        seed,
    )
    .unwrap();

    let plateau = constant.final_sample().rel_error.unwrap();
    let final_adaptive = adaptive.final_sample().rel_error.unwrap();
    assert!(
        final_adaptive < plateau,
        "adaptive {final_adaptive} did not beat the plateau {plateau}"
    );

    // The recorded stepsize trace is non-increasing and the beta trace
    // strictly decreasing.
    let mut prev = f64::INFINITY;
    for s in &adaptive.samples {
        assert!(s.eta <= prev);
        prev = s.eta;
    }
    let betas: Vec<f64> = adaptive.samples.iter().map(|s| s.beta.unwrap()).collect();
    assert!(betas.windows(2).all(|w| w[1] < w[0]));
}
