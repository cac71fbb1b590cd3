//! Experiment execution: problem building, method planning, parallel
//! trials, grid search and aggregation.

use super::config::{
    Beta0Keyword, Beta0Spec, ExperimentConfig, GammaKeyword, GammaSpec, MethodSpec, ProblemSpec,
    ScheduleSpec,
};
use super::output;
use crate::blocked_matrix::BlockedMatrix;
use crate::bounds::{BoundParams, BoundsError};
use crate::derive_seed;
use crate::heuristics::{
    collect_pilot, estimate_beta0, estimate_gamma, GammaEstimate, PilotTrace, TraceError,
};
use crate::io::{self, IoError};
use crate::noise::NoiseModel;
use crate::objective::SparseObjective;
use crate::problems::{
    gaussian_problem, tomography_problem, tomography_problem_from_image, NoiseSpec, ProblemError,
};
use crate::solver::{run, RunConfig, RunRecord, SolveError};
use crate::stepsize::StepsizeSchedule;
use ndarray::Array1;
use rayon::prelude::*;
use serde::Serialize;
use std::path::Path;
use thiserror::Error;

/// Salt for the seed of the adaptive run that follows a pilot; the pilot
/// itself reuses the trial seed (it *is* the full-step baseline run).
const PILOT_RUN_SALT: u64 = 0x70_69_6c_6f_74;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("config: {0}")]
    Config(String),
    #[error(transparent)]
    Problem(#[from] ProblemError),
    #[error(transparent)]
    Solve(#[from] SolveError),
    #[error("pilot estimation failed ({context}): {source}")]
    DegenerateTrace {
        source: TraceError,
        context: String,
    },
    #[error(transparent)]
    Io(#[from] IoError),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    StdIo(#[from] std::io::Error),
    #[error(transparent)]
    Bounds(#[from] BoundsError),
}

/// A problem ready to run on: matrix, right-hand side, optional ground
/// truth and the noise oracle.
#[derive(Debug, Clone)]
pub struct ProblemInstance {
    pub matrix: BlockedMatrix,
    pub b: Array1<f64>,
    pub xhat: Option<Array1<f64>>,
    pub noise: NoiseModel,
}

impl ProblemInstance {
    pub fn exact_beta0(&self, objective: &SparseObjective) -> Result<f64, HarnessError> {
        let xhat = self.xhat.as_ref().ok_or_else(|| {
            HarnessError::Config("exact beta0 needs a ground truth solution".into())
        })?;
        let sigma = self.noise.total_sigma();
        if sigma == 0.0 {
            return Err(HarnessError::Config(
                "exact beta0 is undefined for a noiseless problem".into(),
            ));
        }
        let d0 = objective.f_value(xhat);
        Ok(self.matrix.square_norm().powi(2) * d0 / (sigma * sigma))
    }
}

/// Instantiates the problem named by a config. `seed` drives the random
/// generators (the tomography system is deterministic regardless).
pub fn build_problem(spec: &ProblemSpec, seed: u64) -> Result<ProblemInstance, HarnessError> {
    match spec {
        ProblemSpec::Gaussian {
            m,
            n,
            s,
            blocks,
            sigma,
            sigma_relative,
        } => {
            let noise = if *sigma_relative {
                NoiseSpec::Relative(*sigma)
            } else {
                NoiseSpec::Absolute(*sigma)
            };
            let p = gaussian_problem(*m, *n, *s, *blocks, noise, seed)?;
            Ok(ProblemInstance {
                matrix: p.matrix,
                b: p.b_clean,
                xhat: Some(p.xhat),
                noise: p.noise,
            })
        }
        ProblemSpec::Tomography {
            n_pix,
            n_angles,
            sigma_rel,
            phantom,
        } => {
            let p = match phantom {
                Some(path) => {
                    let image = io::read_pgm(path)?;
                    tomography_problem_from_image(&image, *n_angles, *sigma_rel, seed)?
                }
                None => tomography_problem(*n_pix, *n_angles, *sigma_rel, seed)?,
            };
            Ok(ProblemInstance {
                matrix: p.matrix,
                b: p.b_clean,
                xhat: Some(p.xhat),
                noise: p.noise,
            })
        }
        ProblemSpec::FromFiles {
            matrix,
            rhs,
            block_sizes,
            xhat,
            sigma,
            sigma_relative,
        } => {
            let a = io::read_matrix(matrix)?;
            let b = io::read_vector(rhs)?;
            if b.len() != a.nrows() {
                return Err(HarnessError::Config(format!(
                    "problem: rhs has {} entries, matrix has {} rows",
                    b.len(),
                    a.nrows()
                )));
            }
            let xhat = match xhat {
                Some(p) => {
                    let x = io::read_vector(p)?;
                    if x.len() != a.ncols() {
                        return Err(HarnessError::Config(format!(
                            "problem: xhat has {} entries, matrix has {} columns",
                            x.len(),
                            a.ncols()
                        )));
                    }
                    Some(x)
                }
                None => None,
            };
            let total = if *sigma_relative {
                sigma * b.iter().map(|&t| t * t).sum::<f64>().sqrt()
            } else {
                *sigma
            };
            let noise = NoiseModel::uniform_split(total, block_sizes.len());
            let matrix = BlockedMatrix::partition(a, block_sizes)
                .map_err(|e| HarnessError::Config(format!("problem: {e}")))?;
            Ok(ProblemInstance {
                matrix,
                b,
                xhat,
                noise,
            })
        }
    }
}

/// What the pilot produced: the trace it estimated from and the resulting
/// parameters.
#[derive(Debug, Clone)]
pub struct PilotOutcome {
    pub trace: PilotTrace,
    pub gamma: GammaEstimate,
    pub beta0: f64,
}

/// Runs the full-step pilot, estimates `(gamma, beta0)`, then runs the
/// adaptive schedule with them. The adaptive run uses a derived seed so
/// its measurements are fresh relative to the pilot's.
pub fn pilot_then_adaptive(
    problem: &ProblemInstance,
    objective: &SparseObjective,
    n0: Option<usize>,
    n1: Option<usize>,
    iters: usize,
    record_stride: usize,
    trial_seed: u64,
) -> Result<(PilotOutcome, RunRecord), HarnessError> {
    if iters < 2 {
        return Err(HarnessError::Config(
            "a pilot needs an iteration budget of at least 2".into(),
        ));
    }
    let trace = collect_pilot(
        &problem.matrix,
        &problem.b,
        &problem.noise,
        objective,
        iters,
        1,
        trial_seed,
    )?;
    let n0 = n0.unwrap_or_else(|| (trace.len() / 10).max(1));
    let n1 = n1.unwrap_or_else(|| (trace.len() / 10).max(1));
    let context = format!("pilot of {} iterations, n0={n0}, n1={n1}", trace.len());

    let gamma = estimate_gamma(&trace, n0).map_err(|e| classify_trace_error(e, &context))?;
    if gamma.clamped {
        log::warn!("{context}: gamma estimate clamped to {}", gamma.value);
    }
    let beta0 =
        estimate_beta0(&trace, gamma.value, n1).map_err(|e| classify_trace_error(e, &context))?;

    let schedule = StepsizeSchedule::adaptive(gamma.value, beta0)
        .map_err(|e| HarnessError::Config(format!("{context}: estimates unusable: {e}")))?;
    let cfg = RunConfig {
        max_iters: iters,
        record_stride,
        reference: problem.xhat.clone(),
    };
    let record = run(
        &problem.matrix,
        &problem.b,
        &problem.noise,
        schedule,
        objective,
        &cfg,
        derive_seed(trial_seed, PILOT_RUN_SALT),
    )?;
    Ok((
        PilotOutcome {
            trace,
            gamma,
            beta0,
        },
        record,
    ))
}

fn classify_trace_error(e: TraceError, context: &str) -> HarnessError {
    match e {
        TraceError::DegenerateTrace(_) => HarnessError::DegenerateTrace {
            source: e,
            context: context.to_string(),
        },
        other => HarnessError::Config(format!("{context}: {other}")),
    }
}

/// Per-method aggregated trace curves (means plus per-trial columns).
#[derive(Debug, Clone)]
pub struct MethodCurves {
    pub ks: Vec<usize>,
    pub eta_mean: Vec<f64>,
    pub beta_mean: Vec<Option<f64>>,
    pub rel_residual_mean: Vec<f64>,
    pub rel_error_mean: Vec<Option<f64>>,
    pub bregman_mean: Vec<Option<f64>>,
    pub rel_residual_trials: Vec<Vec<f64>>,
    pub rel_error_trials: Vec<Vec<Option<f64>>>,
}

impl MethodCurves {
    fn from_records(records: &[RunRecord]) -> Self {
        let ks: Vec<usize> = records[0].samples.iter().map(|s| s.k).collect();
        let t = records.len() as f64;
        let len = ks.len();
        let mut eta_mean = vec![0.0; len];
        let mut beta_acc = vec![Some(0.0); len];
        let mut res_mean = vec![0.0; len];
        let mut err_acc = vec![Some(0.0); len];
        let mut breg_acc = vec![Some(0.0); len];
        let mut res_trials = Vec::with_capacity(records.len());
        let mut err_trials = Vec::with_capacity(records.len());

        for rec in records {
            debug_assert_eq!(rec.samples.len(), len);
            let mut res_row = Vec::with_capacity(len);
            let mut err_row = Vec::with_capacity(len);
            for (i, s) in rec.samples.iter().enumerate() {
                eta_mean[i] += s.eta / t;
                beta_acc[i] = match (beta_acc[i], s.beta) {
                    (Some(a), Some(b)) => Some(a + b / t),
                    _ => None,
                };
                res_mean[i] += s.rel_residual / t;
                err_acc[i] = match (err_acc[i], s.rel_error) {
                    (Some(a), Some(e)) => Some(a + e / t),
                    _ => None,
                };
                breg_acc[i] = match (breg_acc[i], s.bregman) {
                    (Some(a), Some(d)) => Some(a + d / t),
                    _ => None,
                };
                res_row.push(s.rel_residual);
                err_row.push(s.rel_error);
            }
            res_trials.push(res_row);
            err_trials.push(err_row);
        }

        MethodCurves {
            ks,
            eta_mean,
            beta_mean: beta_acc,
            rel_residual_mean: res_mean,
            rel_error_mean: err_acc,
            bregman_mean: breg_acc,
            rel_residual_trials: res_trials,
            rel_error_trials: err_trials,
        }
    }

    pub fn final_rel_residual_mean(&self) -> f64 {
        *self.rel_residual_mean.last().unwrap()
    }

    pub fn final_rel_error_mean(&self) -> Option<f64> {
        *self.rel_error_mean.last().unwrap()
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct GridPointSummary {
    pub gamma: f64,
    pub skipped: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub skip_reason: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub final_rel_residual_mean: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub final_rel_error_mean: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct PilotSummary {
    pub trial: usize,
    pub gamma: f64,
    pub gamma_clamped: bool,
    pub beta0: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct MethodSummary {
    pub name: String,
    pub lambda: f64,
    pub schedule: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub chosen_gamma: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub beta0: Option<f64>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub grid: Vec<GridPointSummary>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub pilot: Vec<PilotSummary>,
    pub final_rel_residual_mean: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub final_rel_error_mean: Option<f64>,
    pub wall_time_secs: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ExperimentSummary {
    pub iterations: usize,
    pub epochs: usize,
    pub trials: usize,
    pub base_seed: u64,
    pub record_stride: usize,
    pub blocks: usize,
    pub square_norm: f64,
    pub total_sigma: f64,
    pub methods: Vec<MethodSummary>,
}

/// Full in-memory result of an experiment (everything the CSV files hold,
/// plus the final iterates).
#[derive(Debug)]
pub struct ExperimentOutput {
    pub summary: ExperimentSummary,
    pub methods: Vec<MethodOutput>,
}

#[derive(Debug)]
pub struct MethodOutput {
    pub name: String,
    pub curves: MethodCurves,
    /// Final iterate of every trial of the selected variant.
    pub final_xs: Vec<Array1<f64>>,
    pub pilots: Vec<PilotOutcome>,
}

impl ExperimentOutput {
    pub fn method(&self, name: &str) -> Option<&MethodOutput> {
        self.methods.iter().find(|m| m.name == name)
    }
}

enum VariantKind {
    Fixed(StepsizeSchedule),
    Pilot {
        n0: Option<usize>,
        n1: Option<usize>,
    },
    Skipped(String),
}

struct Variant {
    /// Grid gamma when this variant came from a grid expansion.
    grid_gamma: Option<f64>,
    kind: VariantKind,
}

struct MethodPlan {
    spec: MethodSpec,
    objective: SparseObjective,
    variants: Vec<Variant>,
    /// Resolved `beta0` for fixed adaptive schedules (value or exact).
    resolved_beta0: Option<f64>,
}

fn plan_method(
    spec: &MethodSpec,
    problem: &ProblemInstance,
    gamma_grid: &[f64],
) -> Result<MethodPlan, HarnessError> {
    let objective = SparseObjective::new(spec.lambda);
    let mut resolved_beta0 = None;
    let variants = match &spec.schedule {
        ScheduleSpec::Constant { eta } => {
            let s = StepsizeSchedule::constant(*eta)
                .map_err(|e| HarnessError::Config(format!("method {}: {e}", spec.name)))?;
            vec![Variant {
                grid_gamma: None,
                kind: VariantKind::Fixed(s),
            }]
        }
        ScheduleSpec::Adaptive { gamma, beta0 } => {
            let b0 = match beta0 {
                Beta0Spec::Value(v) => *v,
                Beta0Spec::Keyword(Beta0Keyword::Exact) => problem.exact_beta0(&objective)?,
            };
            resolved_beta0 = Some(b0);
            match gamma {
                GammaSpec::Value(g) => {
                    let s = StepsizeSchedule::adaptive(*g, b0)
                        .map_err(|e| HarnessError::Config(format!("method {}: {e}", spec.name)))?;
                    vec![Variant {
                        grid_gamma: None,
                        kind: VariantKind::Fixed(s),
                    }]
                }
                GammaSpec::Keyword(GammaKeyword::Grid) => gamma_grid
                    .iter()
                    .map(|&g| match StepsizeSchedule::adaptive(g, b0) {
                        Ok(s) => Variant {
                            grid_gamma: Some(g),
                            kind: VariantKind::Fixed(s),
                        },
                        Err(e) => Variant {
                            grid_gamma: Some(g),
                            kind: VariantKind::Skipped(e.to_string()),
                        },
                    })
                    .collect(),
            }
        }
        ScheduleSpec::FromPilot { n0, n1 } => vec![Variant {
            grid_gamma: None,
            kind: VariantKind::Pilot { n0: *n0, n1: *n1 },
        }],
    };
    Ok(MethodPlan {
        spec: spec.clone(),
        objective,
        variants,
        resolved_beta0,
    })
}

struct TaskResult {
    record: RunRecord,
    pilot: Option<PilotOutcome>,
}

/// Runs a full experiment config and writes all output files into
/// `cfg.output_dir`. `workers = 0` uses the default thread pool.
///
/// Trials (and grid points) run concurrently; trial `t` always uses the
/// stream seed `base_seed + t`, so results are independent of scheduling
/// and methods see pairwise-matched randomness.
pub fn run_experiment(
    cfg: &ExperimentConfig,
    workers: usize,
) -> Result<ExperimentOutput, HarnessError> {
    cfg.validate().map_err(HarnessError::Config)?;
    if workers > 0 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build()
            .map_err(|e| HarnessError::Config(format!("workers: {e}")))?;
        pool.install(|| run_experiment_inner(cfg))
    } else {
        run_experiment_inner(cfg)
    }
}

fn run_experiment_inner(cfg: &ExperimentConfig) -> Result<ExperimentOutput, HarnessError> {
    let problem = build_problem(&cfg.problem, cfg.base_seed)?;
    let blocks = problem.matrix.num_blocks();
    let iterations = cfg.epochs * blocks;
    let stride = cfg.record_stride.unwrap_or(blocks);

    let plans: Vec<MethodPlan> = cfg
        .methods
        .iter()
        .map(|m| plan_method(m, &problem, &cfg.gamma_grid))
        .collect::<Result<_, _>>()?;

    // One task per runnable (method, variant, trial); results land back by
    // index, never by completion order.
    struct TaskSpec<'a> {
        plan: &'a MethodPlan,
        variant: &'a Variant,
        trial: usize,
    }
    let mut tasks = Vec::new();
    for plan in &plans {
        for variant in &plan.variants {
            if matches!(variant.kind, VariantKind::Skipped(_)) {
                continue;
            }
            for trial in 0..cfg.trials {
                tasks.push(TaskSpec {
                    plan,
                    variant,
                    trial,
                });
            }
        }
    }

    let results: Vec<Result<TaskResult, HarnessError>> = tasks
        .par_iter()
        .map(|task| {
            let trial_seed = cfg.base_seed.wrapping_add(task.trial as u64);
            let run_cfg = RunConfig {
                max_iters: iterations,
                record_stride: stride,
                reference: problem.xhat.clone(),
            };
            match &task.variant.kind {
                VariantKind::Fixed(schedule) => {
                    let record = run(
                        &problem.matrix,
                        &problem.b,
                        &problem.noise,
                        schedule.clone(),
                        &task.plan.objective,
                        &run_cfg,
                        trial_seed,
                    )?;
                    Ok(TaskResult {
                        record,
                        pilot: None,
                    })
                }
                VariantKind::Pilot { n0, n1 } => {
                    let (pilot, record) = pilot_then_adaptive(
                        &problem,
                        &task.plan.objective,
                        *n0,
                        *n1,
                        iterations,
                        stride,
                        trial_seed,
                    )?;
                    Ok(TaskResult {
                        record,
                        pilot: Some(pilot),
                    })
                }
                VariantKind::Skipped(_) => unreachable!("skipped variants are not scheduled"),
            }
        })
        .collect();

    // Group results back per (method, variant).
    let mut by_task = results.into_iter();
    std::fs::create_dir_all(&cfg.output_dir)?;

    let xhat_norm = problem
        .xhat
        .as_ref()
        .map(|x| x.iter().map(|&t| t * t).sum::<f64>().sqrt());
    let sigma2 = problem.noise.total_sigma().powi(2);
    let square_norm2 = problem.matrix.square_norm().powi(2);

    let mut method_summaries = Vec::new();
    let mut method_outputs = Vec::new();

    for plan in &plans {
        let mut grid_points: Vec<GridPointSummary> = Vec::new();
        // (variant index, curves, records)
        let mut candidates: Vec<(usize, MethodCurves, Vec<RunRecord>, Vec<PilotOutcome>)> =
            Vec::new();
        let mut wall = 0.0f64;

        for (vi, variant) in plan.variants.iter().enumerate() {
            if let VariantKind::Skipped(reason) = &variant.kind {
                log::warn!(
                    "method {}: gamma {:?} skipped: {reason}",
                    plan.spec.name,
                    variant.grid_gamma
                );
                grid_points.push(GridPointSummary {
                    gamma: variant.grid_gamma.unwrap_or(f64::NAN),
                    skipped: true,
                    skip_reason: Some(reason.clone()),
                    final_rel_residual_mean: None,
                    final_rel_error_mean: None,
                });
                continue;
            }
            let mut records = Vec::with_capacity(cfg.trials);
            let mut pilots = Vec::new();
            for _ in 0..cfg.trials {
                let task = by_task
                    .next()
                    .expect("task results match task specs")?;
                wall += task.record.wall_time.as_secs_f64();
                if let Some(p) = task.pilot {
                    pilots.push(p);
                }
                records.push(task.record);
            }
            let curves = MethodCurves::from_records(&records);
            if let Some(g) = variant.grid_gamma {
                grid_points.push(GridPointSummary {
                    gamma: g,
                    skipped: false,
                    skip_reason: None,
                    final_rel_residual_mean: Some(curves.final_rel_residual_mean()),
                    final_rel_error_mean: curves.final_rel_error_mean(),
                });
            }
            candidates.push((vi, curves, records, pilots));
        }

        if candidates.is_empty() {
            return Err(HarnessError::Config(format!(
                "method {}: every gamma grid entry was skipped",
                plan.spec.name
            )));
        }

        // Grid selection: smallest final mean relative error, falling back
        // to the residual when no ground truth exists. First minimum wins.
        let winner_pos = (0..candidates.len())
            .min_by(|&a, &b| {
                let key = |idx: usize| {
                    let c = &candidates[idx].1;
                    c.final_rel_error_mean()
                        .unwrap_or_else(|| c.final_rel_residual_mean())
                };
                key(a).partial_cmp(&key(b)).unwrap_or(std::cmp::Ordering::Equal)
            })
            .unwrap();
        let (winner_vi, curves, records, pilots) = &candidates[winner_pos];
        let chosen_gamma = match &plan.variants[*winner_vi] {
            Variant {
                grid_gamma: Some(g),
                ..
            } => Some(*g),
            Variant {
                kind: VariantKind::Fixed(StepsizeSchedule::Adaptive { gamma, .. }),
                ..
            } => Some(*gamma),
            _ => None,
        };
        if grid_points.iter().filter(|g| !g.skipped).count() > 1 {
            log::info!(
                "method {}: grid search chose gamma = {:?}",
                plan.spec.name,
                chosen_gamma
            );
        }

        // Write per-grid-point curves, the winner's curve file, pilot
        // traces and the bound overlay.
        for (vi, c, _, _) in &candidates {
            if let Some(g) = plan.variants[*vi].grid_gamma {
                let path = cfg
                    .output_dir
                    .join(format!("{}_gamma{}.csv", plan.spec.name, g));
                output::write_method_csv(&path, c)?;
            }
        }
        let method_csv = cfg.output_dir.join(format!("{}.csv", plan.spec.name));
        output::write_method_csv(&method_csv, curves)?;

        for (t, p) in pilots.iter().enumerate() {
            let path = cfg
                .output_dir
                .join(format!("{}_pilot_t{}.csv", plan.spec.name, t));
            crate::heuristics::write_trace_csv(&path, &p.trace)
                .map_err(|e| HarnessError::Config(format!("writing pilot trace: {e}")))?;
        }

        if let (Some(gamma), Some(beta0)) = (chosen_gamma, plan.resolved_beta0) {
            let params = BoundParams::new(gamma, beta0, sigma2, square_norm2)?;
            let mean_sq_error: Option<Vec<f64>> = xhat_norm.map(|xn| {
                (0..curves.ks.len())
                    .map(|i| {
                        let mut acc = 0.0;
                        for row in &curves.rel_error_trials {
                            if let Some(e) = row[i] {
                                acc += (e * xn) * (e * xn);
                            }
                        }
                        acc / curves.rel_error_trials.len() as f64
                    })
                    .collect()
            });
            let path = cfg
                .output_dir
                .join(format!("{}_bounds.csv", plan.spec.name));
            output::write_bounds_overlay_csv(&path, &curves.ks, &curves.beta_mean, &params, mean_sq_error.as_deref())?;
        }

        if let Some(first) = records.first() {
            let path = cfg
                .output_dir
                .join(format!("{}_final_x.mtx", plan.spec.name));
            io::write_vector(&path, &first.final_x)?;
        }

        method_summaries.push(MethodSummary {
            name: plan.spec.name.clone(),
            lambda: plan.spec.lambda,
            schedule: describe_schedule(&plan.spec.schedule),
            chosen_gamma,
            beta0: plan.resolved_beta0,
            grid: grid_points,
            pilot: pilots
                .iter()
                .enumerate()
                .map(|(t, p)| PilotSummary {
                    trial: t,
                    gamma: p.gamma.value,
                    gamma_clamped: p.gamma.clamped,
                    beta0: p.beta0,
                })
                .collect(),
            final_rel_residual_mean: curves.final_rel_residual_mean(),
            final_rel_error_mean: curves.final_rel_error_mean(),
            wall_time_secs: wall,
        });
        method_outputs.push(MethodOutput {
            name: plan.spec.name.clone(),
            curves: curves.clone(),
            final_xs: records.iter().map(|r| r.final_x.clone()).collect(),
            pilots: pilots.clone(),
        });
    }

    let summary = ExperimentSummary {
        iterations,
        epochs: cfg.epochs,
        trials: cfg.trials,
        base_seed: cfg.base_seed,
        record_stride: stride,
        blocks,
        square_norm: problem.matrix.square_norm(),
        total_sigma: problem.noise.total_sigma(),
        methods: method_summaries,
    };
    let summary_json = serde_json::to_string_pretty(&summary)
        .map_err(|e| HarnessError::Config(format!("serializing summary: {e}")))?;
    std::fs::write(cfg.output_dir.join("summary.json"), summary_json)?;

    Ok(ExperimentOutput {
        summary,
        methods: method_outputs,
    })
}

fn describe_schedule(s: &ScheduleSpec) -> String {
    match s {
        ScheduleSpec::Constant { eta } => format!("constant(eta={eta})"),
        ScheduleSpec::Adaptive { gamma, beta0 } => {
            let g = match gamma {
                GammaSpec::Value(v) => format!("{v}"),
                GammaSpec::Keyword(GammaKeyword::Grid) => "grid".into(),
            };
            let b = match beta0 {
                Beta0Spec::Value(v) => format!("{v}"),
                Beta0Spec::Keyword(Beta0Keyword::Exact) => "exact".into(),
            };
            format!("adaptive(gamma={g}, beta0={b})")
        }
        ScheduleSpec::FromPilot { n0, n1 } => format!("from_pilot(n0={n0:?}, n1={n1:?})"),
    }
}

/// Writes the generated problem of a config to disk: `matrix.mtx`,
/// `rhs.mtx`, `xhat.mtx` (when known) and `meta.json` with the partition
/// and noise levels.
pub fn generate_problem_files(
    spec: &ProblemSpec,
    seed: u64,
    out_dir: &Path,
) -> Result<(), HarnessError> {
    let problem = build_problem(spec, seed)?;
    std::fs::create_dir_all(out_dir)?;
    io::write_matrix(out_dir.join("matrix.mtx"), problem.matrix.data())?;
    io::write_vector(out_dir.join("rhs.mtx"), &problem.b)?;
    if let Some(x) = &problem.xhat {
        io::write_vector(out_dir.join("xhat.mtx"), x)?;
    }

    #[derive(Serialize)]
    struct Meta {
        rows: usize,
        cols: usize,
        block_sizes: Vec<usize>,
        total_sigma: f64,
        sigmas: Vec<f64>,
        square_norm: f64,
        seed: u64,
    }
    let block_sizes: Vec<usize> = (0..problem.matrix.num_blocks())
        .map(|i| problem.matrix.block_size(i))
        .collect();
    let meta = Meta {
        rows: problem.matrix.nrows(),
        cols: problem.matrix.ncols(),
        block_sizes,
        total_sigma: problem.noise.total_sigma(),
        sigmas: problem.noise.sigmas().to_vec(),
        square_norm: problem.matrix.square_norm(),
        seed,
    };
    let text = serde_json::to_string_pretty(&meta)
        .map_err(|e| HarnessError::Config(format!("serializing meta: {e}")))?;
    std::fs::write(out_dir.join("meta.json"), text)?;
    Ok(())
}
