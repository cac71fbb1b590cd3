//! Experiment orchestration: configs, method comparisons over repeated
//! trials, gamma grid search, and CSV/JSON output for external plotting.

mod config;
mod output;
mod runner;

pub use config::{
    Beta0Keyword, Beta0Spec, ExperimentConfig, GammaKeyword, GammaSpec, MethodSpec, ProblemSpec,
    ScheduleSpec,
};
pub use output::{write_bound_curves, write_bounds_overlay_csv, write_method_csv};
pub use runner::{
    build_problem, generate_problem_files, pilot_then_adaptive, run_experiment, ExperimentOutput,
    ExperimentSummary, GridPointSummary, HarnessError, MethodCurves, MethodOutput, MethodSummary,
    PilotOutcome, PilotSummary, ProblemInstance,
};
