//! `abk` — block Bregman-Kaczmarz solvers from the command line.
//!
//! Subcommands: `generate` (emit problem files), `solve` (run one method),
//! `experiment` (run a full config), `estimate` (hyperparameters from a
//! pilot trace CSV), `bound` (closed-form envelope curves). Verbosity is
//! controlled by the `ABK_LOG` environment variable (error|warn|info|debug).
//!
//! Exit codes: 0 on success, 2 on configuration errors, 3 on degenerate
//! pilot traces.

use abk::bounds::BoundParams;
use abk::harness::{
    generate_problem_files, run_experiment, write_bound_curves, Beta0Keyword, Beta0Spec,
    ExperimentConfig, GammaSpec, HarnessError, MethodSpec, ProblemSpec, ScheduleSpec,
};
use abk::heuristics::{estimate_beta0, estimate_gamma, read_trace_csv, TraceError};
use clap::{Args, Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;
use thiserror::Error;

#[derive(Debug, Error)]
enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("degenerate pilot trace: {0}")]
    DegenerateTrace(String),
    #[error("{0}")]
    Other(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::DegenerateTrace(_) => 3,
            CliError::Other(_) => 1,
        }
    }
}

impl From<HarnessError> for CliError {
    fn from(e: HarnessError) -> Self {
        match e {
            HarnessError::Config(msg) => CliError::Config(msg),
            HarnessError::DegenerateTrace { .. } => CliError::DegenerateTrace(e.to_string()),
            other => CliError::Other(other.to_string()),
        }
    }
}

impl From<TraceError> for CliError {
    fn from(e: TraceError) -> Self {
        match e {
            TraceError::DegenerateTrace(_) => CliError::DegenerateTrace(e.to_string()),
            TraceError::InvalidWindow { .. } => CliError::Config(e.to_string()),
            other => CliError::Other(other.to_string()),
        }
    }
}

#[derive(Parser)]
#[command(
    name = "abk",
    version,
    about = "Block Bregman-Kaczmarz solvers with adaptive stepsizes"
)]
struct Cli {
    /// JSON config file (full experiment config, or a bare problem spec
    /// for `generate`/`solve`).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Base seed; overrides the config's `base_seed`.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory; overrides the config's `output_dir`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads for trials and grid points (0 = default pool).
    #[arg(long, global = true, default_value_t = 0)]
    workers: usize,
    /// Trace recording stride in iterations (default: one per epoch).
    #[arg(long, global = true)]
    stride: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a problem and write matrix.mtx, rhs.mtx, xhat.mtx, meta.json.
    Generate,
    /// Run a single method on the configured problem.
    Solve(SolveArgs),
    /// Run a full experiment config (methods x trials, grid search, CSVs).
    Experiment,
    /// Estimate (gamma, beta0) from a pilot trace CSV.
    Estimate(EstimateArgs),
    /// Emit the closed-form bound curves as CSV.
    Bound(BoundArgs),
}

#[derive(Args)]
struct SolveArgs {
    /// Sparsity weight lambda of the objective.
    #[arg(long, default_value_t = 0.0)]
    lambda: f64,
    /// Constant stepsize in (0, 2).
    #[arg(long)]
    eta: Option<f64>,
    /// Adaptive rate constant in (0, 2); needs --beta0.
    #[arg(long)]
    gamma: Option<f64>,
    /// Adaptive initial ratio: a number, or "exact" (needs a ground truth).
    #[arg(long)]
    beta0: Option<String>,
    /// Estimate gamma and beta0 from a full-step pilot run first.
    #[arg(long, default_value_t = false)]
    from_pilot: bool,
    /// Pilot window for the gamma estimate (default: a tenth of the run).
    #[arg(long)]
    n0: Option<usize>,
    /// Pilot window for the beta0 estimate (default: a tenth of the run).
    #[arg(long)]
    n1: Option<usize>,
    /// Iteration budget in epochs (epoch = M iterations).
    #[arg(long)]
    epochs: usize,
    /// Independent trials.
    #[arg(long, default_value_t = 1)]
    trials: usize,
    /// Method name; prefixes the output files.
    #[arg(long, default_value = "solve")]
    name: String,
}

#[derive(Args)]
struct EstimateArgs {
    /// Pilot trace CSV with columns j,bregman_to_final.
    #[arg(long)]
    trace: PathBuf,
    /// Ratio window (default: a tenth of the trace).
    #[arg(long)]
    n0: Option<usize>,
    /// Tail window (default: a tenth of the trace).
    #[arg(long)]
    n1: Option<usize>,
}

#[derive(Args)]
struct BoundArgs {
    #[arg(long)]
    gamma: f64,
    #[arg(long)]
    beta0: f64,
    /// Total noise variance sigma^2.
    #[arg(long, default_value_t = 1.0)]
    sigma2: f64,
    /// Squared block norm of the matrix.
    #[arg(long = "square-norm2", default_value_t = 1.0)]
    square_norm2: f64,
    #[arg(long, default_value_t = 10_000)]
    max_k: usize,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().filter_or("ABK_LOG", "warn")).init();
    let cli = Cli::parse();
    match dispatch(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("abk: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn dispatch(cli: &Cli) -> Result<(), CliError> {
    match &cli.command {
        Command::Generate => cmd_generate(cli),
        Command::Solve(args) => cmd_solve(cli, args),
        Command::Experiment => cmd_experiment(cli),
        Command::Estimate(args) => cmd_estimate(args),
        Command::Bound(args) => cmd_bound(cli, args),
    }
}

/// The loaded config file: either a full experiment or a bare problem.
enum LoadedConfig {
    Experiment(ExperimentConfig),
    Problem(ProblemSpec),
}

fn load_config(cli: &Cli) -> Result<LoadedConfig, CliError> {
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| CliError::Config("--config is required for this command".into()))?;
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("reading {}: {e}", path.display())))?;
    if let Ok(cfg) = ExperimentConfig::from_json(&text) {
        return Ok(LoadedConfig::Experiment(cfg));
    }
    match serde_json::from_str::<ProblemSpec>(&text) {
        Ok(p) => Ok(LoadedConfig::Problem(p)),
        Err(e) => Err(CliError::Config(format!(
            "{} is neither an experiment config nor a problem spec: {e}",
            path.display()
        ))),
    }
}

fn cmd_generate(cli: &Cli) -> Result<(), CliError> {
    let (problem, seed, out) = match load_config(cli)? {
        LoadedConfig::Experiment(cfg) => {
            let out = cli.out.clone().unwrap_or_else(|| cfg.output_dir.clone());
            (cfg.problem, cli.seed.unwrap_or(cfg.base_seed), out)
        }
        LoadedConfig::Problem(p) => {
            let out = cli
                .out
                .clone()
                .ok_or_else(|| CliError::Config("--out is required with a bare problem spec".into()))?;
            (p, cli.seed.unwrap_or(0), out)
        }
    };
    generate_problem_files(&problem, seed, &out)?;
    println!("wrote problem files to {}", out.display());
    Ok(())
}

fn cmd_experiment(cli: &Cli) -> Result<(), CliError> {
    let mut cfg = match load_config(cli)? {
        LoadedConfig::Experiment(cfg) => cfg,
        LoadedConfig::Problem(_) => {
            return Err(CliError::Config(
                "experiment needs a full config with a methods list".into(),
            ))
        }
    };
    apply_overrides(&mut cfg, cli);
    let out = run_experiment(&cfg, cli.workers)?;
    println!(
        "ran {} methods x {} trials ({} iterations); results in {}",
        out.summary.methods.len(),
        out.summary.trials,
        out.summary.iterations,
        cfg.output_dir.display()
    );
    Ok(())
}

fn cmd_solve(cli: &Cli, args: &SolveArgs) -> Result<(), CliError> {
    let problem = match load_config(cli)? {
        LoadedConfig::Experiment(cfg) => cfg.problem,
        LoadedConfig::Problem(p) => p,
    };
    let schedule = resolve_schedule(args)?;
    let out = cli
        .out
        .clone()
        .ok_or_else(|| CliError::Config("--out is required for solve".into()))?;
    if args.epochs == 0 {
        return Err(CliError::Config("--epochs must be at least 1".into()));
    }
    let cfg = ExperimentConfig {
        problem,
        methods: vec![MethodSpec {
            name: args.name.clone(),
            lambda: args.lambda,
            schedule,
        }],
        epochs: args.epochs,
        trials: args.trials,
        base_seed: cli.seed.unwrap_or(0),
        gamma_grid: vec![],
        record_stride: cli.stride,
        output_dir: out.clone(),
    };
    let result = run_experiment(&cfg, cli.workers)?;
    let m = &result.summary.methods[0];
    match m.final_rel_error_mean {
        Some(err) => println!(
            "{}: final rel residual {:.6e}, rel error {:.6e}; trace in {}",
            m.name, m.final_rel_residual_mean, err, out.display()
        ),
        None => println!(
            "{}: final rel residual {:.6e}; trace in {}",
            m.name, m.final_rel_residual_mean, out.display()
        ),
    }
    Ok(())
}

fn resolve_schedule(args: &SolveArgs) -> Result<ScheduleSpec, CliError> {
    let picked = [args.eta.is_some(), args.gamma.is_some(), args.from_pilot]
        .iter()
        .filter(|&&b| b)
        .count();
    if picked != 1 {
        return Err(CliError::Config(
            "pick exactly one of --eta, --gamma (with --beta0), or --from-pilot".into(),
        ));
    }
    if let Some(eta) = args.eta {
        return Ok(ScheduleSpec::Constant { eta });
    }
    if args.from_pilot {
        return Ok(ScheduleSpec::FromPilot {
            n0: args.n0,
            n1: args.n1,
        });
    }
    let gamma = args.gamma.expect("checked above");
    let beta0 = args
        .beta0
        .as_deref()
        .ok_or_else(|| CliError::Config("--gamma needs --beta0 (a number or \"exact\")".into()))?;
    let beta0 = if beta0.eq_ignore_ascii_case("exact") {
        Beta0Spec::Keyword(Beta0Keyword::Exact)
    } else {
        let v: f64 = beta0
            .parse()
            .map_err(|e| CliError::Config(format!("--beta0 {beta0:?}: {e}")))?;
        Beta0Spec::Value(v)
    };
    Ok(ScheduleSpec::Adaptive {
        gamma: GammaSpec::Value(gamma),
        beta0,
    })
}

fn cmd_estimate(args: &EstimateArgs) -> Result<(), CliError> {
    let trace = read_trace_csv(&args.trace)?;
    let n0 = args.n0.unwrap_or_else(|| (trace.len() / 10).max(1));
    let n1 = args.n1.unwrap_or_else(|| (trace.len() / 10).max(1));
    let gamma = estimate_gamma(&trace, n0)?;
    let beta0 = estimate_beta0(&trace, gamma.value, n1)?;
    let report = serde_json::json!({
        "trace_entries": trace.len(),
        "n0": n0,
        "n1": n1,
        "gamma": gamma.value,
        "gamma_clamped": gamma.clamped,
        "used_ratios": gamma.used_ratios,
        "skipped_ratios": gamma.skipped_ratios,
        "beta0": beta0,
    });
    println!("{report:#}");
    Ok(())
}

fn cmd_bound(cli: &Cli, args: &BoundArgs) -> Result<(), CliError> {
    let params = BoundParams::new(args.gamma, args.beta0, args.sigma2, args.square_norm2)
        .map_err(|e| CliError::Config(e.to_string()))?;
    let stride = cli.stride.unwrap_or(1);
    match &cli.out {
        Some(dir) => {
            std::fs::create_dir_all(dir)
                .map_err(|e| CliError::Other(format!("creating {}: {e}", dir.display())))?;
            let path = dir.join("bounds.csv");
            let file = std::fs::File::create(&path)
                .map_err(|e| CliError::Other(format!("creating {}: {e}", path.display())))?;
            write_bound_curves(std::io::BufWriter::new(file), &params, args.max_k, stride)?;
            println!("wrote {}", path.display());
        }
        None => {
            let stdout = std::io::stdout();
            write_bound_curves(stdout.lock(), &params, args.max_k, stride)?;
        }
    }
    Ok(())
}

fn apply_overrides(cfg: &mut ExperimentConfig, cli: &Cli) {
    if let Some(seed) = cli.seed {
        cfg.base_seed = seed;
    }
    if let Some(out) = &cli.out {
        cfg.output_dir = out.clone();
    }
    if let Some(stride) = cli.stride {
        cfg.record_stride = Some(stride);
    }
}
