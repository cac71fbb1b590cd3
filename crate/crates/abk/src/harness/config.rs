//! Experiment configuration: a single JSON document describing the
//! problem, the methods to compare, and the trial/output layout.

use serde::{Deserialize, Serialize};
use std::path::PathBuf;

/// Which problem to run on.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum ProblemSpec {
    /// I.i.d. standard-normal matrix with an `s`-sparse ground truth.
    Gaussian {
        m: usize,
        n: usize,
        s: usize,
        blocks: usize,
        /// Total noise level; interpreted relative to `||b||` when
        /// `sigma_relative` is set.
        sigma: f64,
        #[serde(default)]
        sigma_relative: bool,
    },
    /// Parallel-beam tomography of the built-in disks phantom (or a PGM
    /// image when `phantom` is given).
    Tomography {
        n_pix: usize,
        n_angles: usize,
        sigma_rel: f64,
        #[serde(default)]
        phantom: Option<PathBuf>,
    },
    /// A system loaded from MatrixMarket files.
    FromFiles {
        matrix: PathBuf,
        rhs: PathBuf,
        block_sizes: Vec<usize>,
        #[serde(default)]
        xhat: Option<PathBuf>,
        #[serde(default)]
        sigma: f64,
        #[serde(default)]
        sigma_relative: bool,
    },
}

/// `gamma` is either a number or the keyword `"grid"`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
#[serde(untagged)]
pub enum GammaSpec {
    Value(f64),
    Keyword(GammaKeyword),
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum GammaKeyword {
    Grid,
}

/// `beta0` is either a number or the keyword `"exact"` (computed from the
/// ground truth, so only available when the problem carries one).
#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
#[serde(untagged)]
pub enum Beta0Spec {
    Value(f64),
    Keyword(Beta0Keyword),
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum Beta0Keyword {
    Exact,
}

/// Stepsize schedule of one method entry.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum ScheduleSpec {
    Constant {
        eta: f64,
    },
    Adaptive {
        gamma: GammaSpec,
        beta0: Beta0Spec,
    },
    /// Estimate both `gamma` and `beta0` from an extra full-step pilot run
    /// with the same iteration budget. Window defaults: a tenth of the
    /// pilot length each.
    FromPilot {
        #[serde(default)]
        n0: Option<usize>,
        #[serde(default)]
        n1: Option<usize>,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct MethodSpec {
    pub name: String,
    pub lambda: f64,
    pub schedule: ScheduleSpec,
}

/// The full experiment: problem x methods x trials.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub problem: ProblemSpec,
    pub methods: Vec<MethodSpec>,
    /// Iteration budget in expected passes: `iterations = epochs * M`.
    pub epochs: usize,
    pub trials: usize,
    #[serde(default)]
    pub base_seed: u64,
    /// Candidate values for methods with `"gamma": "grid"`. Entries the
    /// schedule rejects (`gamma >= 2`) are skipped and reported as such.
    #[serde(default)]
    pub gamma_grid: Vec<f64>,
    /// Trace sampling stride; defaults to one record per epoch.
    #[serde(default)]
    pub record_stride: Option<usize>,
    pub output_dir: PathBuf,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self, String> {
        serde_json::from_str(text).map_err(|e| e.to_string())
    }

    /// Structural validation with a human-readable location for every
    /// complaint. File existence and dimension checks happen at build time.
    pub fn validate(&self) -> Result<(), String> {
        self.validate_problem()?;
        if self.epochs == 0 {
            return Err("epochs: must be at least 1".into());
        }
        if self.trials == 0 {
            return Err("trials: must be at least 1".into());
        }
        if self.methods.is_empty() {
            return Err("methods: need at least one method".into());
        }
        for g in &self.gamma_grid {
            if !(g.is_finite() && *g > 0.0) {
                return Err(format!("gamma_grid: entries must be positive, got {g}"));
            }
        }
        if self.record_stride == Some(0) {
            return Err("record_stride: must be positive when given".into());
        }

        let mut seen = std::collections::HashSet::new();
        for (i, m) in self.methods.iter().enumerate() {
            let at = format!("methods[{i}] ({})", m.name);
            if m.name.is_empty()
                || !m
                    .name
                    .chars()
                    .all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_')
            {
                return Err(format!(
                    "{at}: name must be nonempty and [A-Za-z0-9_-] (it names output files)"
                ));
            }
            if !seen.insert(&m.name) {
                return Err(format!("{at}: duplicate method name"));
            }
            if !(m.lambda.is_finite() && m.lambda >= 0.0) {
                return Err(format!("{at}: lambda must be finite and nonnegative"));
            }
            match &m.schedule {
                ScheduleSpec::Constant { eta } => {
                    if !(eta.is_finite() && *eta > 0.0 && *eta < 2.0) {
                        return Err(format!("{at}: constant eta must lie in (0, 2), got {eta}"));
                    }
                }
                ScheduleSpec::Adaptive { gamma, beta0 } => {
                    match gamma {
                        GammaSpec::Value(g) => {
                            if !(g.is_finite() && *g > 0.0 && *g < 2.0) {
                                return Err(format!(
                                    "{at}: gamma must lie in (0, 2), got {g} \
                                     (grid entries outside are skipped, explicit values are not)"
                                ));
                            }
                        }
                        GammaSpec::Keyword(GammaKeyword::Grid) => {
                            if self.gamma_grid.is_empty() {
                                return Err(format!(
                                    "{at}: gamma is \"grid\" but gamma_grid is empty"
                                ));
                            }
                        }
                    }
                    match beta0 {
                        Beta0Spec::Value(b) => {
                            if !(b.is_finite() && *b > 0.0) {
                                return Err(format!("{at}: beta0 must be positive, got {b}"));
                            }
                        }
                        Beta0Spec::Keyword(Beta0Keyword::Exact) => {
                            if !self.problem_has_ground_truth() {
                                return Err(format!(
                                    "{at}: beta0 \"exact\" needs a problem with a ground truth"
                                ));
                            }
                        }
                    }
                }
                ScheduleSpec::FromPilot { n0, n1 } => {
                    if n0 == &Some(0) || n1 == &Some(0) {
                        return Err(format!("{at}: pilot windows must be positive when given"));
                    }
                }
            }
        }
        Ok(())
    }

    fn validate_problem(&self) -> Result<(), String> {
        match &self.problem {
            ProblemSpec::Gaussian {
                m,
                n,
                s,
                blocks,
                sigma,
                ..
            } => {
                if *m == 0 || *n == 0 {
                    return Err("problem: m and n must be positive".into());
                }
                if *s == 0 || s > n {
                    return Err(format!("problem: s = {s} must lie in 1..={n}"));
                }
                if *blocks == 0 || m % blocks != 0 {
                    return Err(format!("problem: blocks = {blocks} must divide m = {m}"));
                }
                if !(sigma.is_finite() && *sigma >= 0.0) {
                    return Err("problem: sigma must be finite and nonnegative".into());
                }
            }
            ProblemSpec::Tomography {
                n_pix,
                n_angles,
                sigma_rel,
                ..
            } => {
                if *n_pix < 8 {
                    return Err("problem: n_pix must be at least 8".into());
                }
                if *n_angles < 2 {
                    return Err("problem: n_angles must be at least 2".into());
                }
                if !(sigma_rel.is_finite() && *sigma_rel >= 0.0) {
                    return Err("problem: sigma_rel must be finite and nonnegative".into());
                }
            }
            ProblemSpec::FromFiles {
                block_sizes, sigma, ..
            } => {
                if block_sizes.is_empty() || block_sizes.contains(&0) {
                    return Err("problem: block_sizes must be nonempty and positive".into());
                }
                if !(sigma.is_finite() && *sigma >= 0.0) {
                    return Err("problem: sigma must be finite and nonnegative".into());
                }
            }
        }
        Ok(())
    }

    /// `beta0: "exact"` and error metrics need a ground truth.
    pub fn problem_has_ground_truth(&self) -> bool {
        match &self.problem {
            ProblemSpec::Gaussian { .. } | ProblemSpec::Tomography { .. } => true,
            ProblemSpec::FromFiles { xhat, .. } => xhat.is_some(),
        }
    }
}
