//! Stepsize schedules: constant relaxation and the adaptive schedule.
//!
//! The adaptive schedule emits `eta_k = gamma*beta_k / (gamma*beta_k + 1)`
//! and then contracts its state by `beta_{k+1} = beta_k * (1 - gamma*eta_k/2)`.
//! `beta_0` is the normalized signal-to-noise ratio at the start and `gamma`
//! the per-iteration rate constant; both live strictly inside `(0, 2)` /
//! `(0, inf)` respectively. The sequence starts near a full step when
//! `gamma*beta_0` is large and decays towards `O(1/k)`.
//!
//! The schedule is deterministic: `beta_k` follows the ideal recursion and
//! never sees realized residuals, so one instance drives exactly one run
//! and is the single source of truth for the `(eta_k, beta_k)` coupling.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum ScheduleError {
    #[error("constant stepsize must lie in (0, 2), got {0}")]
    InvalidEta(f64),
    #[error("adaptive schedule needs gamma in (0, 2), got {0}")]
    InvalidGamma(f64),
    #[error("adaptive schedule needs beta0 > 0, got {0}")]
    InvalidBeta0(f64),
    #[error("beta_k lost positivity (beta = {beta}, gamma = {gamma})")]
    InvalidState { beta: f64, gamma: f64 },
}

/// A per-run stepsize schedule. Mutable state; do not share across runs.
#[derive(Debug, Clone, PartialEq)]
pub enum StepsizeSchedule {
    Constant {
        eta: f64,
    },
    Adaptive {
        gamma: f64,
        /// Current `beta_k`; starts at `beta_0`, strictly decreasing.
        beta: f64,
    },
}

impl StepsizeSchedule {
    /// Fixed relaxation `eta` in `(0, 2)`.
    pub fn constant(eta: f64) -> Result<Self, ScheduleError> {
        if !(eta.is_finite() && eta > 0.0 && eta < 2.0) {
            return Err(ScheduleError::InvalidEta(eta));
        }
        Ok(Self::Constant { eta })
    }

    /// Adaptive schedule with rate `gamma` and initial ratio `beta0`.
    ///
    /// `gamma >= 2` is rejected: the contraction factor `1 - eta*(2-eta)*gamma/2`
    /// and the positivity of `beta_k` both need `gamma < 2` in this
    /// parameterization.
    pub fn adaptive(gamma: f64, beta0: f64) -> Result<Self, ScheduleError> {
        if !(gamma.is_finite() && gamma > 0.0 && gamma < 2.0) {
            return Err(ScheduleError::InvalidGamma(gamma));
        }
        if !(beta0.is_finite() && beta0 > 0.0) {
            return Err(ScheduleError::InvalidBeta0(beta0));
        }
        Ok(Self::Adaptive { gamma, beta: beta0 })
    }

    /// The stepsize the next [`advance`](Self::advance) will consume.
    /// Does not mutate state.
    pub fn next_eta(&self) -> f64 {
        match self {
            Self::Constant { eta } => *eta,
            Self::Adaptive { gamma, beta } => {
                let v = gamma * beta;
                v / (v + 1.0)
            }
        }
    }

    /// Consumes one iteration: returns `eta_k` and moves the adaptive state
    /// to `beta_{k+1} = beta_k * (1 - gamma*eta_k/2)`. A no-op for the
    /// constant schedule.
    pub fn advance(&mut self) -> Result<f64, ScheduleError> {
        match self {
            Self::Constant { eta } => Ok(*eta),
            Self::Adaptive { gamma, beta } => {
                let eta = *gamma * *beta / (*gamma * *beta + 1.0);
                let next = *beta * (1.0 - *gamma * eta / 2.0);
                // Unreachable for gamma < 2 (eta < 1 implies the factor
                // stays positive), but guarded: the solver would otherwise
                // silently walk backwards.
                if next.is_nan() || next <= 0.0 {
                    return Err(ScheduleError::InvalidState {
                        beta: next,
                        gamma: *gamma,
                    });
                }
                *beta = next;
                Ok(eta)
            }
        }
    }

    /// Current `beta_k`; `None` for the constant schedule.
    pub fn beta(&self) -> Option<f64> {
        match self {
            Self::Constant { .. } => None,
            Self::Adaptive { beta, .. } => Some(*beta),
        }
    }

    pub fn gamma(&self) -> Option<f64> {
        match self {
            Self::Constant { .. } => None,
            Self::Adaptive { gamma, .. } => Some(*gamma),
        }
    }

    pub fn is_adaptive(&self) -> bool {
        matches!(self, Self::Adaptive { .. })
    }
}
