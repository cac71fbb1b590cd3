//! Closed-form convergence envelopes for the adaptive schedule.
//!
//! With `v_k = gamma*beta_k`, the schedule's recursion
//! `(v_{k+1} - v_k)/gamma = -v_k^2 / (2(v_k + 1))` is the forward-Euler
//! discretization of an ODE whose solution is `1/W(e^{t/2 + c})`, `W` being
//! the Lambert-W function. The solution is convex and decreasing, so Euler
//! stays below it, which yields computable upper bounds on `beta_k` and on
//! the expected squared error. These are diagnostics: the solver never
//! reads them.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum BoundsError {
    #[error("lambert_w needs a nonnegative argument, got {0}")]
    DomainError(f64),
    #[error("bound parameters must be positive (sigma2 may be zero): {0}")]
    InvalidParams(String),
}

/// Principal-branch Lambert-W on the nonnegative axis: the `w >= 0` with
/// `w * e^w = x`.
///
/// Halley iteration from `ln(1 + x)` (small `x`) or the asymptotic guess
/// `ln x - ln ln x` (large `x`); converges to
/// `|w*e^w - x| <= 1e-12 * max(1, x)` in a handful of steps.
pub fn lambert_w(x: f64) -> Result<f64, BoundsError> {
    if x.is_nan() || x < 0.0 {
        return Err(BoundsError::DomainError(x));
    }
    if x == 0.0 {
        return Ok(0.0);
    }
    let mut w = if x < 3.0 { x.ln_1p() } else { x.ln() - x.ln().ln() };
    if w <= 0.0 {
        // ln x - ln ln x can undershoot just above x = e; any positive
        // point works as a start.
        w = 0.5;
    }
    for _ in 0..50 {
        let ew = w.exp();
        let f = w * ew - x;
        // Halley step for f(w) = w e^w - x.
        let denom = ew * (w + 1.0) - (w + 2.0) * f / (2.0 * w + 2.0);
        let dw = f / denom;
        w -= dw;
        if dw.abs() <= 1e-16 * (1.0 + w.abs()) {
            break;
        }
    }
    Ok(w)
}

/// `W(e^t)` for arbitrary `t`, stable where `e^t` itself overflows.
///
/// For moderate `t` this defers to [`lambert_w`]; beyond that it runs
/// Newton on `w + ln w = t`, which is the same equation in log form.
pub fn lambert_w_exp(t: f64) -> f64 {
    if t <= 700.0 {
        // e^t fits in a double here.
        return lambert_w(t.exp()).expect("e^t is nonnegative");
    }
    let mut w = t - t.ln();
    for _ in 0..50 {
        let f = w + w.ln() - t;
        let dw = f * w / (w + 1.0);
        w -= dw;
        if dw.abs() <= 1e-16 * w {
            break;
        }
    }
    w
}

/// Parameters of the closed-form envelopes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundParams {
    pub gamma: f64,
    pub beta0: f64,
    pub sigma2: f64,
    pub square_norm2: f64,
}

impl BoundParams {
    pub fn new(
        gamma: f64,
        beta0: f64,
        sigma2: f64,
        square_norm2: f64,
    ) -> Result<Self, BoundsError> {
        let ok = gamma > 0.0
            && gamma.is_finite()
            && beta0 > 0.0
            && beta0.is_finite()
            && sigma2 >= 0.0
            && sigma2.is_finite()
            && square_norm2 > 0.0
            && square_norm2.is_finite();
        if !ok {
            return Err(BoundsError::InvalidParams(format!(
                "gamma={gamma}, beta0={beta0}, sigma2={sigma2}, square_norm2={square_norm2}"
            )));
        }
        Ok(Self {
            gamma,
            beta0,
            sigma2,
            square_norm2,
        })
    }

    /// The error envelope `g(k) = sigma^2 / (gamma * W(c * e^{gamma*k/2}))`
    /// with `c = e^{1/(gamma*beta0)} / (gamma*beta0)`.
    ///
    /// The implied iterate bound is
    /// `E||x_k - xhat||^2 <= (2/||A||_sq^2) * g(k)`. Evaluated through the
    /// log-form Lambert-W, so large `k` cannot overflow. For `sigma2 = 0`
    /// the envelope is identically zero (continuity convention); the
    /// noiseless decay is reported by [`noiseless_envelope`] instead.
    pub fn g_bound(&self, k: usize) -> f64 {
        if self.sigma2 == 0.0 {
            return 0.0;
        }
        let v0 = self.gamma * self.beta0;
        let ln_c = 1.0 / v0 - v0.ln();
        let w = lambert_w_exp(0.5 * self.gamma * k as f64 + ln_c);
        self.sigma2 / (self.gamma * w)
    }

    /// The `beta_k` envelope `1 / (gamma * W(e^{gamma*k/2 + c}))` with
    /// `c = 1/(gamma*beta0) - ln(gamma*beta0)`. Dominates the realized
    /// recursion for every `k`, with equality at `k = 0`.
    pub fn beta_bound(&self, k: usize) -> f64 {
        let v0 = self.gamma * self.beta0;
        let c = 1.0 / v0 - v0.ln();
        let w = lambert_w_exp(0.5 * self.gamma * k as f64 + c);
        1.0 / (self.gamma * w)
    }

    /// Iterate bound from the envelope: `(2*sigma^2/||A||_sq^2) * beta_bound(k)`,
    /// an upper bound on `E||x_k - xhat||^2` when the schedule started from
    /// the exact `beta0`.
    pub fn iterate_bound(&self, k: usize) -> f64 {
        2.0 * self.sigma2 / self.square_norm2 * self.beta_bound(k)
    }
}

/// The crude `O(1/k)` envelope on `v_k = gamma*beta_k`:
/// `v_k <= (1/v0 + gamma*k / (2*(v0 + 1)))^{-1}`.
pub fn crude_v_bound(v0: f64, gamma: f64, k: usize) -> f64 {
    1.0 / (1.0 / v0 + gamma * k as f64 / (2.0 * (v0 + 1.0)))
}

/// Noiseless decay of the error envelope,
/// `||A||_sq^2 * e^{-gamma*k/2} * d0`, where `d0` is the initial Bregman
/// distance to the solution. This is the `sigma -> 0` limit of `g(k)`.
pub fn noiseless_envelope(square_norm2: f64, d0: f64, gamma: f64, k: usize) -> f64 {
    square_norm2 * d0 * (-0.5 * gamma * k as f64).exp()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stepsize::StepsizeSchedule;
    use approx::assert_relative_eq;

    /// Bisection oracle for w*e^w = x, independent of the Halley path.
    fn lambert_w_bisect(x: f64) -> f64 {
        let (mut lo, mut hi) = (0.0f64, 1.0f64);
        while hi * hi.exp() < x {
            hi *= 2.0;
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid * mid.exp() > x {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn lambert_w_special_values() {
        assert_eq!(lambert_w(0.0).unwrap(), 0.0);
        assert_relative_eq!(lambert_w(std::f64::consts::E).unwrap(), 1.0, max_relative = 1e-14);
        assert_relative_eq!(
            lambert_w(10.0).unwrap(),
            lambert_w_bisect(10.0),
            max_relative = 1e-12
        );
        assert!(lambert_w(-1.0).is_err());
        assert!(lambert_w(f64::NAN).is_err());
    }

    #[test]
    fn lambert_w_defining_identity_on_log_grid() {
        // x from 1e-8 to 1e30, log-spaced.
        for i in 0..=380 {
            let x = 10f64.powf(-8.0 + i as f64 * 0.1);
            let w = lambert_w(x).unwrap();
            let resid = (w * w.exp() - x).abs();
            assert!(
                resid <= 1e-12 * x.max(1.0),
                "x = {x:e}: w = {w}, residual {resid:e}"
            );
        }
    }

    #[test]
    fn lambert_w_is_monotone() {
        let mut prev = -1.0;
        for i in 0..=380 {
            let x = 10f64.powf(-8.0 + i as f64 * 0.1);
            let w = lambert_w(x).unwrap();
            assert!(w > prev);
            prev = w;
        }
    }

    #[test]
    fn log_form_matches_direct_form_and_scales() {
        for &t in &[0.0f64, 1.0, 10.0, 100.0, 650.0] {
            let direct = lambert_w(t.exp()).unwrap();
            assert_relative_eq!(lambert_w_exp(t), direct, max_relative = 1e-12);
        }
        // Far past the overflow line: check w + ln w = t instead.
        for &t in &[1e3, 1e6, 1e9] {
            let w = lambert_w_exp(t);
            assert_relative_eq!(w + w.ln(), t, max_relative = 1e-14);
        }
    }

    #[test]
    fn g_bound_at_zero_matches_beta0() {
        // W(c) with c = e^{1/v0}/v0 evaluates to exactly 1/v0, so
        // g(0)/sigma^2 = beta0.
        let p = BoundParams::new(0.1, 100.0, 1.0, 1.0).unwrap();
        let g0 = p.g_bound(0);
        assert!(g0 / p.sigma2 >= p.beta0 * (1.0 - 1e-9));
        assert_relative_eq!(g0 / p.sigma2, p.beta0, max_relative = 1e-9);
    }

    #[test]
    fn g_bound_decreases() {
        let p = BoundParams::new(0.1, 1e3, 1.0, 1.0).unwrap();
        let mut prev = f64::INFINITY;
        for k in 0..=10_000 {
            let g = p.g_bound(k);
            assert!(g < prev, "k = {k}");
            prev = g;
        }
    }

    #[test]
    fn g_bound_large_k_asymptotics() {
        // g(k) ~ 2*sigma^2/(gamma^2 * k) up to ln(k)/k corrections.
        let p = BoundParams::new(0.1, 1e3, 1.0, 1.0).unwrap();
        let k = 1_000_000usize;
        let ratio = p.g_bound(k) * p.gamma * p.gamma * k as f64 / (2.0 * p.sigma2);
        assert!((0.8..=1.2).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn zero_noise_returns_zero_envelope() {
        let p = BoundParams::new(0.1, 1e3, 0.0, 4.0).unwrap();
        assert_eq!(p.g_bound(0), 0.0);
        assert_eq!(p.g_bound(1000), 0.0);
        // The noiseless decay is reported separately.
        assert_relative_eq!(
            noiseless_envelope(4.0, 2.0, 0.1, 0),
            8.0,
            max_relative = 1e-12
        );
        assert!(noiseless_envelope(4.0, 2.0, 0.1, 100) < 8.0 * 0.01);
    }

    #[test]
    fn beta_bound_valid_at_start_and_dominates_recursion() {
        let p = BoundParams::new(0.1, 100.0, 1.0, 1.0).unwrap();
        assert!(p.beta_bound(0) >= p.beta0 * (1.0 - 1e-10));

        let params = BoundParams::new(0.5, 50.0, 1.0, 1.0).unwrap();
        let mut schedule = StepsizeSchedule::adaptive(0.5, 50.0).unwrap();
        for k in 0..=10_000usize {
            let beta = schedule.beta().unwrap();
            let bound = params.beta_bound(k);
            assert!(
                beta <= bound * (1.0 + 1e-10),
                "k = {k}: beta {beta} > bound {bound}"
            );
            schedule.advance().unwrap();
        }
    }

    #[test]
    fn g_and_beta_bounds_share_the_same_envelope() {
        // g(k)/sigma^2 equals the beta_k envelope: identical W argument.
        let p = BoundParams::new(0.3, 250.0, 2.5, 7.0).unwrap();
        for &k in &[0usize, 1, 5, 17, 100, 999, 5000, 20_000, 100_000, 1_000_000] {
            assert_relative_eq!(
                p.g_bound(k) / p.sigma2,
                p.beta_bound(k),
                max_relative = 1e-12
            );
        }
    }

    #[test]
    fn crude_bound_dominates_recursion() {
        for &(gamma, beta0) in &[(0.1, 1e3), (0.5, 10.0), (1.0, 1e6)] {
            let v0 = gamma * beta0;
            let mut schedule = StepsizeSchedule::adaptive(gamma, beta0).unwrap();
            for k in 0..=10_000usize {
                let v = gamma * schedule.beta().unwrap();
                let crude = crude_v_bound(v0, gamma, k);
                assert!(v <= crude * (1.0 + 1e-10), "k = {k}: v {v} > crude {crude}");
                schedule.advance().unwrap();
            }
        }
    }

    #[test]
    fn asymptotic_stepsize_ratio_is_order_one() {
        // eta_k versus 2/(2 + gamma*k) at k = 1e4 for gamma = 0.1, v0 = 1e3:
        // a loose sanity band.
        let gamma = 0.1;
        let beta0 = 1e3 / gamma;
        let mut schedule = StepsizeSchedule::adaptive(gamma, beta0).unwrap();
        let k_final = 10_000usize;
        let mut eta = 0.0;
        for _ in 0..=k_final {
            eta = schedule.advance().unwrap();
        }
        let reference = 2.0 / (2.0 + gamma * k_final as f64);
        let ratio = eta / reference;
        assert!((0.5..=2.0).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn invalid_params_rejected() {
        assert!(BoundParams::new(0.0, 1.0, 1.0, 1.0).is_err());
        assert!(BoundParams::new(0.1, 0.0, 1.0, 1.0).is_err());
        assert!(BoundParams::new(0.1, 1.0, -1.0, 1.0).is_err());
        assert!(BoundParams::new(0.1, 1.0, 1.0, 0.0).is_err());
    }
}
