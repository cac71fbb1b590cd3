//! The sparsity objective `f(x) = lambda*||x||_1 + 0.5*||x||_2^2`.
//!
//! `f` is 1-strongly convex, so its conjugate `f*` has a 1-Lipschitz
//! gradient, and that gradient is the componentwise soft shrinkage
//! `S_lambda(t) = max(|t| - lambda, 0) * sign(t)`. The Bregman distance
//! `D_f^{x*}(x, y)` with `x = S_lambda(x*)` is the Lyapunov function of the
//! whole solver package, so it lives here next to the shrinkage.

use ndarray::Array1;

/// The objective `f(x) = lambda*||x||_1 + 0.5*||x||_2^2` together with its
/// conjugate and Bregman-distance machinery.
///
/// `lambda = 0` turns every operation into the plain squared-Euclidean
/// case: shrinkage becomes the identity and the Bregman distance becomes
/// `0.5*||x - y||^2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SparseObjective {
    lambda: f64,
}

impl SparseObjective {
    /// New objective with sparsity weight `lambda >= 0`.
    ///
    /// Panics on negative or non-finite `lambda`; a weight is a fixed model
    /// choice, not data, so this is treated as a programming error.
    pub fn new(lambda: f64) -> Self {
        assert!(
            lambda.is_finite() && lambda >= 0.0,
            "sparsity weight must be finite and nonnegative, got {lambda}"
        );
        Self { lambda }
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// Componentwise soft shrinkage, `max(|t| - lambda, 0) * sign(t)`.
    ///
    /// This is `grad f*`, the map from a dual iterate to its primal.
    /// `sign(0) = 0`; the magnitude factor is zero there anyway.
    pub fn soft_shrinkage(&self, xstar: &Array1<f64>) -> Array1<f64> {
        xstar.mapv(|t| shrink_scalar(t, self.lambda))
    }

    /// In-place variant of [`soft_shrinkage`](Self::soft_shrinkage) for the
    /// solver's hot loop.
    pub fn soft_shrinkage_into(&self, xstar: &Array1<f64>, out: &mut Array1<f64>) {
        debug_assert_eq!(xstar.len(), out.len());
        for (o, &t) in out.iter_mut().zip(xstar.iter()) {
            *o = shrink_scalar(t, self.lambda);
        }
    }

    /// `f(x) = lambda*||x||_1 + 0.5*||x||_2^2`.
    pub fn f_value(&self, x: &Array1<f64>) -> f64 {
        let mut l1 = 0.0;
        let mut sq = 0.0;
        for &v in x.iter() {
            l1 += v.abs();
            sq += v * v;
        }
        self.lambda * l1 + 0.5 * sq
    }

    /// Conjugate value `f*(x*) = 0.5*||S_lambda(x*)||_2^2`.
    pub fn conjugate_value(&self, xstar: &Array1<f64>) -> f64 {
        let mut sq = 0.0;
        for &t in xstar.iter() {
            let s = shrink_scalar(t, self.lambda);
            sq += s * s;
        }
        0.5 * sq
    }

    /// Bregman distance `D_f^{x*}(x, y)` where `x = S_lambda(x*)` implicitly.
    ///
    /// Evaluated in the Fenchel form `f*(x*) - <x*, y> + f(y)`, which needs
    /// no subgradient decomposition of `x*`. Rounding can push the result a
    /// hair below zero; it is clamped at 0 because downstream estimators
    /// divide by these values.
    pub fn bregman_distance(&self, xstar: &Array1<f64>, y: &Array1<f64>) -> f64 {
        debug_assert_eq!(xstar.len(), y.len());
        let mut inner = 0.0;
        for (&t, &v) in xstar.iter().zip(y.iter()) {
            inner += t * v;
        }
        let d = self.conjugate_value(xstar) - inner + self.f_value(y);
        d.max(0.0)
    }
}

#[inline]
fn shrink_scalar(t: f64, lambda: f64) -> f64 {
    let mag = t.abs() - lambda;
    if mag > 0.0 {
        mag * t.signum()
    } else {
        0.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use ndarray::array;
    use proptest::prelude::*;

    #[test]
    fn shrinkage_identity_at_zero_lambda() {
        let s = SparseObjective::new(0.0);
        let x = array![2.0, -0.5, 0.0, 3.25];
        assert_eq!(s.soft_shrinkage(&x), x);
    }

    #[test]
    fn shrinkage_componentwise() {
        let s = SparseObjective::new(1.0);
        let x = array![2.0, -0.5, -3.0];
        assert_eq!(s.soft_shrinkage(&x), array![1.0, 0.0, -2.0]);
    }

    #[test]
    fn shrinkage_clamps_boundary_to_zero() {
        let s = SparseObjective::new(1.0);
        assert_eq!(s.soft_shrinkage(&array![1.0]), array![0.0]);
    }

    #[test]
    fn f_value_examples() {
        let s = SparseObjective::new(0.5);
        assert_eq!(s.f_value(&Array1::zeros(4)), 0.0);
        // 0.5*3 + 0.5*5
        assert_relative_eq!(s.f_value(&array![1.0, -2.0]), 4.0);
        let plain = SparseObjective::new(0.0);
        assert_relative_eq!(plain.f_value(&array![3.0, 4.0]), 12.5);
    }

    #[test]
    fn conjugate_examples() {
        let s = SparseObjective::new(1.0);
        assert_eq!(s.conjugate_value(&Array1::zeros(3)), 0.0);
        assert_relative_eq!(s.conjugate_value(&array![2.0, 0.0]), 0.5);
        let plain = SparseObjective::new(0.0);
        assert_relative_eq!(plain.conjugate_value(&array![1.0, 2.0]), 2.5);
    }

    #[test]
    fn bregman_distance_to_self_is_zero() {
        let s = SparseObjective::new(0.7);
        let xstar = array![2.0, -0.1, 0.4];
        let x = s.soft_shrinkage(&xstar);
        assert!(s.bregman_distance(&xstar, &x).abs() < 1e-15);
    }

    #[test]
    fn bregman_plain_case_is_half_squared_distance() {
        let s = SparseObjective::new(0.0);
        let xstar = array![1.0, -2.0];
        let y = array![0.5, 1.0];
        let expect = 0.5 * ((1.0f64 - 0.5).powi(2) + (-2.0f64 - 1.0).powi(2));
        assert_relative_eq!(s.bregman_distance(&xstar, &y), expect, max_relative = 1e-12);
    }

    #[test]
    fn bregman_matches_subgradient_closed_form() {
        // Fenchel form vs 0.5*||x-y||^2 + lambda*(||y||_1 - <s, y>) with
        // x* = x + lambda*s.
        let s = SparseObjective::new(1.0);
        let xstar = array![2.0];
        let y = array![3.0];
        assert_relative_eq!(s.bregman_distance(&xstar, &y), 2.0, max_relative = 1e-12);
    }

    /// Example-2.2-style oracle: splits `x* = x + lambda*s` and evaluates
    /// `0.5*||x-y||^2 + lambda*(||y||_1 - <s,y>)`. Only valid when every
    /// component of `x*` either exceeds `lambda` in magnitude (so `s` is the
    /// sign) or lies within `[-lambda, lambda]` (so `x_j = 0`, `s_j = t/lambda`).
    fn bregman_subgradient_form(lambda: f64, xstar: &Array1<f64>, y: &Array1<f64>) -> f64 {
        let x = xstar.mapv(|t| shrink_scalar(t, lambda));
        let half_sq: f64 = x
            .iter()
            .zip(y.iter())
            .map(|(&a, &b)| (a - b) * (a - b))
            .sum::<f64>()
            * 0.5;
        if lambda == 0.0 {
            return half_sq;
        }
        let s = ndarray::Zip::from(xstar).and(&x).map_collect(|&t, &xv| (t - xv) / lambda);
        let l1: f64 = y.iter().map(|v| v.abs()).sum();
        let inner: f64 = s.iter().zip(y.iter()).map(|(&a, &b)| a * b).sum();
        half_sq + lambda * (l1 - inner)
    }

    /// Two vectors of one shared length.
    fn vec_pair() -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
        (1usize..8).prop_flat_map(|len| {
            (
                proptest::collection::vec(-5.0f64..5.0, len),
                proptest::collection::vec(-5.0f64..5.0, len),
            )
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        #[test]
        fn fenchel_and_subgradient_forms_agree(
            lambda in 0.0f64..2.0,
            (xs, ys) in vec_pair(),
        ) {
            let s = SparseObjective::new(lambda);
            let xstar = Array1::from_vec(xs);
            let y = Array1::from_vec(ys);
            let a = s.bregman_distance(&xstar, &y);
            let b = bregman_subgradient_form(lambda, &xstar, &y);
            let scale = 1.0f64.max(a.abs()).max(b.abs());
            prop_assert!((a - b).abs() <= 1e-10 * scale);
        }

        #[test]
        fn bregman_lower_bound_and_nonnegativity(
            lambda in 0.0f64..2.0,
            (xs, ys) in vec_pair(),
        ) {
            let s = SparseObjective::new(lambda);
            let xstar = Array1::from_vec(xs);
            let y = Array1::from_vec(ys);
            let d = s.bregman_distance(&xstar, &y);
            prop_assert!(d >= 0.0);
            // 1-strong convexity: D >= 0.5*||S(x*) - y||^2.
            let x = s.soft_shrinkage(&xstar);
            let half_sq: f64 = x.iter().zip(y.iter())
                .map(|(&a, &b)| (a - b) * (a - b)).sum::<f64>() * 0.5;
            prop_assert!(d >= half_sq - 1e-10);
        }

        #[test]
        fn conjugate_gradient_is_one_lipschitz(
            lambda in 0.0f64..2.0,
            (xs, ys) in vec_pair(),
        ) {
            let s = SparseObjective::new(lambda);
            let a = Array1::from_vec(xs);
            let b = Array1::from_vec(ys);
            let sa = s.soft_shrinkage(&a);
            let sb = s.soft_shrinkage(&b);
            let num: f64 = sa.iter().zip(sb.iter()).map(|(&u, &v)| (u - v) * (u - v)).sum();
            let den: f64 = a.iter().zip(b.iter()).map(|(&u, &v)| (u - v) * (u - v)).sum();
            prop_assert!(num <= den + 1e-12);
        }

        #[test]
        fn fenchel_equality_at_shrinkage_point(
            lambda in 0.0f64..2.0,
            xs in proptest::collection::vec(-5.0f64..5.0, 1..8),
        ) {
            let s = SparseObjective::new(lambda);
            let xstar = Array1::from_vec(xs);
            let x = s.soft_shrinkage(&xstar);
            let lhs = s.f_value(&x) + s.conjugate_value(&xstar);
            let rhs: f64 = x.iter().zip(xstar.iter()).map(|(&a, &b)| a * b).sum();
            let scale = 1.0f64.max(lhs.abs()).max(rhs.abs());
            prop_assert!((lhs - rhs).abs() <= 1e-10 * scale);
        }
    }
}
