//! The user guide (`book/src`) compiled as rustdoc, so every code snippet
//! in the book is checked by `cargo test --doc` and cannot drift from the
//! library.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}

#[doc = include_str!("../../../book/src/blocked-systems.md")]
pub mod blocked_systems {}

#[doc = include_str!("../../../book/src/sparse-objective.md")]
pub mod sparse_objective {}

#[doc = include_str!("../../../book/src/independent-noise.md")]
pub mod independent_noise {}

#[doc = include_str!("../../../book/src/adaptive-stepsizes.md")]
pub mod adaptive_stepsizes {}

#[doc = include_str!("../../../book/src/convergence-bounds.md")]
pub mod convergence_bounds {}

#[doc = include_str!("../../../book/src/pilot-estimation.md")]
pub mod pilot_estimation {}

#[doc = include_str!("../../../book/src/test-problems.md")]
pub mod test_problems {}

#[doc = include_str!("../../../book/src/experiments.md")]
pub mod experiments {}

#[doc = include_str!("../../../book/src/cli.md")]
pub mod cli {}
