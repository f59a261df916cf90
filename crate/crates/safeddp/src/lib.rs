//! Safety-embedded min-max trajectory optimization.
//!
//! Barrier states turn hard state constraints into extra dynamics, and a
//! two-player zero-sum formulation pits the controller against a
//! worst-case adversary. The solver runs second-order dynamic programming
//! over the augmented game with a two-stage (adversary-first) line
//! search, producing a feedback policy that is robust and strictly safe.
//! A Monte-Carlo harness measures both properties on perturbed or
//! disturbed true systems.
//!
//! Start with [`benchmarks`] for ready-made problems, [`solver::solve`] /
//! [`solver::solve_baseline`] for the optimization itself, and
//! [`montecarlo::evaluate`] for robustness statistics. The `examples/`
//! directory walks through each capability end to end.

pub mod artifacts;
pub mod barrier;
pub mod benchmarks;
pub mod config;
pub mod cost;
pub mod dynamics;
pub mod error;
pub mod models;
pub mod montecarlo;
pub mod solver;
pub mod types;

pub use error::{Error, Result};
pub use types::{GameProblem, RegularizationScheme, SolverOptions, Trajectory};
