//! Zero-sum percolation games on `Z^d`.
//!
//! A token starts at a lattice point. Each stage Player 1 picks an action
//! `i`, Player 2 answers with `j` after seeing it, the stage payoff
//! `g(z, i, j)` is collected and the token moves by `q(i, j)`. The crate
//! solves the `n`-stage game exactly by backward induction over the
//! reachable cone, builds stationary random payoff environments (including
//! the multi-scale squares field) and runs the Monte Carlo experiments
//! around the value's limit behaviour.
//!
//! The solver is generic over [`Scalar`]; use `f64` for experiments and
//! [`Exact`] (a 64-bit rational) when results must be exact.

pub mod cone;
pub mod error;
pub mod experiments;
pub mod field;
pub mod game;
pub mod oracle;
pub mod prf;
pub mod scalar;
pub mod solver;
pub mod strategy;

pub use cone::{cone_bounding_box, reachable_cone, reachable_cone_with_budget, StageCone, StageLayer};
pub use error::{Error, Result};
pub use field::{
    field_stats, find_complete_squares, is_complete, Environment, EnvironmentModel, FieldStats, PayoffField,
    PayoffMatrix, SquareKind, SquarePlant, SquaresModel,
};
pub use game::{require_oriented, validate_orientation, GameSpec, LatticeBox, LatticePoint};
pub use oracle::{brute_force_game, brute_force_value, BruteForceOutcome};
pub use scalar::Scalar;
pub use solver::{
    hyperplane_zeroed_value, solve, solve_value, solve_value_with, solve_with, value_profile, SolverOptions,
    ValueTable,
};
pub use strategy::{extract_strategy, play, StrategyProfile, Trajectory};

/// Exact rational scalar.
pub type Exact = num_rational::Ratio<i64>;

pub type ValueTable64 = ValueTable<f64>;
pub type ValueTable32 = ValueTable<f32>;
pub type ExactValueTable = ValueTable<Exact>;
